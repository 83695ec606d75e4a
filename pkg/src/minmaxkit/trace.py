"""Iterate traces annotated with the quantities used by the analysis."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .oracle import InnerOracle
from .problem import MinMaxProblem

__all__ = ["TraceRecord", "IterateTrace", "make_record", "annotate", "trace_to_csv", "read_trace_csv", "with_stored_values"]


@dataclass(frozen=True)
class TraceRecord:
    k: int
    x: np.ndarray
    y: np.ndarray
    phi: float
    grad_phi: np.ndarray
    grad_norm: float
    delta: float
    y_star: np.ndarray


@dataclass
class IterateTrace:
    """Records indexed contiguously from 0, plus run metadata.

    ``y_error`` bounds ``||y_star_k - y*(x_k)||`` (0 for closed forms) and
    is what the certificate checks turn into explicit slack.
    """

    records: list
    scheme: str
    eta_x: float
    eta_y: float
    tau: float
    problem: str
    oracle_tol: float
    y_error: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    @property
    def xs(self) -> np.ndarray:
        return np.array([r.x for r in self.records])

    @property
    def ys(self) -> np.ndarray:
        return np.array([r.y for r in self.records])

    @property
    def phis(self) -> np.ndarray:
        return np.array([r.phi for r in self.records])

    @property
    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])

    @property
    def deltas(self) -> np.ndarray:
        return np.array([r.delta for r in self.records])

    def ystar_steps_sq(self) -> np.ndarray:
        """``||y*_{k+1} - y*_k||^2`` for k = 0..K-1."""
        ys = [r.y_star for r in self.records]
        return np.array([float(np.sum((ys[k + 1] - ys[k]) ** 2)) for k in range(len(ys) - 1)])

    def ystar_gap_sq(self) -> np.ndarray:
        """``||y*_{k+1} - y_k||^2`` for k = 0..K-1."""
        r = self.records
        return np.array([float(np.sum((r[k + 1].y_star - r[k].y) ** 2)) for k in range(len(r) - 1)])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


def make_record(
    p: MinMaxProblem,
    oracle: InnerOracle,
    k: int,
    x,
    y,
    scheme: str,
    eta_x: float,
    prev: Optional[TraceRecord] = None,
) -> TraceRecord:
    """Evaluate y*, phi, grad phi and delta at one iterate.

    For PD-RGA on problems that are nonsmooth in x, the gradient recorded at
    ``x_{k+1}`` is the subgradient selected by the proximal step,
    ``(x_k - x_{k+1})/eta_x - grad_smooth(x_{k+1}, y_k) + grad_smooth(x_{k+1}, y*_{k+1})``,
    which is the element the descent analysis works with.
    """
    res = oracle(x)
    grad = res.grad_phi
    if not p.smooth_x and scheme == "pdrga" and prev is not None:
        grad = (prev.x - x) / eta_x - p.gx_smooth(x, prev.y) + p.gx_smooth(x, res.y_star)
    gn = float(np.linalg.norm(grad))
    delta = float(np.sum((res.y_star - y) ** 2))
    return TraceRecord(
        k=k,
        x=np.array(x, dtype=float),
        y=np.array(y, dtype=float),
        phi=res.phi,
        grad_phi=grad,
        grad_norm=gn,
        delta=delta,
        y_star=res.y_star,
    )


def annotate(p: MinMaxProblem, xs, ys, scheme: str, eta_x: float, eta_y: float, tau: float, oracle_tol=1e-10, meta=None):
    """Build an :class:`IterateTrace` from raw iterates (e.g. a stored trace)."""
    oracle = InnerOracle(p, tol=oracle_tol)
    recs = []
    prev = None
    for k, (x, y) in enumerate(zip(xs, ys)):
        prev = make_record(p, oracle, k, np.asarray(x, dtype=float), np.asarray(y, dtype=float), scheme, eta_x, prev)
        recs.append(prev)
    return IterateTrace(
        records=recs,
        scheme=scheme,
        eta_x=eta_x,
        eta_y=eta_y,
        tau=tau,
        problem=p.name,
        oracle_tol=oracle_tol,
        y_error=oracle.y_error,
        meta=dict(meta or {}),
    )


def trace_to_csv(trace: IterateTrace) -> str:
    """Columns ``k, x0..x{d-1}, y0..y{n-1}, phi, grad_norm, delta``; floats by repr."""
    if not trace.records:
        raise ValueError("empty trace")
    d = trace.records[0].x.size
    n = trace.records[0].y.size
    head = ["k"] + [f"x{i}" for i in range(d)] + [f"y{j}" for j in range(n)] + ["phi", "grad_norm", "delta"]
    lines = [",".join(head)]
    for r in trace.records:
        vals = [str(r.k)] + [repr(float(v)) for v in r.x] + [repr(float(v)) for v in r.y]
        vals += [repr(float(r.phi)), repr(float(r.grad_norm)), repr(float(r.delta))]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def read_trace_csv(text: str) -> dict:
    """Parse :func:`trace_to_csv` output into arrays ``k, x, y, phi, grad_norm, delta``."""
    rows = [ln.split(",") for ln in text.strip().splitlines()]
    if not rows or rows[0][0] != "k":
        raise ValueError("not a trace CSV (missing header)")
    head = rows[0]
    d = sum(1 for h in head if h.startswith("x"))
    n = sum(1 for h in head if h.startswith("y"))
    if head[-3:] != ["phi", "grad_norm", "delta"] or len(head) != d + n + 4:
        raise ValueError("unexpected trace CSV columns")
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(head))
    k = data[:, 0].astype(int)
    if not np.array_equal(k, np.arange(len(k))):
        raise ValueError("trace records must be indexed contiguously from 0")
    return {
        "k": k,
        "x": data[:, 1 : 1 + d],
        "y": data[:, 1 + d : 1 + d + n],
        "phi": data[:, -3],
        "grad_norm": data[:, -2],
        "delta": data[:, -1],
    }


def with_stored_values(fresh: IterateTrace, stored: dict) -> IterateTrace:
    """Replace phi, grad norm and delta of a re-annotated trace by stored values.

    Certifying the stored numbers (rather than fresh ones) is what lets a
    corrupted file fail; y* and the gradient vectors come from ``fresh``.
    """
    recs = []
    for r, phi, gn, dl in zip(fresh.records, stored["phi"], stored["grad_norm"], stored["delta"]):
        g = r.grad_phi if r.grad_norm == 0 else r.grad_phi * (gn / r.grad_norm)
        recs.append(TraceRecord(r.k, r.x, r.y, float(phi), g, float(gn), float(dl), r.y_star))
    out = IterateTrace(**{**fresh.__dict__, "records": recs})
    return out
