"""Run configuration and its text format.

The file is UTF-8 INI-style text read with :mod:`configparser`::

    # comments start with '#', on their own line or after a value
    [problem]
    kind = toy            # toy | quadratic | deblur | superres | file
    [solver]
    schemes = gdrga, pdrga, ppga
    eta_x = auto          # number, or auto = 0.99 x the theorem bound
    eta_x.ppga = 0.06     # per-scheme override (flat dotted key)

Keys are flat and may contain dots; every key is optional and unknown
sections or keys are rejected. ``RunConfig.to_text`` writes every key, so
``RunConfig.from_text(cfg.to_text()) == cfg``.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigParse

__all__ = ["RunConfig", "ProblemSection", "SolverSection", "ImagingSection", "DiagnosticsSection", "OutputSection", "SCHEMES"]

SCHEMES = ("gdrga", "pdrga", "ppga")


def _opt(default, kind, key=None):
    md = {"kind": kind}
    if key:
        md["key"] = key
    if isinstance(default, (list, tuple)):
        return field(default_factory=lambda: list(default), metadata=md)
    return field(default=default, metadata=md)


@dataclass
class ProblemSection:
    kind: str = _opt("toy", "str")
    concavity: str = _opt("coupling", "str")
    a: float = _opt(1.0, "float")
    b: float = _opt(1.0, "float")
    c: float = _opt(0.5, "float")
    path: Optional[str] = _opt(None, "optstr")


@dataclass
class SolverSection:
    schemes: list = _opt(["gdrga", "pdrga", "ppga"], "strlist")
    # float, or the string "auto"
    eta_x: object = _opt("auto", "auto")
    eta_x_gdrga: object = _opt(None, "optauto", "eta_x.gdrga")
    eta_x_pdrga: object = _opt(None, "optauto", "eta_x.pdrga")
    eta_x_ppga: object = _opt(None, "optauto", "eta_x.ppga")
    tau: float = _opt(1.0, "float")
    eta_y: Optional[float] = _opt(None, "optfloat")
    max_iter: int = _opt(1000, "int")
    eps: Optional[float] = _opt(None, "optfloat")
    x0: list = _opt([-5.0], "floatlist")
    y0: list = _opt([5.0], "floatlist")
    oracle_tol: float = _opt(1e-10, "float")
    allow_nonunique_prox: bool = _opt(False, "bool")

    def eta_for(self, scheme: str):
        v = getattr(self, f"eta_x_{scheme}")
        return self.eta_x if v is None else v


@dataclass
class ImagingSection:
    size: int = _opt(64, "int")
    sigma: float = _opt(0.03, "float")
    lam: object = _opt("auto", "auto")
    factor: int = _opt(2, "int")
    kernel: str = _opt("gaussian", "str")
    kernel_size: int = _opt(9, "int", "kernel.size")
    kernel_std: float = _opt(2.0, "float", "kernel.std")
    g: str = _opt("soft_threshold", "str")
    g_alpha: float = _opt(0.003, "float", "g.alpha")
    g_gamma: float = _opt(4.0, "float", "g.gamma")
    g_c: float = _opt(1.0, "float", "g.c")
    noise: bool = _opt(True, "bool")
    noise_seed: int = _opt(0, "int", "noise.seed")
    init: str = _opt("zero", "str")  # zero | observation
    enforce_lambda_cap: bool = _opt(True, "bool")
    scheme: str = _opt("pdrga", "str")
    max_iter: int = _opt(500, "int")


@dataclass
class DiagnosticsSection:
    enabled: bool = _opt(True, "bool")
    epsilons: list = _opt([1e-1, 1e-2], "floatlist")
    margins_csv: bool = _opt(False, "bool")


@dataclass
class OutputSection:
    dir: str = _opt("out", "str")
    seed: int = _opt(0, "int")


_SECTIONS = {
    "problem": ProblemSection,
    "solver": SolverSection,
    "imaging": ImagingSection,
    "diagnostics": DiagnosticsSection,
    "output": OutputSection,
}


def _fmt(v, kind) -> str:
    if v is None:
        return "none"
    if kind == "bool":
        return "true" if v else "false"
    if kind == "floatlist":
        return ", ".join(repr(float(x)) for x in v)
    if kind == "strlist":
        return ", ".join(v)
    if kind in ("float", "optfloat"):
        return repr(float(v))
    if kind in ("auto", "optauto"):
        return v if v == "auto" else repr(float(v))
    return str(v)


def _parse(text: str, kind: str, where: str):
    t = text.strip()
    try:
        if kind.startswith("opt") and t.lower() == "none":
            return None
        if kind in ("str", "optstr"):
            return t
        if kind == "int":
            return int(t)
        if kind in ("float", "optfloat"):
            return float(t)
        if kind == "bool":
            low = t.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {t!r}")
        if kind in ("auto", "optauto"):
            return "auto" if t.lower() == "auto" else float(t)
        if kind == "floatlist":
            return [float(x) for x in t.split(",") if x.strip()]
        if kind == "strlist":
            return [x.strip() for x in t.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigParse(f"{where}: {exc}") from exc
    raise ConfigParse(f"{where}: unknown value kind {kind}")


def _keymap(cls):
    return {f.metadata.get("key", f.name): f for f in dataclasses.fields(cls)}


@dataclass
class RunConfig:
    problem: ProblemSection = field(default_factory=ProblemSection)
    solver: SolverSection = field(default_factory=SolverSection)
    imaging: ImagingSection = field(default_factory=ImagingSection)
    diagnostics: DiagnosticsSection = field(default_factory=DiagnosticsSection)
    output: OutputSection = field(default_factory=OutputSection)

    def to_text(self) -> str:
        lines = []
        for sname, cls in _SECTIONS.items():
            sec = getattr(self, sname)
            lines.append(f"[{sname}]")
            for key, f in _keymap(cls).items():
                lines.append(f"{key} = {_fmt(getattr(sec, f.name), f.metadata['kind'])}")
            lines.append("")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        cp = configparser.ConfigParser(
            interpolation=None,
            comment_prefixes=("#",),
            inline_comment_prefixes=("#",),
            delimiters=("=",),
            default_section="__defaults__",
        )
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigParse(str(exc)) from exc
        out = cls()
        for sname in cp.sections():
            if sname not in _SECTIONS:
                raise ConfigParse(f"unknown section [{sname}]")
            km = _keymap(_SECTIONS[sname])
            sec = getattr(out, sname)
            for key, raw in cp.items(sname):
                if key not in km:
                    raise ConfigParse(f"unknown key {key!r} in [{sname}]")
                f = km[key]
                setattr(sec, f.name, _parse(raw, f.metadata["kind"], f"[{sname}] {key}"))
        out.check()
        return out

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigParse(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    def check(self) -> None:
        """Semantic validation beyond parsing."""
        bad = [s for s in self.solver.schemes if s not in SCHEMES]
        if bad:
            raise ConfigParse(f"unknown scheme(s) {bad}; choose from {SCHEMES}")
        if self.problem.kind not in ("toy", "quadratic", "deblur", "superres", "file"):
            raise ConfigParse(f"unknown problem kind {self.problem.kind!r}")
        if self.problem.kind == "file" and not self.problem.path:
            raise ConfigParse("problem kind 'file' needs problem.path")
        if self.solver.max_iter < 0 or self.imaging.max_iter < 0:
            raise ConfigParse("max_iter must be nonnegative")
