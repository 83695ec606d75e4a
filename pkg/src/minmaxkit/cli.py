"""Command-line front end: ``minmaxkit {run,tables,restore,validate,certify}``.

Exit codes: 0 success, 2 a certificate (or validation) failed, 1 any error.
Artifacts (CSV, JSON, PGM) are byte-deterministic for a fixed config and
seed; wall-clock times are printed to stdout only.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .config import SCHEMES, RunConfig
from .diagnostics import json_safe, certify, stationarity_report
from .errors import ConfigParse, MinMaxError
from .imaging import (
    ImagingProblem,
    build_imaging_minmax,
    lambda_cap,
    observe,
    psnr,
    synthetic_image,
    write_csv_image,
    write_pgm,
)
from .linops import gaussian_kernel, identity_operator, make_blur_operator, make_downsampling_operator, triangle_kernel
from .problem import MinMaxProblem, SmoothnessConstants, validate_problem
from .problems import load_problem_file, quadratic_problem, toy_problem
from .prox import ProxSpec
from .solvers import StepSizeConfig, run_solver
from .stepsize import auto_eta_x, table_blockwise, table_jointly_lipschitz
from .trace import annotate, read_trace_csv, trace_to_csv, with_stored_values

logger = logging.getLogger("minmaxkit")

EXIT_OK, EXIT_ERROR, EXIT_CERT = 0, 1, 2


def worker_count(n_jobs: int) -> int:
    """Pool size: ``MINMAXKIT_THREADS`` (if set) caps the CPU count."""
    cap = os.cpu_count() or 1
    env = os.environ.get("MINMAXKIT_THREADS")
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            logger.warning("ignoring non-integer MINMAXKIT_THREADS=%r", env)
    return max(1, min(cap, n_jobs))


# --------------------------------------------------------------------------
# building problems from a config


@dataclass
class Built:
    problem: MinMaxProblem
    x0: np.ndarray
    y0: np.ndarray
    imaging: Optional[ImagingProblem] = None
    truth: Optional[np.ndarray] = None
    observation: Optional[np.ndarray] = None


def _g_spec(sec) -> ProxSpec:
    kinds = {
        "soft_threshold": lambda: ProxSpec.soft_threshold(sec.g_alpha),
        "mcp": lambda: ProxSpec.mcp(sec.g_alpha, sec.g_gamma),
        "quadratic": lambda: ProxSpec.quadratic(sec.g_c),
        "zero": ProxSpec.zero,
    }
    if sec.g not in kinds:
        raise ConfigParse(f"unknown imaging regularizer {sec.g!r}; choose from {sorted(kinds)}")
    return kinds[sec.g]()


def _kernel(sec):
    if sec.kernel == "gaussian":
        return gaussian_kernel(sec.kernel_size, sec.kernel_std)
    if sec.kernel == "uniform":
        return np.full((sec.kernel_size, sec.kernel_size), 1.0 / sec.kernel_size**2)
    if sec.kernel == "triangle":
        return triangle_kernel(sec.kernel_size)
    if sec.kernel == "delta":
        return np.ones((1, 1))
    raise ConfigParse(f"unknown kernel {sec.kernel!r}")


def build_imaging(cfg: RunConfig, kind: str, seed: int) -> Built:
    """Deblurring uses the configured kernel; super-resolution uses the 4x4 triangle anti-aliasing kernel."""
    sec = cfg.imaging
    shape = (sec.size, sec.size)
    truth = synthetic_image(sec.size)
    if kind == "deblur" and sec.kernel == "delta":
        A = identity_operator(shape[0] * shape[1])  # exact, no FFT round-off
    elif kind == "deblur":
        A = make_blur_operator(_kernel(sec), shape)
    else:
        A = make_downsampling_operator(sec.factor, shape, triangle_kernel(4))
    nA = A.norm()
    b = observe(A, truth, sec.sigma if sec.noise else 0.0, seed)
    lam = 0.99 * lambda_cap(sec.sigma, nA) if sec.lam == "auto" else float(sec.lam)
    ip = ImagingProblem(A, b, sec.sigma, lam, _g_spec(sec), shape, sec.enforce_lambda_cap, nA)
    p = build_imaging_minmax(ip)
    if kind == "deblur":
        obs_img = b.reshape(shape)
    else:
        small = (shape[0] // sec.factor, shape[1] // sec.factor)
        obs_img = np.kron(b.reshape(small), np.ones((sec.factor, sec.factor)))
    if sec.init == "zero":
        x0 = np.zeros(p.d)
    elif sec.init == "observation":
        x0 = obs_img.reshape(-1).copy()
    else:
        raise ConfigParse(f"unknown imaging init {sec.init!r}")
    return Built(p, x0, np.zeros(p.n), ip, truth, b)


def _broadcast(v, dim, name):
    v = np.asarray(v, dtype=float)
    if v.size == 1:
        return np.full(dim, float(v[0]))
    if v.size != dim:
        raise ConfigParse(f"{name} has {v.size} entries, problem dimension is {dim}")
    return v


def build(cfg: RunConfig, seed: int) -> Built:
    kind = cfg.problem.kind
    if kind in ("deblur", "superres"):
        return build_imaging(cfg, kind, seed)
    if kind == "toy":
        p = toy_problem(cfg.problem.concavity)
    elif kind == "quadratic":
        p = quadratic_problem(cfg.problem.a, cfg.problem.b, cfg.problem.c)
    elif kind == "file":
        p = load_problem_file(cfg.problem.path)
    else:
        raise ConfigParse(f"unknown problem kind {kind!r}")
    return Built(p, _broadcast(cfg.solver.x0, p.d, "x0"), _broadcast(cfg.solver.y0, p.n, "y0"))


def step_config(cfg: RunConfig, p: MinMaxProblem, scheme: str, auto: bool = False) -> StepSizeConfig:
    c = p.constants
    sol = cfg.solver
    tau = sol.tau if sol.eta_y is None else sol.eta_y * c.L_yy
    eta = "auto" if auto else sol.eta_for(scheme)
    eta_x = auto_eta_x(c, tau, scheme) if eta == "auto" else float(eta)
    return StepSizeConfig.from_constants(c, eta_x, eta_y=sol.eta_y, tau=None if sol.eta_y is not None else tau)


# --------------------------------------------------------------------------
# artifacts


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dump(obj) -> str:
    return json.dumps(json_safe(obj), indent=2, allow_nan=False) + "\n"


def _run_one(built: Built, scheme: str, cfg: RunConfig, scfg: StepSizeConfig, override: bool, max_iter: int):
    t0 = time.perf_counter()
    tr = run_solver(
        built.problem,
        scheme,
        scfg,
        built.x0,
        built.y0,
        max_iter=max_iter,
        eps=cfg.solver.eps,
        oracle_tol=cfg.solver.oracle_tol,
        allow_nonunique_prox=override,
    )
    rep = None
    if cfg.diagnostics.enabled:
        rep = certify(built.problem, tr)
        C = rep.summary.get("C")
        rep.summary["stationarity"] = [stationarity_report(tr, e, C).as_dict() for e in cfg.diagnostics.epsilons]
    return tr, rep, time.perf_counter() - t0


def _run_payload(tr, scheme, scfg):
    return {
        "scheme": scheme,
        "problem": tr.problem,
        "eta_x": scfg.eta_x,
        "eta_y": scfg.eta_y,
        "tau": scfg.tau,
        "oracle_tol": tr.oracle_tol,
        "steps": tr.meta["steps"],
        "stopped": tr.meta["stopped"],
        "solver_evaluations": tr.meta["solver_evaluations"],
        "diagnostic_evaluations": tr.meta["diagnostic_evaluations"],
        "final_x": tr.final.x.tolist() if tr.final.x.size <= 16 else None,
        "final_grad_norm": tr.final.grad_norm,
        "final_phi": tr.final.phi,
    }


def cmd_run(cfg: RunConfig, out: Path, seed: int, override: bool, auto: bool) -> int:
    schemes = cfg.solver.schemes
    if not schemes:
        sys.stderr.write(make_parser().format_usage())
        print("error: no schemes configured; set [solver] schemes = gdrga, pdrga, ppga", file=sys.stderr)
        return EXIT_ERROR
    built = build(cfg, seed)
    override = override or cfg.solver.allow_nonunique_prox
    scfgs = {s: step_config(cfg, built.problem, s, auto) for s in schemes}
    with ThreadPoolExecutor(max_workers=worker_count(len(schemes))) as pool:
        futs = {s: pool.submit(_run_one, built, s, cfg, scfgs[s], override, cfg.solver.max_iter) for s in schemes}
        results = {s: futs[s].result() for s in schemes}
    status = EXIT_OK
    summary = {"config": cfg.to_text(), "seed": seed, "runs": []}
    for s in schemes:
        tr, rep, wall = results[s]
        _write(out / f"trace_{s}.csv", trace_to_csv(tr))
        payload = _run_payload(tr, s, scfgs[s])
        if rep is not None:
            _write(out / f"certificate_{s}.json", rep.to_json())
            if cfg.diagnostics.margins_csv:
                _write(out / f"margins_{s}.csv", rep.margins_csv())
            payload["certificates_passed"] = rep.passed
            payload["skipped_checks"] = [c.name for c in rep.checks if c.skipped]
            if not rep.passed:
                status = EXIT_CERT
        summary["runs"].append(payload)
        cert = "n/a" if rep is None else ("pass" if rep.passed else "FAIL")
        xs = np.array2string(tr.final.x[:4], precision=8)
        print(
            f"{s}: problem={tr.problem} eta_x={scfgs[s].eta_x:.6g} steps={tr.meta['steps']} "
            f"x_final={xs} |grad phi|={tr.final.grad_norm:.3e} certificates={cert} ({wall:.3f}s)"
        )
    _write(out / "summary.json", _dump(summary))
    return status


def _parse_floats(text: Optional[str]) -> list:
    if text is None:
        return [1.0, 2.0, 5.0, 10.0, 100.0]
    return [float(v) for v in text.split(",") if v.strip()]


def _constants_from_file(path) -> SmoothnessConstants:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return SmoothnessConstants(**{k: float(v) for k, v in data.items()})
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigParse(f"cannot read constants file {path}: {exc}") from exc


def cmd_tables(cfg: RunConfig, out: Path, kappas: list, constants: Optional[SmoothnessConstants], tau: float) -> int:
    rows = ["kappa_y,bound_lin,bound_bot,bound_ours"]
    for k in kappas:
        lin, bot, ours = table_jointly_lipschitz(k)
        rows.append(f"{k!r},{lin!r},{bot!r},{ours!r}")
    t1 = "\n".join(rows) + "\n"
    c = constants if constants is not None else build(cfg, 0).problem.constants
    row = table_blockwise(c, tau)
    dom = "" if row.dominance is None else str(row.dominance).lower()
    consts = ";".join(f"{k}={v!r}" for k, v in c.as_dict().items())
    t2 = f"constants,bound_cohen,bound_ours,dominance\n{consts},{row.bound_prior!r},{row.bound_ours!r},{dom}\n"
    _write(out / "table_jointly_lipschitz.csv", t1)
    _write(out / "table_blockwise.csv", t2)
    sys.stdout.write(t1 + "\n" + t2)
    return EXIT_OK


def cmd_restore(cfg: RunConfig, out: Path, seed: int, override: bool) -> int:
    kind = cfg.problem.kind if cfg.problem.kind in ("deblur", "superres") else "deblur"
    built = build_imaging(cfg, kind, seed)
    sec = cfg.imaging
    p = built.problem
    scheme = sec.scheme
    if scheme not in SCHEMES:
        raise ConfigParse(f"unknown imaging scheme {scheme!r}")
    scfg = step_config(cfg, p, scheme, auto=cfg.solver.eta_for(scheme) == "auto")
    tr, rep, wall = _run_one(built, scheme, cfg, scfg, override or cfg.solver.allow_nonunique_prox, sec.max_iter)
    shape = (sec.size, sec.size)
    truth = built.truth
    recon = tr.final.x.reshape(shape)
    if kind == "deblur":
        obs_img = built.observation.reshape(shape)
        obs_small = obs_img
    else:
        small = (sec.size // sec.factor, sec.size // sec.factor)
        obs_small = built.observation.reshape(small)
        obs_img = np.kron(obs_small, np.ones((sec.factor, sec.factor)))
    p_obs = psnr(truth, obs_img)
    p_rec = psnr(truth, recon)
    gain = None if (math.isinf(p_obs) and math.isinf(p_rec)) else p_rec - p_obs
    for name, img in (("truth", truth), ("observation", obs_small), ("reconstruction", recon)):
        out.mkdir(parents=True, exist_ok=True)
        write_pgm(out / f"{name}.pgm", img)
        write_csv_image(out / f"{name}.csv", img)
    gn = "k,grad_norm\n" + "".join(f"{r.k},{r.grad_norm!r}\n" for r in tr.records)
    _write(out / "grad_norm.csv", gn)
    res = {
        "kind": kind,
        "psnr_observation": p_obs,
        "psnr_reconstruction": p_rec,
        "psnr_gain": gain,
        "lambda": built.imaging.lam,
        "lambda_cap": built.imaging.cap,
        "norm_A": built.imaging.norm_A,
        "run": _run_payload(tr, scheme, scfg),
        "grad_norm_initial": tr.records[0].grad_norm,
        "grad_norm_final": tr.final.grad_norm,
    }
    status = EXIT_OK
    if rep is not None:
        _write(out / "certificate.json", rep.to_json())
        res["certificates_passed"] = rep.passed
        if not rep.passed:
            status = EXIT_CERT
    _write(out / "restore.json", _dump(res))
    print(
        f"restore[{kind}]: PSNR obs={p_obs:.3f} dB recon={p_rec:.3f} dB "
        f"|grad phi| {tr.records[0].grad_norm:.3e} -> {tr.final.grad_norm:.3e} ({wall:.2f}s)"
    )
    return status


def _samples(p: MinMaxProblem, n: int, seed: int, radius: float = 10.0):
    rng = np.random.default_rng(seed)
    return [(rng.uniform(-radius, radius, p.d), rng.uniform(-radius, radius, p.n)) for _ in range(n)]


def cmd_validate(cfg: RunConfig, out: Path, seed: int, trials: int) -> int:
    built = build(cfg, seed)
    rep = validate_problem(built.problem, _samples(built.problem, 50, seed), trials=trials, seed=seed)
    d = {"problem": built.problem.name, **rep.as_dict()}
    _write(out / "validation.json", _dump(d))
    ratios = ", ".join(f"{k}={v:.4g}" for k, v in sorted(rep.ratios.items()))
    print(f"validate {built.problem.name}: {'ok' if rep.ok else 'VIOLATED'} ({ratios})")
    return EXIT_OK if rep.ok else EXIT_CERT


def cmd_certify(cfg: RunConfig, out: Path, seed: int, trace_path: Path, scheme: Optional[str], auto: bool) -> int:
    if scheme is None:
        stem = trace_path.stem
        scheme = stem.split("_")[-1] if stem.startswith("trace_") else None
    if scheme not in SCHEMES:
        raise ConfigParse("cannot infer the scheme; pass --scheme")
    try:
        stored = read_trace_csv(trace_path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigParse(f"cannot read trace {trace_path}: {exc}") from exc
    built = build(cfg, seed)
    p = built.problem
    scfg = step_config(cfg, p, scheme, auto)
    fresh = annotate(p, stored["x"], stored["y"], scheme, scfg.eta_x, scfg.eta_y, scfg.tau, cfg.solver.oracle_tol)
    tr = with_stored_values(fresh, stored)
    rep = certify(p, tr)
    _write(out / f"certify_{scheme}.json", rep.to_json())
    failed = [c.name for c in rep.checks if not c.passed]
    print(f"certify {trace_path.name} ({scheme}): {'pass' if rep.passed else 'FAIL ' + ', '.join(failed)}")
    return EXIT_OK if rep.passed else EXIT_CERT


# --------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="minmaxkit", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run configuration file")
    common.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    common.add_argument("--seed", type=int, help="seed (overrides [output] seed)")
    common.add_argument(
        "--override-assumption4",
        "--allow-nonunique-prox",
        dest="allow_nonunique_prox",
        action="store_true",
        help="allow eta_x * rho >= 1 for PD-RGA (logged)",
    )
    common.add_argument("--auto-steps", action="store_true", help="use 0.99 x the theorem bound for every scheme")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run solvers, write traces and certificates")
    t = sub.add_parser("tables", parents=[common], help="admissible step-size tables as CSV")
    t.add_argument("--kappa", help="comma-separated kappa_y values (empty string for none)")
    t.add_argument("--constants", type=Path, help="JSON file with L_xx, L_xy, L_yx, L_yy, mu, rho")
    t.add_argument("--tau", type=float, default=1.0)
    sub.add_parser("restore", parents=[common], help="imaging restoration experiment")
    v = sub.add_parser("validate", parents=[common], help="spot-check the declared constants")
    v.add_argument("--trials", type=int, default=1000)
    c = sub.add_parser("certify", parents=[common], help="re-run diagnostics on a stored trace")
    c.add_argument("--trace", type=Path, required=True)
    c.add_argument("--scheme", choices=SCHEMES)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config) if args.config else RunConfig()
        out = args.out if args.out is not None else Path(cfg.output.dir)
        seed = args.seed if args.seed is not None else cfg.output.seed
        if args.command == "run":
            return cmd_run(cfg, out, seed, args.allow_nonunique_prox, args.auto_steps)
        if args.command == "tables":
            consts = _constants_from_file(args.constants) if args.constants else None
            return cmd_tables(cfg, out, _parse_floats(args.kappa), consts, args.tau)
        if args.command == "restore":
            return cmd_restore(cfg, out, seed, args.allow_nonunique_prox)
        if args.command == "validate":
            return cmd_validate(cfg, out, seed, args.trials)
        if args.command == "certify":
            return cmd_certify(cfg, out, seed, args.trace, args.scheme, args.auto_steps)
    except (MinMaxError, ValueError, OSError, FloatingPointError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_ERROR  # pragma: no cover


if __name__ == "__main__":
    sys.exit(main())
