"""Command-line front end.

Exit status: 0 all tolerances met, 2 configuration error, 3 numeric
failure, 4 tolerance failure.
"""

import os
import sys

import numpy as np

from .acceptance import run_acceptance
from .balls import ModelSpec, RadiusLaw, moments_exact
from .config import ConfigError, parse_config
from .geometry import north_pole
from .kernel import (
    KernelSpec, asymptote_fit, covariance_matrix, k2_constant,
    kernel_at_zero, kernel_closed_form_circle, kernel_increment,
)
from .limits import (
    chunk_rng, default_increments, lass_experiment, moment_stats, sample_limit_field,
    sample_tangent_field, scaling_experiment, simulate_fields,
    tangent_increment_covariance,
)
from .measures import DiscreteSphereMeasure, TangentMeasure
from .overlap import DEFAULT_TOL, psi_mc, psi_with_error
from .quadrature import QuadratureError
from .report import OUTPUT_DIR_ENV, ReportError, emit_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4
CLOSED_FORM_TOL = 1e-6
ASYMPTOTE_GRID = np.logspace(-6, -4, 9)
_NOT_ECHOED = ("output", "summary", "samples_csv", "workers")


def _echo(cfg):
    return {k: v for k, v in cfg.as_dict().items() if k not in _NOT_ECHOED}


def _default_path(cfg, explicit, suffix):
    if explicit:
        return explicit
    directory = os.environ.get(OUTPUT_DIR_ENV)
    if directory:
        return os.path.join(directory, f"{cfg.command}{suffix}")
    return None


def _emit(cfg, report, fmt, explicit, suffix, out):
    path = _default_path(cfg, explicit, suffix)
    text = emit_report(report, fmt, path, _echo(cfg), cfg.seed)
    if path is None:
        out.write(text)


def _model(cfg, rho):
    try:
        law = RadiusLaw(cfg.n, cfg.H, cutoff=cfg.cutoff or None, r_min=cfg.r_min)
        return ModelSpec(law, rho=rho, theta=cfg.theta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def cmd_psi(cfg, out):
    _require(cfg.u_grid and cfg.r_grid, "psi needs --u-grid and --r-grid")
    tol = DEFAULT_TOL.get(cfg.n, 1e-6) if cfg.n > 1 else 0.0
    header = ["u", "r", "psi", "error_estimate", "tolerance"]
    if cfg.mc_samples:
        header += ["mc", "mc_se", "z", "z_tolerance"]
    rows, ok = [], True
    for i, (u, r) in enumerate((u, r) for u in cfg.u_grid for r in cfg.r_grid):
        val, err = psi_with_error(cfg.n, u, r, tol or None)
        row = [u, r, val, err, tol]
        if cfg.mc_samples:
            est, se = psi_mc(cfg.n, u, r, cfg.mc_samples, chunk_rng(cfg.seed, i))
            z = abs(val - est) / se if se > 0 else (0.0 if abs(val - est) <= 1e-12 else 1e300)
            ok &= z <= cfg.var_z
            row += [est, se, z, cfg.var_z]
        rows.append(row)
    _emit(cfg, {"header": header, "rows": rows}, "csv", cfg.output, ".csv", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_kernel(cfg, out):
    spec = KernelSpec(cfg.n, cfg.H, cfg.tol)
    if cfg.asymptote:
        grid = cfg.u_grid or ASYMPTOTE_GRID
        fit = asymptote_fit(spec, grid)
        expected = 2 * cfg.H if cfg.H < 0.5 else 1.0
        exp_tol = 0.02 if cfg.H < 0.5 else 0.05
        report = {"exponent": fit.exponent, "exponent_target": expected,
                  "exponent_tolerance": exp_tol, "k1": fit.k1, "k2_fit": fit.k2,
                  "u_grid": list(grid)}
        ok = abs(fit.exponent - expected) <= exp_tol
        if cfg.H < 0.5:
            k2 = k2_constant(cfg.n, cfg.H)
            rel = fit.k2 / k2 - 1
            report.update(k2=k2, k2_rel_err=rel, k2_tolerance=0.03)
            ok &= abs(rel) <= 0.03
        report["pass"] = bool(ok)
        _emit(cfg, report, "json", cfg.output, ".json", out)
        return EXIT_OK if ok else EXIT_TOLERANCE
    _require(cfg.u_grid, "kernel needs --u-grid (or --asymptote)")
    u = np.array(cfg.u_grid)
    k0 = kernel_at_zero(spec)
    inc = kernel_increment(spec, u)
    closed = None
    if cfg.n == 1 and cfg.H < 0.5:
        closed = kernel_closed_form_circle(cfg.H, u)
    rows, ok = [], True
    for i, ui in enumerate(u):
        val = k0 - inc[i]
        if closed is None:
            rows.append([ui, val, inc[i], None, None, None])
        else:
            rel = abs(val / closed[i] - 1)
            ok &= rel <= CLOSED_FORM_TOL
            rows.append([ui, val, inc[i], closed[i], rel, CLOSED_FORM_TOL])
    header = ["u", "kernel", "increment", "closed_form", "rel_err", "tolerance"]
    _emit(cfg, {"header": header, "rows": rows}, "csv", cfg.output, ".csv", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _measure_rows(cfg):
    m = len(cfg.points)
    return np.array(cfg.weights, dtype=float) if cfg.weights else np.eye(m)


def cmd_simulate(cfg, out):
    _require(cfg.points, "simulate needs --points")
    _require(len(cfg.rho) == 1, "simulate takes a single rho")
    spec = _model(cfg, cfg.rho[0])
    pts = cfg.points_xyz
    w = _measure_rows(cfg)
    raw, used = simulate_fields(spec, pts, w, cfg.replicates, cfg.seed, cfg.sampler,
                                cfg.chunk, cfg.workers)
    header = ["replicate"] + [f"X{j}" for j in range(w.shape[0])]
    rows = [[i, *r] for i, r in enumerate(raw)]
    path = _default_path(cfg, cfg.output, ".csv")
    if path is not None:
        emit_report({"header": header, "rows": rows}, "csv", path, _echo(cfg), cfg.seed)
    measures, ok = [], True
    for j, row in enumerate(w):
        mean, var = moments_exact(spec, DiscreteSphereMeasure(pts, row))
        st = moment_stats(raw[:, j], min_count=1) if cfg.replicates >= 4 else None
        entry = {"weights": row, "exact_mean": mean, "exact_variance": var}
        if st is not None:
            z_mean = (st.mean - mean) / st.se_mean if st.se_mean > 0 else 0.0
            z_var = (st.variance - var) / st.se_variance if st.se_variance > 0 else 0.0
            good = abs(z_mean) <= cfg.var_z and abs(z_var) <= cfg.var_z
            ok &= good
            entry.update(stats=st.as_dict(), z_mean=z_mean, z_variance=z_var,
                         z_tolerance=cfg.var_z, passed=bool(good))
        measures.append(entry)
    report = {"sampler": used, "measures": measures, "passed": bool(ok)}
    _emit(cfg, report, "json", cfg.summary, ".json", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_scaling(cfg, out):
    _require(len(cfg.points) >= 1, "scaling needs --points")
    pts = cfg.points_xyz
    w = _measure_rows(cfg) if cfg.weights else default_increments(len(pts))
    ladder, ok, samples = [], True, []
    for i, rho in enumerate(cfg.rho):
        spec = _model(cfg, rho)
        rep = scaling_experiment(spec, pts, cfg.replicates, cfg.seed + i, weights=w,
                                 sampler=cfg.sampler, chunk=cfg.chunk, workers=cfg.workers,
                                 keep_samples=bool(cfg.samples_csv))
        z = [(s.variance - v) / s.se_variance if s.se_variance > 0 else 0.0
             for s, v in zip(rep.stats, rep.exact_variance)]
        good = all(abs(x) <= cfg.var_z for x in z)
        ok &= good
        entry = rep.as_dict()
        entry.update(variance_z=z, z_tolerance=cfg.var_z, passed=bool(good))
        ladder.append(entry)
        if cfg.samples_csv:
            samples += [[rho, k, *r] for k, r in enumerate(rep.samples)]
    skew = np.array([[abs(s["skewness"] or 0.0) for s in e["stats"]] for e in ladder])
    decreasing = [bool(np.all(np.diff(skew[:, j]) < 0)) for j in range(skew.shape[1])]
    report = {"ladder": ladder, "abs_skewness": skew, "skewness_decreasing": decreasing,
              "weights": w, "passed": bool(ok)}
    if cfg.samples_csv:
        header = ["rho", "replicate"] + [f"Y{j}" for j in range(w.shape[0])]
        emit_report({"header": header, "rows": samples}, "csv", cfg.samples_csv,
                    _echo(cfg), cfg.seed)
    _emit(cfg, report, "json", cfg.output, ".json", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_lass(cfg, out):
    spec = KernelSpec(cfg.n, cfg.H, cfg.tol)
    _require(cfg.H < 0.5, "lass needs H < 1/2")
    _require(cfg.tangent, "lass needs --tangent")
    if len(cfg.tangent) == 1 and not cfg.weights:
        tau = TangentMeasure.increment(cfg.tangent[0])
    else:
        _require(len(cfg.weights) == 1 and len(cfg.weights[0]) == len(cfg.tangent),
                 "give one weight row with an entry per tangent vector")
        try:
            tau = TangentMeasure(cfg.tangent, cfg.weights[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    base = north_pole(cfg.n) if not cfg.base else cfg.base_xyz
    rep = lass_experiment(spec, tau, cfg.eps_grid, base)
    tail = rep.tail_decreasing(min(3, len(rep.eps)))
    ok = rep.rel_errors[-1] <= cfg.rel_tol and tail
    report = {**rep.as_dict(), "tolerance": cfg.rel_tol, "tail_decreasing": tail,
              "passed": bool(ok)}
    _emit(cfg, report, "json", cfg.output, ".json", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def _cov_z(samples, target):
    emp = np.atleast_2d(np.cov(samples, rowvar=False))
    d = np.diag(target)
    se = np.sqrt((np.outer(d, d) + target**2) / samples.shape[0])
    z = np.where(se > 0, np.abs(emp - target) / np.where(se > 0, se, 1.0), 0.0)
    return emp, z


def cmd_gaussian(cfg, out):
    rng = chunk_rng(cfg.seed, 0)
    if cfg.tangent:
        _require(cfg.H < 0.5, "the tangent field needs H < 1/2")
        x = np.array(cfg.tangent)
        k2 = k2_constant(cfg.n, cfg.H)
        samples = sample_tangent_field(x, cfg.H, k2, cfg.replicates, rng)
        target = tangent_increment_covariance(x, cfg.H, k2)
        ratios = [float(np.var(samples[:, i] - samples[:, i + 1], ddof=1)
                        / np.linalg.norm(x[i] - x[i + 1]) ** (2 * cfg.H))
                  for i in range(len(x) - 1)]
        spread = float(np.max(np.abs(np.array(ratios) / np.mean(ratios) - 1))) if ratios else 0.0
        emp, z = _cov_z(samples, target)
        ok = spread <= cfg.rel_tol
        report = {"field": "tangent", "k2": k2, "increment_ratios": ratios,
                  "ratio_target": 2 * k2, "max_rel_spread": spread, "tolerance": cfg.rel_tol,
                  "covariance": emp, "target_covariance": target, "max_z": float(z.max()),
                  "passed": bool(ok)}
    else:
        _require(cfg.points, "gaussian needs --points or --tangent")
        spec = KernelSpec(cfg.n, cfg.H, cfg.tol)
        base = cfg.base_xyz if spec.centered_only else None
        _require(base is not None or not spec.centered_only, "2H > n needs --base")
        samples = sample_limit_field(spec, cfg.points_xyz, cfg.replicates, rng, base)
        target = covariance_matrix(spec, cfg.points_xyz, base)
        emp, z = _cov_z(samples, target)
        ok = float(z.max()) <= cfg.var_z
        report = {"field": "sphere", "covariance": emp, "target_covariance": target,
                  "max_z": float(z.max()), "z_tolerance": cfg.var_z, "passed": bool(ok)}
    if cfg.samples_csv:
        header = [f"W{j}" for j in range(samples.shape[1])]
        emit_report({"header": header, "rows": samples}, "csv", cfg.samples_csv,
                    _echo(cfg), cfg.seed)
    _emit(cfg, report, "json", cfg.output, ".json", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_selftest(cfg, out):
    def log(line):
        print(line, file=sys.stderr)

    results, _ = run_acceptance(cfg.seed, cfg.criteria or None, log=log)
    ok = all(r["passed"] for r in results)
    _emit(cfg, {"criteria": results, "passed": bool(ok)}, "json", cfg.output, ".json", out)
    return EXIT_OK if ok else EXIT_TOLERANCE


COMMANDS = {"psi": cmd_psi, "kernel": cmd_kernel, "simulate": cmd_simulate,
            "scaling": cmd_scaling, "lass": cmd_lass, "gaussian": cmd_gaussian,
            "selftest": cmd_selftest}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg, out)
    except ConfigError as exc:
        print(f"ballthrow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (QuadratureError, np.linalg.LinAlgError, FloatingPointError, ReportError) as exc:
        print(f"ballthrow: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"ballthrow: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
