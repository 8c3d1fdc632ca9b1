"""``cspath`` command-line front end.

Exit codes: 0 success, 1 a verification or comparison failed, 2 usage or
scenario-file error, 3 input failed validation, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .amplitude import classical_saddle, lambda_continuation_phase, log_det_factor, transition_amplitude
from .diagnostics import SCAN_COLUMNS, implementability_scan
from .errors import (DomainError, IntegrationError, ShapeError, SingularityError, UnsupportedError,
                     ValidationError)
from .green import (dlogdet_dlambda, dlogdet_dlambda_fd, ds_dlambda, ds_dlambda_fd, green_kernel,
                    trace_gn, verify_green)
from .oracles import DiscretePIConfig, discrete_path_integral, extrapolated_path_integral, fock_matrix_element
from .propagator import evolve, symplectic_defect
from .scenario import (AMPLITUDE_COLUMNS, COMPARE_COLUMNS, VERIFY_COLUMNS, format_csv, load_family,
                       load_scenario, write_atomic)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3, 4
COMPARE_TOL = 1e-5
DEFECT_TOL = 1e-9


def _cplx_row(name, z):
    z = complex(z)
    return {"quantity": name, "re": z.real, "im": z.imag}


def run_amplitude(sc):
    S = evolve(sc.H, lam=sc.lam, steps=sc.steps, reproject_every=sc.reproject_every)
    amp = transition_amplitude(S, sc.v, sc.w)
    z_T, zbar_0 = classical_saddle(S, sc.v, sc.w)
    rows = [_cplx_row("log_amplitude", amp.log_value), _cplx_row("amplitude", amp.value),
            _cplx_row("log_det_factor", log_det_factor(S))]
    rows += [_cplx_row(f"z_T[{a}]", x) for a, x in enumerate(z_T)]
    rows += [_cplx_row(f"zbar_0[{a}]", x) for a, x in enumerate(zbar_0)]
    rows.append(_cplx_row("symplectic_defect", symplectic_defect(S)))
    text = (f"{sc.name}: I(v, w) = {amp.value:.12g}  (log {amp.log_value:.12g})"
            + ("  [overflow]" if amp.overflow else ""))
    return EXIT_OK, text, format_csv(AMPLITUDE_COLUMNS, rows)


def _forcing(t, n):
    k = np.arange(1, n + 1)
    top = np.sin(np.outer(t, k) + 0.3) + 1j * np.cos(0.5 * np.outer(t, k))
    bot = np.exp(-np.outer(t, k) / 2) - 0.4j * np.outer(t, k) ** 2
    return top, bot


def run_verify(sc):
    vs = sc.verify
    H = sc.H
    checks = []

    def add(name, residual, tol):
        checks.append({"check": name, "residual": float(residual), "tolerance": float(tol),
                       "passed": bool(np.isfinite(residual) and residual < tol)})

    S = evolve(H, lam=sc.lam, steps=sc.steps, max_defect=None)
    add("symplectic_defect", symplectic_defect(S), DEFECT_TOL)
    K = green_kernel(H, sc.lam, vs.green_steps)
    F = _forcing(K.history.times, H.n)
    add("green_residual", verify_green(K, *F, order=4), vs.tol)
    for lam in vs.lambdas:
        K = green_kernel(H, lam, sc.steps)
        tg = trace_gn(K)
        scale = 1.0 + abs(tg)
        add(f"trace_identity[{lam!r}]", abs(tg - dlogdet_dlambda(H, lam, sc.steps)) / scale, vs.tol)
        add(f"trace_fd[{lam!r}]", abs(tg - dlogdet_dlambda_fd(H, lam, vs.trace_fd_eps, sc.steps)) / scale, vs.tol)
        add(f"theta_independence[{lam!r}]", abs(trace_gn(K, 0.0) - trace_gn(K, 1.0)), vs.theta_tol)
    ds = ds_dlambda(H, sc.lam, steps=sc.steps)
    add("dsym_fd", np.max(np.abs(ds - ds_dlambda_fd(H, sc.lam, vs.fd_eps, sc.steps))), vs.tol)
    S1 = evolve(H, lam=1.0, steps=sc.steps, max_defect=None)
    add("phase_route", abs(lambda_continuation_phase(H, steps=sc.steps) - log_det_factor(S1)), vs.phase_tol)
    failed = [c for c in checks if not c["passed"]]
    lines = [f"{sc.name}: {len(checks) - len(failed)}/{len(checks)} checks passed"]
    for c in checks:
        flag = "ok  " if c["passed"] else "FAIL"
        lines.append(f"  {flag} {c['check']:<28} {c['residual']:.3e}  (tol {c['tolerance']:.1e})")
    return (EXIT_FAIL if failed else EXIT_OK), "\n".join(lines), format_csv(VERIFY_COLUMNS, checks)


def run_compare(sc):
    closed = transition_amplitude(evolve(sc.H, lam=sc.lam, steps=sc.steps), sc.v, sc.w).value
    H = sc.H.scaled_pairing(sc.lam)
    fock = fock_matrix_element(H, H.T, sc.v, sc.w, sc.fock)
    pi = complex(np.exp(discrete_path_integral(H, H.T, sc.v, sc.w, DiscretePIConfig(sc.pi_N))))
    ext = extrapolated_path_integral(H, H.T, sc.v, sc.w, sc.pi_N)
    scale = max(abs(closed), 1e-300)
    row = {"scenario": sc.name,
           "closed_re": closed.real, "closed_im": closed.imag,
           "fock_re": fock.value.real, "fock_im": fock.value.imag,
           "pi_re": pi.real, "pi_im": pi.imag,
           "extrapolated_re": ext.real, "extrapolated_im": ext.imag,
           "fock_discrepancy": abs(fock.value - closed) / scale,
           "pi_discrepancy": abs(pi - closed) / scale,
           "extrapolated_discrepancy": abs(ext - closed) / scale,
           "fock_leak": fock.leak}
    worst = max(row["fock_discrepancy"], row["extrapolated_discrepancy"], abs(fock.value - ext) / scale)
    ok = worst < COMPARE_TOL
    text = (f"{sc.name}: closed {closed:.10g}, Fock {fock.value:.10g}, path integral (extrapolated) "
            f"{ext:.10g}; worst mutual discrepancy {worst:.2e} {'ok' if ok else 'FAIL'}")
    return (EXIT_OK if ok else EXIT_FAIL), text, format_csv(COMPARE_COLUMNS, [row])


def run_evolve_dump(sc):
    _, hist = evolve(sc.H, lam=sc.lam, steps=sc.steps, record=True, reproject_every=sc.reproject_every)
    return EXIT_OK, f"{sc.name}: {len(hist)} nodes over [0, {hist.T!r}]", hist.csv_text()


RUNNERS = {"amplitude": run_amplitude, "verify": run_verify, "compare": run_compare,
           "evolve-dump": run_evolve_dump}


def _exit_code(exc):
    if isinstance(exc, (ValidationError, ShapeError)):
        return EXIT_INVALID
    if isinstance(exc, (IntegrationError, SingularityError, FloatingPointError, np.linalg.LinAlgError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DomainError, UnsupportedError)):
        return EXIT_USAGE
    raise exc


def _describe(exc):
    inv = getattr(exc, "invariant", None)
    return f"{type(exc).__name__}: {exc}" + (f" [invariant: {inv}]" if inv else "")


def _job(args):
    """Run one scenario; returns ``(code, message)`` and writes the CSV atomically."""
    cmd, path, out, seed, steps, lam = args
    try:
        if cmd == "scan":
            fam, T, tol = load_family(path)
            res = implementability_scan(fam, T, tol)
            csv_text = format_csv(SCAN_COLUMNS, res.rows)
            code, text, name = EXIT_OK, res.summary(), fam.name
        else:
            sc = load_scenario(path, seed=seed, steps=steps, lam=lam)
            if steps is not None:
                sc = replace(sc, verify=replace(sc.verify, green_steps=int(steps)))
            code, text, csv_text = RUNNERS[cmd](sc)
            name = sc.name
        dest = Path(out) / f"{name}_{cmd.replace('-', '_')}.csv"
        write_atomic(dest, csv_text)
        return code, f"{text}\n  -> {dest}"
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes, re-raised if unknown
        return _exit_code(exc), f"{path}: {_describe(exc)}"


def build_parser():
    p = argparse.ArgumentParser(prog="cspath", description="Coherent-state amplitudes for quadratic bosonic Hamiltonians.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    helps = {
        "amplitude": "closed-form amplitude, saddle data and determinant factor",
        "verify": "Green-function, trace-identity and finite-difference checks",
        "compare": "closed form against the Fock and discrete path-integral oracles",
        "scan": "mode-family cutoff scan (takes a family file)",
        "evolve-dump": "propagator history on the integration grid",
    }
    for name, h in helps.items():
        s = sub.add_parser(name, help=h)
        s.add_argument("--scenario", action="append", required=True, metavar="PATH",
                       help="scenario file (repeatable)")
        s.add_argument("--out", default="cspath-out", help="output directory (default: %(default)s)")
        s.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        s.add_argument("--steps", type=int, default=None, help="override the RK4 step count")
        s.add_argument("--lambda", dest="lam", type=float, default=None, help="override the pairing scale")
        s.add_argument("--jobs", type=int, default=1, help="worker processes (default: %(default)s)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.jobs < 1:
        print("cspath: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.steps is not None and args.steps < 1:
        print("cspath: --steps must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    if args.lam is not None and not 0.0 <= args.lam <= 1.0:
        print("cspath: --lambda must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE
    jobs = [(args.command, p, args.out, args.seed, args.steps, args.lam) for p in args.scenario]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_job, jobs))
    else:
        results = [_job(j) for j in jobs]
    code = EXIT_OK
    for c, msg in results:
        print(msg, file=sys.stdout if c in (EXIT_OK, EXIT_FAIL) else sys.stderr)
        code = max(code, c)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
