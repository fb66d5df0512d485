"""Command-line front end.

Subcommands cover the full workflow: ``solve`` exports the exact
solution, ``critical`` locates the critical volatility, ``locus``
sweeps root trajectories, ``table1`` regenerates the maximal-volatility
grid, ``integrand`` samples the expectation integrand, and ``logn``
exports log N_i against volatility with its frozen-coefficient
asymptote.  Every run is deterministic: the same configuration writes
byte-identical files.

Exit codes: 0 success, 2 configuration problem, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from mpmath import mp

from . import flatrate, genfunc, quadrature, solver, zeros
from .errors import (
    DivergenceError,
    InvalidInputError,
    ModelError,
    NotBracketedError,
    NumericFailureError,
)
from .model import (
    DEFAULT_PRECISION_BITS,
    TenorModel,
    flat_curve,
    read_curve_csv,
    to_mpf,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(Exception):
    """Bad or inconsistent run configuration (maps to exit code 2)."""


def _parse_config_file(path) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(
                        f"{path}:{lineno}: expected 'key = value'"
                    )
                key, _, val = line.partition("=")
                values[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return values


def _merge_config(args: argparse.Namespace, known: dict) -> None:
    """Fill CLI options that were left unset from the config file."""
    if not args.config:
        return
    file_values = _parse_config_file(args.config)
    for key, raw in file_values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, key, None) is None:
            kind = known[key]
            if kind == "int":
                try:
                    setattr(args, key, int(raw))
                except ValueError as exc:
                    raise ConfigError(f"config key {key!r}: {exc}") from exc
            elif kind == "flag":
                setattr(args, key, raw.lower() in ("1", "true", "yes", "on"))
            elif kind == "pair":
                parts = raw.split()
                if len(parts) != 2:
                    raise ConfigError(f"config key {key!r}: expected two values")
                setattr(args, key, parts)
            else:
                setattr(args, key, raw)


def _build_model(args, psi="0") -> TenorModel:
    bits = args.precision_bits
    flat_bits_given = [v is not None for v in (args.r0, args.tau, args.n)]
    if args.curve_file is not None:
        if any(flat_bits_given):
            raise ConfigError(
                "give either --curve-file or the flat-curve trio "
                "--r0/--tau/--n, not both"
            )
        return read_curve_csv(args.curve_file, psi=psi, precision_bits=bits)
    if not all(flat_bits_given):
        raise ConfigError(
            "curve source missing: need --curve-file, or all of "
            "--r0, --tau and --n"
        )
    return flat_curve(args.r0, args.n, args.tau, psi=psi, precision_bits=bits)


def _parse_psi_grid(spec: str, bits: int) -> list:
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError("psi grid must be start:stop:step")
    with mp.workprec(bits):
        try:
            start, stop, step = (to_mpf(p, bits) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"bad psi grid value: {exc}") from exc
        if step <= 0:
            raise ConfigError("psi grid step must be positive (ascending grid)")
        if stop < start:
            raise ConfigError("psi grid stop must not precede start")
        values = []
        k = 0
        while True:
            v = start + k * step
            if v > stop + step / 2:
                break
            values.append(v)
            k += 1
    return values


def _out_path(args, name: str) -> str:
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def _parse_list(raw: str):
    return [item.strip() for item in raw.split(",") if item.strip()]


# ---------------------------------------------------------------------------
# Subcommand bodies
# ---------------------------------------------------------------------------

def _cmd_solve(args) -> int:
    if args.psi is None:
        raise ConfigError("solve needs --psi")
    model = _build_model(args, psi=args.psi)
    sol = solver.solve(model)
    bits = model.precision_bits
    with mp.workprec(bits):
        worst = mp.zero
        for i in range(sol.n):
            target = sol.rebased.values[i + 1]
            got = mp.fsum(sol.coeffs[i])
            worst = max(worst, abs(got - target) / target)
        tol = mp.mpf(10) ** (-(bits // 8))
        verdict = "PASS" if worst < tol else "FAIL"
        print(
            f"sum rule: {verdict} (max relative residual "
            f"{mp.nstr(worst, 3)}, tolerance {mp.nstr(tol, 3)})"
        )
    if args.format in (None, "json"):
        solver.write_solution_json(sol, _out_path(args, "solution.json"))
    if args.format in (None, "csv"):
        solver.write_libor_csv(sol, _out_path(args, "libors.csv"))
    if verdict == "FAIL":
        return EXIT_NUMERIC
    return EXIT_OK


def _cmd_critical(args) -> int:
    if args.i is None:
        raise ConfigError("critical needs --i (time slice)")
    model = _build_model(args)
    bracket = args.bracket or ("0.05", "1.0")
    report = zeros.critical_volatility(
        model, args.i, bracket=tuple(bracket), tol=args.tol or "1e-4"
    )
    zeros.write_critical_json(report, _out_path(args, "critical.json"))
    print(f"psi_cr = {float(report.psi_cr):.4f} (slice {args.i})")
    if report.formula_exact is not None:
        print(
            f"closed-form estimates: exact {float(report.formula_exact):.4f}, "
            f"simplified {float(report.formula_simplified):.4f}"
        )
    return EXIT_OK


def _cmd_locus(args) -> int:
    if args.i is None or args.psi_grid is None:
        raise ConfigError("locus needs --i and --psi-grid")
    model = _build_model(args)
    psis = _parse_psi_grid(args.psi_grid, model.precision_bits)
    locus = zeros.root_locus(model, args.i, psis)
    zeros.write_locus_csv(locus, _out_path(args, "locus.csv"))
    print(f"locus: {len(locus.tracks)} roots x {len(psis)} volatilities")
    return EXIT_OK


def _cmd_table1(args) -> int:
    r0s = _parse_list(args.r0_list) if args.r0_list else None
    tns = _parse_list(args.tn_list) if args.tn_list else None
    taus = _parse_list(args.tau_list) if args.tau_list else None
    kwargs = {"precision_bits": args.precision_bits}
    if r0s:
        kwargs["r0_values"] = r0s
    if tns:
        kwargs["t_n_values"] = tns
    if taus:
        kwargs["tau_values"] = taus
    rows = flatrate.max_vol_table(**kwargs)
    flatrate.write_max_vol_csv(rows, _out_path(args, "table1.csv"))
    if args.markdown:
        with open(_out_path(args, "table1.md"), "w") as fh:
            fh.write(flatrate.max_vol_markdown(rows))
    print(f"table1: {len(rows)} rows")
    return EXIT_OK


def _cmd_integrand(args) -> int:
    if args.i is None or args.psi is None:
        raise ConfigError("integrand needs --i and --psi")
    model = _build_model(args, psi=args.psi)
    sol = solver.solve(model)
    with mp.workprec(model.precision_bits):
        t = float(model.dates[args.i])
    if t == 0.0:
        raise ConfigError("the first slice has no integrand (t = 0)")
    lo = args.x_min if args.x_min is not None else -5.0 * t ** 0.5
    hi = (
        args.x_max
        if args.x_max is not None
        else quadrature.adaptive_kappa(sol, args.i) * t ** 0.5
    )
    points = args.points or 2001
    if not hi > lo:
        raise ConfigError("need x-max > x-min")
    step = (hi - lo) / (points - 1)
    grid = [lo + k * step for k in range(points)]
    profile = quadrature.integrand_profile(sol, args.i, grid)
    quadrature.write_profile_csv(profile, _out_path(args, "integrand.csv"))
    spots = ", ".join(f"{xm:.3f}" for xm in profile.maxima) or "none found"
    print(f"integrand maxima at x = {spots}")
    return EXIT_OK


def _cmd_logn(args) -> int:
    if args.i is None or args.psi_grid is None:
        raise ConfigError("logn needs --i and --psi-grid")
    model = _build_model(args)
    bits = model.precision_bits
    psis = _parse_psi_grid(args.psi_grid, bits)
    frozen = genfunc.infinite_vol_limit(model, args.i)
    rows = []
    with mp.workprec(bits):
        t_i = model.dates[args.i]
        for psi in psis:
            sol = solver.solve(model.with_psi(psi))
            log_n = mp.log(sol.expectations[args.i])
            arg_pt = mp.exp(psi * psi * t_i)
            log_f = mp.log(genfunc.evaluate(frozen, arg_pt))
            rows.append((mp.nstr(psi, 17), float(log_n), float(log_f)))
    path = _out_path(args, "logn.csv")
    with open(path, "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["psi", "log_N", "log_f_inf"])
        for p, ln_n, ln_f in rows:
            writer.writerow([p, f"{ln_n:.17g}", f"{ln_f:.17g}"])
    print(f"logn: {len(rows)} volatilities (slice {args.i})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {
    "r0": "str",
    "tau": "str",
    "n": "int",
    "i": "int",
    "psi": "str",
    "psi_grid": "str",
    "curve_file": "str",
    "precision_bits": "int",
    "out_dir": "str",
    "format": "str",
    "bracket": "pair",
    "tol": "str",
    "points": "int",
    "x_min": "float",
    "x_max": "float",
    "r0_list": "str",
    "tn_list": "str",
    "tau_list": "str",
    "markdown": "flag",
}


def _add_common(p: argparse.ArgumentParser, *, slice_arg: bool) -> None:
    p.add_argument("--r0", help="flat short rate, e.g. 0.05")
    p.add_argument("--tau", help="accrual length in years, e.g. 0.25")
    p.add_argument("--n", type=int, help="number of accrual periods")
    p.add_argument("--curve-file", help="t,P discount curve CSV instead of a flat curve")
    if slice_arg:
        p.add_argument("--i", type=int, help="time slice index")
    p.add_argument(
        "--precision-bits",
        type=int,
        default=None,
        help=f"working mantissa bits (default {DEFAULT_PRECISION_BITS})",
    )
    p.add_argument("--out-dir", default=None, help="output directory (default .)")
    p.add_argument("--config", default=None, help="key = value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lnmarkov",
        description=(
            "Exact solver and phase-transition analysis for the "
            "one-factor log-normal Markov-functional model"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the model and export the solution")
    _add_common(p, slice_arg=False)
    p.add_argument("--psi", help="log-normal volatility, e.g. 0.4")
    p.add_argument(
        "--format",
        choices=["csv", "json"],
        default=None,
        help="write only this format (default: both)",
    )
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("critical", help="locate the critical volatility on a slice")
    _add_common(p, slice_arg=True)
    p.add_argument(
        "--bracket",
        nargs=2,
        metavar=("LO", "HI"),
        default=None,
        help="volatility bracket straddling the crossing (default 0.05 1.0)",
    )
    p.add_argument("--tol", default=None, help="bisection tolerance (default 1e-4)")
    p.set_defaults(func=_cmd_critical)

    p = sub.add_parser("locus", help="track roots across a volatility sweep")
    _add_common(p, slice_arg=True)
    p.add_argument("--psi-grid", help="sweep as start:stop:step, e.g. 0.5:0.6:0.05")
    p.set_defaults(func=_cmd_locus)

    p = sub.add_parser("table1", help="maximal-volatility table over a parameter grid")
    _add_common(p, slice_arg=False)
    p.add_argument("--r0-list", default=None, help="comma-separated rates (default 0.01..0.05)")
    p.add_argument("--tn-list", default=None, help="comma-separated total tenors (default 5,10,20,30)")
    p.add_argument("--tau-list", default=None, help="comma-separated accruals (default 0.25,0.5)")
    p.add_argument("--markdown", action="store_true", default=None, help="also write a Markdown rendering")
    p.set_defaults(func=_cmd_table1)

    p = sub.add_parser("integrand", help="sample the expectation integrand on a slice")
    _add_common(p, slice_arg=True)
    p.add_argument("--psi", help="log-normal volatility")
    p.add_argument("--x-min", type=float, default=None, help="grid start (default -5 sqrt(t_i))")
    p.add_argument("--x-max", type=float, default=None, help="grid end (default adaptive)")
    p.add_argument("--points", type=int, default=None, help="grid size (default 2001)")
    p.set_defaults(func=_cmd_integrand)

    p = sub.add_parser("logn", help="log N_i against volatility with its asymptote")
    _add_common(p, slice_arg=True)
    p.add_argument("--psi-grid", help="sweep as start:stop:step, e.g. 0.05:0.8:0.01")
    p.set_defaults(func=_cmd_logn)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config(args, _CONFIG_KEYS)
        if args.precision_bits is None:
            args.precision_bits = DEFAULT_PRECISION_BITS
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailureError, NotBracketedError, DivergenceError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
