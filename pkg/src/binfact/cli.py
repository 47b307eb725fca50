"""Command line front end.

Subcommands:

  coeffs      print kernel coefficients as CSV
  factorize   build one binned factorization and report its error profile
  sweep       grid of binning resolutions across sizes, with baselines
  stream      run the private counter over a stream file
  verify      self-check suites and binning dumps

Every command writes delimited text (CSV) so results pipe cleanly into
other tools; commands that produce a file also render a small matplotlib
figure next to it unless --no-plot is given.  Exit codes: 0 success,
1 runtime/numerical failure, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

import numpy as np

from .binning import BinningParams, collect_binning
from .factorization import (
    FactorizationReport,
    assemble_report,
    binary_tree_norms,
    binned_square_root,
    build_report,
    params_for_blowup,
    square_root_error_baseline,
)
from .kernels import ToeplitzSpec
from .matrix import (
    condition_upper_bound,
    operator_norm,
    sqrt_opnorm_bound,
    toeplitz_from_coeffs,
)
from .mechanism import PrivacyParams, run_private_counter
from .streaming import BinnedMatrixView, toeplitz_row_source
from .verify import SUITE_NAMES, run_suites

_SWEEP_COLUMNS = (
    "n",
    "alpha",
    "beta",
    "c",
    "tau",
    "d",
    "bin_size",
    "mean_se_ratio",
    "max_se_ratio",
    "wall_time_ms",
    "method",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _resolve_out(raw: str) -> Path:
    path = Path(raw)
    base = os.environ.get("BINFACT_OUT_DIR")
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        _resolve_out(out).write_text(text)


def _spec_from_args(args) -> ToeplitzSpec:
    return ToeplitzSpec(args.alpha, args.beta, args.n)


# ---------------------------------------------------------------- coeffs


def cmd_coeffs(args) -> int:
    spec = _spec_from_args(args)
    series = {
        "a": spec.counting_coeffs,
        "b": spec.sqrt_coeffs,
        "s": spec.inv_sqrt_coeffs,
    }[args.kind]
    lines = ["k,value"]
    lines.extend(f"{k},{_fmt(v)}" for k, v in enumerate(series))
    _emit(lines, args.out)
    return 0


# ------------------------------------------------------------- factorize


def _report_lines(report: FactorizationReport) -> list[str]:
    names = [f.name for f in fields(FactorizationReport)]
    values = [_fmt(getattr(report, name)) for name in names]
    return [",".join(names), ",".join(values)]


def cmd_factorize(args) -> int:
    spec = _spec_from_args(args)
    if args.xi is not None:
        if args.c is not None or args.tau is not None:
            raise ValueError("--xi replaces --c/--tau; give one or the other")
        kappa = _kappa(spec, exact=args.exact_kappa)
        opnorm = _sqrt_opnorm(spec, exact=args.exact_kappa)
        params = params_for_blowup(args.xi, kappa, opnorm, spec.n)
    else:
        if args.c is None or args.tau is None:
            raise ValueError("need both --c and --tau, or --xi alone")
        params = BinningParams(args.c, args.tau)

    lhat, rhat, binning = binned_square_root(spec, params)
    report = assemble_report(spec, params, lhat, rhat, binning.size)

    if args.format == "json":
        payload = {f.name: getattr(report, f.name) for f in fields(report)}
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            _resolve_out(args.out).write_text(text)
    else:
        _emit(_report_lines(report), args.out)

    if args.out is not None and not args.no_plot:
        from .plots import save_factorization_figure

        base = toeplitz_from_coeffs(spec.sqrt_coeffs)
        fig_path = _resolve_out(args.out).with_suffix(".png")
        save_factorization_figure(fig_path, base, lhat, rhat)
        print(f"figure: {fig_path}", file=sys.stderr)
    return 0


def _kappa(spec: ToeplitzSpec, exact: bool) -> float:
    if not exact:
        return condition_upper_bound(spec)
    b = toeplitz_from_coeffs(spec.sqrt_coeffs)
    s = toeplitz_from_coeffs(spec.inv_sqrt_coeffs)
    return operator_norm(b) * operator_norm(s)


def _sqrt_opnorm(spec: ToeplitzSpec, exact: bool) -> float:
    if not exact:
        return sqrt_opnorm_bound(spec)
    return operator_norm(toeplitz_from_coeffs(spec.sqrt_coeffs))


# ----------------------------------------------------------------- sweep


def _sweep_row(spec: ToeplitzSpec, report: FactorizationReport, d: float | None,
               wall_ms: float, method: str) -> dict:
    return {
        "n": spec.n,
        "alpha": spec.alpha,
        "beta": spec.beta,
        "c": report.c,
        "tau": report.tau,
        "d": d,
        "bin_size": report.bin_size,
        "mean_se_ratio": report.mean_se_ratio,
        "max_se_ratio": report.max_se_ratio,
        "wall_time_ms": wall_ms,
        "method": method,
    }


def _sweep_task(task: tuple[int, float, float, float]) -> dict:
    n, alpha, beta, d = task
    spec = ToeplitzSpec(alpha, beta, n)
    params = BinningParams(1.0 - 1.0 / d, 1.0 / n)
    start = time.perf_counter()
    report = build_report(spec, params)
    wall_ms = (time.perf_counter() - start) * 1e3
    return _sweep_row(spec, report, d, wall_ms, "binned")


def _baseline_rows(n: int, alpha: float, beta: float) -> list[dict]:
    spec = ToeplitzSpec(alpha, beta, n)
    base_mean, base_max = square_root_error_baseline(spec)
    # identity factorization L=I, R=A: per-step error is the full column
    # norm of the counting matrix, no memory advantage but bin size 1
    start = time.perf_counter()
    sens_sq = float(np.sum(spec.counting_coeffs**2))
    rows = [{
        "n": n,
        "alpha": alpha,
        "beta": beta,
        "c": None,
        "tau": None,
        "d": None,
        "bin_size": 1,
        "mean_se_ratio": sens_sq / base_mean,
        "max_se_ratio": sens_sq / base_max,
        "wall_time_ms": (time.perf_counter() - start) * 1e3,
        "method": "identity",
    }]
    if alpha == 1.0 and beta == 0.0:
        start = time.perf_counter()
        frob_sq, rowmax_sq, bin_sens_sq = binary_tree_norms(n)
        rows.append({
            "n": n,
            "alpha": alpha,
            "beta": beta,
            "c": None,
            "tau": None,
            "d": None,
            "bin_size": n.bit_length(),
            "mean_se_ratio": frob_sq * bin_sens_sq / n / base_mean,
            "max_se_ratio": rowmax_sq * bin_sens_sq / base_max,
            "wall_time_ms": (time.perf_counter() - start) * 1e3,
            "method": "binary",
        })
    else:
        print(
            "note: binary baseline only defined for plain counting "
            "(alpha=1, beta=0); skipped",
            file=sys.stderr,
        )
    return rows


def cmd_sweep(args) -> int:
    try:
        sizes = [int(tok) for tok in args.n_list.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValueError(f"bad --n-list: {args.n_list!r}") from exc
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError(f"bad --n-list: {args.n_list!r}")
    if args.d_min <= 1.0 or args.d_max < args.d_min or args.d_steps < 1:
        raise ValueError("need 1 < d-min <= d-max and d-steps >= 1")

    grid = np.geomspace(args.d_min, args.d_max, args.d_steps)
    tasks = [(n, args.alpha, args.beta, float(d)) for n in sorted(sizes) for d in grid]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]

    if args.baseline:
        for n in sorted(sizes):
            rows.extend(_baseline_rows(n, args.alpha, args.beta))

    rows.sort(key=lambda r: (r["n"], r["method"] != "binned", r["d"] or 0.0))
    lines = [",".join(_SWEEP_COLUMNS)]
    lines.extend(",".join(_fmt(row[col]) for col in _SWEEP_COLUMNS) for row in rows)
    _emit(lines, args.out)

    if args.out is not None and not args.no_plot:
        from .plots import save_sweep_figure

        fig_path = _resolve_out(args.out).with_suffix(".png")
        save_sweep_figure(fig_path, rows)
        print(f"figure: {fig_path}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- stream


def _read_stream(path: Path) -> list[float]:
    values: list[float] = []
    with open(path) as handle:
        for lineno, raw in enumerate(handle, 1):
            text = raw.strip()
            if not text:
                continue
            head = text.split(",")[0].strip()
            try:
                values.append(float(head))
            except ValueError:
                if lineno == 1:
                    continue
                raise ValueError(f"line {lineno}: not a number: {head!r}") from None
    if not values:
        raise ValueError(f"{path}: no usable rows")
    return values


def cmd_stream(args) -> int:
    stream = _read_stream(Path(args.input))
    n = args.n if args.n is not None else len(stream)
    if len(stream) > n:
        raise ValueError(f"stream has {len(stream)} rows but --n is {n}")
    spec = ToeplitzSpec(args.alpha, args.beta, n)
    params = BinningParams(args.c, args.tau)

    _, rhat, binning = binned_square_root(spec, params)
    sensitivity = 0.0 if args.zero_noise else float(
        np.sqrt((rhat**2).sum(axis=0).max())
    )
    privacy = PrivacyParams(args.epsilon, args.delta, args.seed)
    view = BinnedMatrixView(toeplitz_row_source(spec.sqrt_coeffs), binning, n)
    outputs = run_private_counter(stream, view, sensitivity, privacy)

    lines = ["step,true_prefix,noisy_prefix"]
    lines.extend(
        f"{o.step},{_fmt(o.true_prefix)},{_fmt(o.noisy_prefix)}" for o in outputs
    )
    _emit(lines, args.out)
    print(
        f"memory audit: peak buffer {binning.size} interval sums "
        f"(bin size {binning.size}) for n={n}",
        file=sys.stderr,
    )

    if args.out is not None and not args.no_plot:
        from .plots import save_stream_figure

        fig_path = _resolve_out(args.out).with_suffix(".png")
        save_stream_figure(fig_path, outputs)
        print(f"figure: {fig_path}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    if args.dump_binning:
        spec = ToeplitzSpec(args.alpha, args.beta, args.n)
        params = BinningParams(args.c, args.tau)
        source = toeplitz_row_source(spec.sqrt_coeffs)
        partitions = collect_binning(source, spec.n, params)
        for part in partitions.partitions:
            print(",".join(f"{iv.a}-{iv.b}" for iv in part))
        print(f"bin size {partitions.size} for n={spec.n}", file=sys.stderr)
        return 0

    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    results = run_suites(names)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        failed += 0 if res.passed else 1
        print(f"{status} {res.suite}/{res.name}  {res.detail}")
    print(f"verify: {len(results) - failed} passed, {failed} failed")
    return 1 if failed else 0


# ------------------------------------------------------------------ main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binfact",
        description="space-efficient factorizations for private counting",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_shape(p):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--alpha", type=float, default=1.0)
        p.add_argument("--beta", type=float, default=0.0)

    p = sub.add_parser("coeffs", help="print kernel coefficients")
    add_shape(p)
    p.add_argument("--kind", choices=("a", "b", "s"), required=True,
                   help="a: counting, b: square root, s: inverse square root")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("factorize", help="binned factorization report")
    add_shape(p)
    p.add_argument("--c", type=float, default=None,
                   help="merge threshold in (0,1); closer to 1 is finer")
    p.add_argument("--tau", type=float, default=None,
                   help="tail cutoff in (0,1)")
    p.add_argument("--xi", type=float, default=None,
                   help="error budget; derives c and tau from bounds")
    p.add_argument("--exact-kappa", action="store_true",
                   help="power-iteration norms instead of closed-form bounds")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("sweep", help="resolution grid with baselines")
    p.add_argument("--n-list", required=True,
                   help="comma separated sizes, e.g. 500,1000,5000")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--d-min", type=float, default=1.5)
    p.add_argument("--d-max", type=float, default=64.0)
    p.add_argument("--d-steps", type=int, default=12)
    p.add_argument("--baseline", action="store_true",
                   help="append identity and binary-tree reference rows")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("stream", help="private counter over a stream file")
    p.add_argument("--input", required=True,
                   help="one value per line, first CSV field is used")
    p.add_argument("--n", type=int, default=None,
                   help="horizon; defaults to the stream length")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--zero-noise", action="store_true",
                   help="debugging hook: run with sensitivity forced to 0")
    p.add_argument("--out", default=None)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("verify", help="self checks")
    p.add_argument("--suite", choices=SUITE_NAMES + ("all",), default="all")
    p.add_argument("--dump-binning", action="store_true",
                   help="print one partition per row and exit")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--c", type=float, default=0.75)
    p.add_argument("--tau", type=float, default=0.02)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
