"""Command-line front end: ``volbench {clv,ffv} run``, ``sweep``, ``replay``
and ``circuits export``.

Exit codes: 0 completed (a score of 0 is a result), 1 internal failure,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import export_qasm, freefermion_circuit, metrics, rotation_depth
from .clv import ClvConfig, SIGMA_AVG_MODES, make_instance as make_clv_instance
from .clv import replay_verdict, run_clv_search
from .estimates import READOUT_MODES, NoiseParams
from .ffv import COUNT_RULES, NORMALIZERS, FfvConfig, measurement_count, run_ffv_search
from .ffv import make_instance as make_ffv_instance
from .majorana import jw_majorana
from .orthogonal import select_top_indices
from .parallel import default_workers
from .report import build_report, dumps_report, levels_csv, metrics_csv, sweep_csv, validate_report
from .search import SEARCH_MODES
from .tableau import ENGINES

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE = 0, 1, 2
CI_ENV = "CI"
SWEEP_SHOTS = 4096
DEFAULT_GRID = (5e-5, 2.9e-4, 1.7e-3, 1e-2)


class UsageError(Exception):
    pass


def _in_ci() -> bool:
    return os.environ.get(CI_ENV, "").strip().lower() not in ("", "0", "false", "no")


def _prob(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"probability out of range: {v}")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be positive: {v}")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {v}")
    return v


def _common_run_args(p: argparse.ArgumentParser, shots_default: int) -> None:
    p.add_argument("--n-max", type=_positive, required=True, help="largest qubit count probed")
    p.add_argument("--p2q", type=_prob, default=0.0, help="depolarising probability per two-qubit gate")
    p.add_argument("--pm", type=_prob, default=0.0, help="readout flip probability per qubit")
    p.add_argument("--readout", choices=READOUT_MODES, default="qubit")
    p.add_argument("--shots", type=_positive, default=shots_default)
    p.add_argument("--k", type=_positive, default=4, help="random instances per level")
    p.add_argument("--seed", type=_nonneg, default=None)
    p.add_argument("--search", choices=SEARCH_MODES, default="linear")
    p.add_argument("--allow-few-shots", action="store_true")
    p.add_argument("--workers", type=_positive, default=None, help="process count (default from VOLBENCH_WORKERS)")


def _clv_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-m", type=_positive, default=4, help="observables of each kind per Clifford")
    p.add_argument("--sigma-avg", choices=SIGMA_AVG_MODES, default="sem")
    p.add_argument("--engine", choices=tuple(ENGINES), default="frame")


def _ffv_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--count-rule", choices=COUNT_RULES, default="per5")
    p.add_argument("--normalizer", choices=NORMALIZERS, default="empirical")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="volbench", description="Clifford and free-fermion volumetric benchmarks")
    parser.add_argument("--version", action="version", version=f"volbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for bench in ("clv", "ffv"):
        bp = sub.add_parser(bench, help=f"{bench.upper()} benchmark")
        bsub = bp.add_subparsers(dest="action", required=True)
        run = bsub.add_parser("run", help="search for the score and write a JSON report")
        _common_run_args(run, 512)
        (_clv_args if bench == "clv" else _ffv_args)(run)
        run.add_argument("--out", type=Path, default=None, help="report path (default stdout summary only)")
        run.add_argument("--levels-csv", type=Path, default=None, help="also write (n, pass) rows")
        run.add_argument("--no-timing", action="store_true", help="omit wall-clock fields")

    sw = sub.add_parser("sweep", help="score heatmap over a (p2q, pm) grid")
    sw.add_argument("benchmark", choices=("clv", "ffv"))
    grid = sw.add_mutually_exclusive_group(required=True)
    grid.add_argument("--grid-file", type=Path, help='JSON object {"p2q": [...], "pm": [...]}')
    grid.add_argument("--default-grid", action="store_true")
    sw.add_argument("--n-max", type=_positive, default=None, help="default 48 (clv) or 64 (ffv)")
    sw.add_argument("--shots", type=_positive, default=SWEEP_SHOTS)
    sw.add_argument("--k", type=_positive, default=4)
    sw.add_argument("--seed", type=_nonneg, default=None)
    sw.add_argument("--readout", choices=READOUT_MODES, default="qubit")
    sw.add_argument("--workers", type=_positive, default=None)
    sw.add_argument("--out", type=Path, default=None, help="CSV path (default stdout)")

    rp = sub.add_parser("replay", help="judge a table of measured expectation values")
    rp.add_argument("--table", required=True, help="JSON file, or the name of a bundled fixture such as n34")
    rp.add_argument("--sigma-avg", choices=SIGMA_AVG_MODES, default="sem")

    cp = sub.add_parser("circuits", help="circuit generation")
    csub = cp.add_subparsers(dest="action", required=True)
    ex = csub.add_parser("export", help="write OpenQASM files, sidecars and a metrics CSV")
    ex.add_argument("family", choices=("clifford", "ff"))
    ex.add_argument("--n", type=_positive, required=True)
    ex.add_argument("--count", type=_positive, default=1)
    ex.add_argument("--seed", type=_nonneg, default=None)
    ex.add_argument("--out-dir", type=Path, required=True)
    return parser


def _seed(args) -> int:
    if args.seed is None:
        if _in_ci():
            raise UsageError("--seed is mandatory when CI is set")
        return 0
    return args.seed


def _workers(args) -> int:
    if getattr(args, "workers", None) is not None:
        return args.workers
    try:
        return default_workers()
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _noise(args) -> NoiseParams:
    if args.pm > 0.5:
        raise UsageError("--pm must not exceed 0.5")
    return NoiseParams(p2q=args.p2q, pm=args.pm, readout=args.readout)


def _clv_config(args, seed: int) -> ClvConfig:
    return ClvConfig(
        K=args.k,
        n_m=args.n_m,
        shots=args.shots,
        noise=_noise(args),
        seed=seed,
        search=args.search,
        sigma_avg=args.sigma_avg,
        engine=args.engine,
        allow_few_shots=args.allow_few_shots,
    )


def _ffv_config(args, seed: int) -> FfvConfig:
    return FfvConfig(
        K=args.k,
        shots=args.shots,
        noise=_noise(args),
        count_rule=args.count_rule,
        normalizer=args.normalizer,
        seed=seed,
        search=args.search,
        allow_few_shots=args.allow_few_shots,
    )


def _write(path: Path | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def cmd_run(args) -> int:
    seed = _seed(args)
    workers = _workers(args)
    try:
        cfg = _clv_config(args, seed) if args.command == "clv" else _ffv_config(args, seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.command == "clv":
        score, levels = run_clv_search(cfg, args.n_max, workers)
    else:
        score, levels = run_ffv_search(cfg, args.n_max, workers)
    report = build_report(args.command, cfg.to_dict(), args.n_max, score, levels, timing=not args.no_timing)
    validate_report(report)
    if args.out is not None:
        _write(args.out, dumps_report(report))
    if args.levels_csv is not None:
        _write(args.levels_csv, levels_csv(levels))
    print(f"{args.command} score: {score}")
    return EXIT_OK


def _load_grid(args) -> tuple[list[float], list[float]]:
    if args.default_grid:
        return list(DEFAULT_GRID), list(DEFAULT_GRID)
    try:
        doc = json.loads(args.grid_file.read_text())
        p2q = [float(v) for v in doc["p2q"]]
        pm = [float(v) for v in doc["pm"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read grid file: {exc}") from None
    for name, axis, hi in (("p2q", p2q, 1.0), ("pm", pm, 0.5)):
        if not axis:
            raise UsageError(f"{name} grid is empty")
        if any(b <= a for a, b in zip(axis, axis[1:])):
            raise UsageError(f"{name} grid must be strictly increasing")
        if axis[0] < 0 or axis[-1] > hi:
            raise UsageError(f"{name} grid out of range")
    return p2q, pm


def sweep_scores(benchmark: str, p2q, pm, n_max: int, base, workers: int = 1) -> list[list[int]]:
    """Score for every (pm, p2q) cell; ``base`` supplies everything but the noise."""
    run = run_clv_search if benchmark == "clv" else run_ffv_search
    scores = []
    for m in pm:
        row = []
        for p in p2q:
            cfg = replace(base, noise=replace(base.noise, p2q=p, pm=m))
            row.append(run(cfg, n_max, workers)[0])
        scores.append(row)
    return scores


def cmd_sweep(args) -> int:
    seed = _seed(args)
    workers = _workers(args)
    p2q, pm = _load_grid(args)
    noise = NoiseParams(readout=args.readout)
    try:
        if args.benchmark == "clv":
            n_max = args.n_max or 48
            base = ClvConfig(K=args.k, shots=args.shots, noise=noise, seed=seed)
        else:
            n_max = args.n_max or 64
            base = FfvConfig(K=args.k, shots=args.shots, noise=noise, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    scores = sweep_scores(args.benchmark, p2q, pm, n_max, base, workers)
    _write(args.out, sweep_csv(p2q, pm, scores))
    return EXIT_OK


def load_table(ref: str) -> dict:
    path = Path(ref)
    if not path.exists():
        fixture = resources.files("volbench").joinpath(f"data/published_runs/{ref}.json")
        if not fixture.is_file():
            raise UsageError(f"no such table file or fixture: {ref}")
        return json.loads(fixture.read_text())
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read table: {exc}") from None


def cmd_replay(args) -> int:
    table = load_table(args.table)
    cfg = ClvConfig(sigma_avg=args.sigma_avg)
    try:
        verdict, _ = replay_verdict(table, cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ok = lambda flag: "PASS" if flag else "FAIL"  # noqa: E731
    for k, (sf, df, (sa, da)) in enumerate(
        zip(verdict.stabilizer_flags, verdict.destabilizer_flags, verdict.average_flags)
    ):
        print(f"clifford {k} worst-case stabilizers:   {ok(all(sf))}")
        print(f"clifford {k} worst-case destabilizers: {ok(all(df))}")
        print(f"clifford {k} average stabilizers:      {ok(sa)}")
        print(f"clifford {k} average destabilizers:    {ok(da)}")
    print(f"n={verdict.n} verdict: {ok(verdict.passed)}")
    return EXIT_OK


def _metrics_row(name: str, n: int, c) -> dict:
    m = metrics(c)
    return {
        "name": name,
        "n": n,
        "two_qubit_depth": m.two_qubit_depth,
        "two_qubit_count": m.two_qubit_count,
        "total_depth": m.total_depth,
        "total_count": m.total_count,
    }


def cmd_export(args) -> int:
    seed = _seed(args)
    n = args.n
    out = args.out_dir
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    extra: tuple[str, ...] = ()
    for k in range(args.count):
        name = f"{args.family}_n{n}_{k}"
        if args.family == "clifford":
            inst = make_clv_instance(seed, n, k, n)
            circ = inst.circuit
            sidecar = {
                "family": "clifford",
                "n": n,
                "instance": k,
                "seed": seed,
                "stabilizers": [str(inst.tableau.row(n + i)) for i in range(n)],
                "destabilizers": [str(inst.tableau.row(i)) for i in range(n)],
            }
            rows.append(_metrics_row(name, n, circ))
        else:
            inst = make_ffv_instance(seed, n, k)
            f = inst.fermion
            circ = freefermion_circuit(f.program, f.init_index)
            J = select_top_indices(f.O, f.init_index, measurement_count(n), prefer=f.init_index)
            sidecar = {
                "family": "ff",
                "n": n,
                "instance": k,
                "seed": seed,
                "init_index": f.init_index,
                "orthogonal_index": inst.j_orth,
                "column": [float(v) for v in f.O[:, f.init_index]],
                "orthogonal_column": [float(v) for v in f.O[:, inst.j_orth]],
                "J": [int(j) for j in J],
                "measured_operators": [str(jw_majorana(n, int(j))) for j in J],
            }
            extra = ("rotation_depth", "two_mode_rotations")
            row = _metrics_row(name, n, circ)
            row["rotation_depth"] = rotation_depth(f.program)
            row["two_mode_rotations"] = f.program.two_mode_rotation_count()
            rows.append(row)
        (out / f"{name}.qasm").write_text(export_qasm(circ), encoding="utf-8", newline="\n")
        (out / f"{name}.json").write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8", newline="\n")
    (out / "metrics.csv").write_text(metrics_csv(rows, extra), encoding="utf-8", newline="\n")
    print(f"wrote {len(rows)} circuits to {out}")
    return EXIT_OK


def dispatch(args) -> int:
    if args.command in ("clv", "ffv"):
        return cmd_run(args)
    if args.command == "sweep":
        return cmd_sweep(args)
    if args.command == "replay":
        return cmd_replay(args)
    return cmd_export(args)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return dispatch(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"volbench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
