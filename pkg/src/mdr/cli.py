"""Command line front end: ``mdr simulate|search|clt-check|trace``.

Every command takes its parameters from flags and, optionally, from a JSON
config file (``--config``); flags win. The config file is an object with
``"schema": "mdr-config/1"`` plus any of the long flag names (dashes or
underscores), either at top level or under a key named after the command.

Outputs are CSV files whose first line is ``# config: {...}`` (the full
parameter echo, minus ``workers`` and paths so that reruns compare equal),
plus a short summary on stdout. Dataset files are plain CSV with a JSON
sidecar ``<name>.meta.json`` holding the spaces and the generator echo.

Exit codes: 0 success, 1 runtime error, 2 usage, 3 dataset validation,
4 I/O, 5 gate failure (clt-check).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import clt
from .core import DatasetValidationError, read_dataset_csv, write_dataset_csv
from .cv import PsiScope
from .penalty import default_eps
from .search import identification_rate, search_all
from .simgen import SIGNIFICANT, GeneratorSpec, generate

CONFIG_SCHEMA = "mdr-config/1"

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO, EXIT_GATE = 0, 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


# defaults applied after config/flag merging; scope defaults per command
SCOPE_DEFAULT = {"search": "fold", "clt-check": "complement", "trace": "complement"}

DEFAULTS = {
    "n": 50, "gamma": 0.1, "K": 10, "L": 10, "reps": 1, "name": "dataset",
    "level": 0.95, "mean_tol": 0.15, "var_low": 0.8, "var_high": 1.2, "ks_tol": 0.08,
    "grid": "100,200,500,1000,2000,5000", "statistic": "full",
}


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header: list[str], rows, config: dict) -> None:
    lines = ["# config: " + json.dumps(config, sort_keys=True)]
    lines.append(",".join(header))
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (flags override its values)")
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int, help="parallel workers (default: all CPUs)")


def _add_generator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--example", choices=sorted(SIGNIFICANT), help="simulation design")
    p.add_argument("--N", type=int, help="sample size")
    p.add_argument("--seed", type=int, help="master seed (required for simulated data)")
    p.add_argument("--n", type=int, help="number of factors (default 50)")
    p.add_argument("--gamma", type=float, help="noise level for ex1/ex2 (default 0.1)")


def _add_estimator(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", type=int, help="fold count (default 10)")
    p.add_argument("--eps", type=float, help="regularization level (default N^(-1/4))")
    p.add_argument("--scope", choices=[s.value for s in PsiScope], help="penalty estimate scope")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a simulated dataset and its sidecar")
    _add_common(p)
    _add_generator(p)
    p.add_argument("--stream", type=int, help="substream of the seed (default 0)")
    p.add_argument("--name", help="file stem (default 'dataset')")

    p = sub.add_parser("search", help="rank all r-subsets of factors")
    _add_common(p)
    _add_generator(p)
    _add_estimator(p)
    p.add_argument("--data", help="dataset CSV (sidecar <stem>.meta.json supplies m and s)")
    p.add_argument("--m", type=int, help="response range when the dataset has no sidecar")
    p.add_argument("--s", type=int, help="factor range when the dataset has no sidecar")
    p.add_argument("--r", type=int, help="subset size")
    p.add_argument("--L", type=int, help="report size (default 10)")
    p.add_argument("--reps", type=int, help="simulated replicates; >1 reports the identification rate")

    p = sub.add_parser("clt-check", help="Monte Carlo check of the studentized error")
    _add_common(p)
    _add_generator(p)
    _add_estimator(p)
    p.add_argument("--beta", help="comma-separated factor subset (default: the significant one)")
    p.add_argument("--reps", type=int, help="replicates")
    p.add_argument("--statistic", choices=["full", "prefix", "both"], help="which statistic(s)")
    p.add_argument("--mean-tol", type=float)
    p.add_argument("--var-low", type=float)
    p.add_argument("--var-high", type=float)
    p.add_argument("--ks-tol", type=float)

    p = sub.add_parser("trace", help="estimate and confidence band along a grid of N")
    _add_common(p)
    _add_generator(p)
    _add_estimator(p)
    p.add_argument("--beta", help="comma-separated factor subset (default: the significant one)")
    p.add_argument("--grid", help="comma-separated increasing sample sizes")
    p.add_argument("--level", type=float, help="confidence level (default 0.95)")
    return parser


def load_config(path: str | None, command: str) -> tuple[dict, dict]:
    """(top-level values, values under the command's own key)."""
    if not path:
        return {}, {}
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("schema") != CONFIG_SCHEMA:
        raise UsageError(f"config {path} must be an object with schema {CONFIG_SCHEMA!r}")
    shared = {k.replace("-", "_"): v for k, v in raw.items() if not isinstance(v, dict) and k != "schema"}
    section = {k.replace("-", "_"): v for k, v in raw.get(command, {}).items()}
    return shared, section


def resolve(args: argparse.Namespace) -> dict:
    known = set(vars(args))
    cfg = {k: v for k, v in DEFAULTS.items() if k in known}
    if args.command in SCOPE_DEFAULT:
        cfg["scope"] = SCOPE_DEFAULT[args.command]
    shared, section = load_config(args.config, args.command)
    unknown = sorted(set(section) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    # top-level keys are shared by all commands; each takes what it understands
    cfg.update({k: v for k, v in shared.items() if k in known})
    cfg.update(section)
    cfg.update({k: v for k, v in vars(args).items() if v is not None})
    cfg.pop("config", None)
    return cfg


def _outdir(cfg: dict) -> Path:
    if not cfg.get("out"):
        raise UsageError("--out is required")
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spec(cfg: dict, need_N: bool = True) -> GeneratorSpec:
    if not cfg.get("example"):
        raise UsageError("--example is required")
    if cfg.get("seed") is None:
        raise UsageError("--seed is required for simulated data")
    if need_N and not cfg.get("N"):
        raise UsageError("--N is required")
    try:
        return GeneratorSpec(cfg["example"], int(cfg.get("N") or 1), int(cfg["seed"]), int(cfg["n"]),
                             None if cfg["example"] == "ex3" else float(cfg["gamma"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _beta(cfg: dict, spec: GeneratorSpec):
    if cfg.get("beta"):
        try:
            return tuple(int(v) for v in str(cfg["beta"]).split(","))
        except ValueError:
            raise UsageError(f"--beta must be comma-separated integers, got {cfg['beta']!r}") from None
    return spec.significant.indices


def _echo(cfg: dict, drop=("workers", "out", "command")) -> dict:
    return {k: v for k, v in sorted(cfg.items()) if k not in drop}


# ---------------------------------------------------------------- commands

def cmd_simulate(cfg: dict) -> int:
    spec = _spec(cfg)
    stream = int(cfg.get("stream") or 0)
    out = _outdir(cfg)
    data = generate(spec, stream=stream)
    stem = out / cfg["name"]
    write_dataset_csv(data, stem.with_suffix(".csv"))
    meta = {"schema": CONFIG_SCHEMA, "m": data.m, "s": data.s, "n": data.n, "N": data.N,
            "config": _echo(cfg), **data.metadata}
    meta["coding"] = {str(k): v for k, v in meta["coding"].items()}
    Path(f"{stem}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {stem}.csv ({data.N} rows, {data.n} factors) and {stem}.meta.json")
    return EXIT_OK


def _load_data(cfg: dict):
    path = Path(cfg["data"])
    side = path.with_suffix(".meta.json")
    meta = {}
    if side.exists():
        meta = json.loads(side.read_text())
    m = cfg.get("m", meta.get("m"))
    s = cfg.get("s", meta.get("s"))
    if m is None or s is None:
        raise UsageError(f"no sidecar {side.name}; pass --m and --s")
    return read_dataset_csv(path, int(m), int(s), metadata=meta)


def cmd_search(cfg: dict) -> int:
    r, K, L = cfg.get("r"), int(cfg["K"]), int(cfg["L"])
    if r is None or int(r) < 1:
        raise UsageError("--r must be a positive integer")
    if L < 1:
        raise UsageError("--L must be positive")
    r = int(r)
    scope = PsiScope(cfg["scope"])
    out = _outdir(cfg)
    workers = cfg.get("workers")
    reps = int(cfg["reps"])
    if reps < 1:
        raise UsageError("--reps must be positive")
    if cfg.get("data"):
        data = _load_data(cfg)
        if r > data.n:
            raise UsageError(f"--r={r} exceeds the {data.n} factors")
        echo = _echo({**cfg, "data": Path(cfg["data"]).name})
        started = time.perf_counter()
        report = search_all(data, r, K, cfg.get("eps"), scope, L, workers, cfg.get("seed"))
        elapsed = time.perf_counter() - started
    else:
        spec = _spec(cfg)
        if r > spec.n:
            raise UsageError(f"--r={r} exceeds n={spec.n}")
        if reps > 1:
            return _identification(cfg, spec, r, K, scope, reps, out)
        data = generate(spec)
        echo = _echo(cfg)
        started = time.perf_counter()
        report = search_all(data, r, K, cfg.get("eps"), scope, L, workers, spec.seed)
        elapsed = time.perf_counter() - started
    echo["eps_used"] = report.config["eps"]
    echo["total_evaluated"] = report.total_evaluated
    header = [f"n{i}" for i in range(1, r + 1)] + ["EPE"]
    rows = [list(res.beta.indices) + [res.epe] for res in report.top]
    write_csv(out / "search_report.csv", header, rows, echo)
    for row in rows:
        print(" ".join(f"{v:>3d}" for v in row[:-1]), f"{row[-1]:.4f}")
    print(f"evaluated {report.total_evaluated} subsets in {elapsed:.2f}s "
          f"({report.total_evaluated / max(elapsed, 1e-9):,.0f} subsets/s)")
    return EXIT_OK


def _identification(cfg, spec, r, K, scope, reps, out) -> int:
    started = time.perf_counter()
    run = identification_rate(spec, r, reps, K, cfg.get("eps"), scope, cfg.get("workers"))
    elapsed = time.perf_counter() - started
    rows = [[i, run.target_epe[i], run.best_other_epe[i], int(run.target_epe[i] < run.best_other_epe[i])]
            for i in range(reps)]
    echo = _echo(cfg)
    echo.update(hits=run.hits, rate=run.rate)
    write_csv(out / "identification.csv", ["replicate", "target_epe", "best_other_epe", "identified"],
              rows, echo)
    print(f"{spec.example} N={spec.N} r={r}: identified {run.hits}/{reps} ({run.rate:.0%}) "
          f"in {elapsed:.1f}s")
    return EXIT_OK


def cmd_clt_check(cfg: dict) -> int:
    spec = _spec(cfg)
    K, reps = int(cfg["K"]), cfg.get("reps")
    if reps is None or int(reps) < 1:
        raise UsageError("--reps must be a positive integer")
    reps = int(reps)
    if K < 2:
        raise UsageError("--K must exceed 1")
    N = spec.N
    if N % K:
        N = N - N % K
        print(f"warning: N={spec.N} is not a multiple of K={K}; truncated to {N}", file=sys.stderr)
        if N < K:
            raise UsageError("N too small for K")
    out = _outdir(cfg)
    beta = _beta(cfg, spec)
    scope = PsiScope(cfg["scope"])
    kinds = ["full", "prefix"] if cfg["statistic"] == "both" else [cfg["statistic"]]
    replicates = clt.run_replicates(spec, beta, K, cfg.get("eps"), scope, N, reps)
    gates = dict(mean_tol=float(cfg["mean_tol"]), var_band=(float(cfg["var_low"]), float(cfg["var_high"])),
                 ks_tol=float(cfg["ks_tol"]))
    echo = _echo({**cfg, "N_used": N, "beta": ",".join(map(str, beta)), "scope": scope.value})
    failed = False
    for kind in kinds:
        rep = clt.mc_normality(spec, beta, K, cfg.get("eps"), scope, N, reps, prefix=kind == "prefix",
                               reps=replicates)
        ok = rep.passes(**gates) and not rep.degenerate
        failed |= not ok
        rows = [[i, rep.extra["estimates"][i], rep.extra["sigma2_hat"][i], rep.statistics[i]]
                for i in range(rep.replicates)]
        summary = {"mean": rep.mean, "variance": rep.variance, "ks": rep.ks, "pass": ok,
                   "degenerate": rep.degenerate, "oracle_err": rep.extra["oracle_err"],
                   "oracle_sigma2": rep.extra["oracle_sigma2"], "m_N": rep.extra["m_N"]}
        write_csv(out / f"mc_{kind}.csv", ["replicate", "estimate", "sigma2_hat", "statistic"], rows,
                  {**echo, "statistic": kind, "summary": summary})
        flag = "DEGENERATE" if rep.degenerate else ("PASS" if ok else "FAIL")
        print(f"{kind}: mean={rep.mean:+.4f} var={rep.variance:.4f} ks={rep.ks:.4f} "
              f"oracle_err={rep.extra['oracle_err']:.4f} -> {flag}")
    return EXIT_GATE if failed else EXIT_OK


def cmd_trace(cfg: dict) -> int:
    spec = _spec(cfg, need_N=False)
    try:
        grid = [int(v) for v in str(cfg["grid"]).split(",")]
    except ValueError:
        raise UsageError(f"--grid must be comma-separated integers, got {cfg['grid']!r}") from None
    out = _outdir(cfg)
    beta = _beta(cfg, spec)
    scope = PsiScope(cfg["scope"])
    eps_rule = cfg["eps"] if cfg.get("eps") is not None else default_eps
    rows = clt.stabilization_trace(spec, beta, int(cfg["K"]), eps_rule, scope, grid, level=float(cfg["level"]))
    echo = _echo({**cfg, "beta": ",".join(map(str, beta))})
    write_csv(out / "trace.csv", list(clt.TRACE_COLUMNS), rows, echo)
    for row in rows:
        print(f"N={row[0]:>6d} epe={row[1]:.4f} oracle={row[2]:.4f} CI=[{row[3]:.4f}, {row[4]:.4f}]")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "search": cmd_search, "clt-check": cmd_clt_check, "trace": cmd_trace}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"mdr {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetValidationError as exc:
        print(f"mdr {args.command}: invalid dataset: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"mdr {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"mdr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
