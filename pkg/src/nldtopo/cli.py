"""Command-line entry point: run a config, a named benchmark, or a sweep."""

from __future__ import annotations

import argparse
import itertools
import sys
from pathlib import Path

import yaml

from .config import OVERRIDE_KEYS, RunConfig, parse_config
from .errors import ConfigError, SolverError
from .optimizer import BENCHMARKS, NullSink
from .output import FileSink

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


def _execute(cfg: RunConfig, out_override=None) -> int:
    setup = cfg.build()
    outdir = out_override or cfg.output_dir
    if outdir:
        sink = FileSink(outdir, setup.mesh, setup.smoothing,
                        snapshot_every=cfg.snapshot_every, formats=cfg.snapshot_formats)
    else:
        sink = NullSink()
    try:
        result = setup.execute(sink=sink)
    finally:
        sink.close()
    last = result.history[-1] if result.history else None
    f = last.objective if last else float("nan")
    g = last.constraint if last else float("nan")
    print(f"stop reason: {result.reason}  F={f:.8g}  G={g:.8g}  steps={result.steps}")
    return EXIT_SOLVER if result.reason == "solver_failure" else EXIT_OK


def _cmd_run(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    return _execute(cfg, out_override=args.out)


def _cmd_benchmark(args) -> int:
    overrides = {}
    for key in ("q", "q_tilde", "dt", "tau", "rho", "xi", "p", "gamma"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if args.scheme is not None:
        overrides["scheme"] = args.scheme
    if args.h is not None:
        overrides["h"] = args.h
    if args.max_steps is not None:
        overrides["max_steps"] = args.max_steps
    if args.init is not None:
        overrides["init"] = args.init
    data = {"benchmark": args.name}
    if overrides:
        data["overrides"] = overrides
    if args.nx is not None:
        data["nx"] = args.nx
    if args.ny is not None:
        data["ny"] = args.ny
    if args.snapshot_every is not None:
        data["snapshot_every"] = args.snapshot_every
    cfg = parse_config(yaml.safe_dump(data))
    return _execute(cfg, out_override=args.out)


def _parse_grid(spec: str) -> list:
    """Parse 'q=1,2,4;dt=0.3,0.5' into a list of override dicts."""
    axes = []
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        if "=" not in part:
            raise ConfigError(f"grid axis {part!r} must look like key=v1,v2,...")
        key, values = part.split("=", 1)
        key = key.strip()
        if key not in OVERRIDE_KEYS:
            raise ConfigError(f"grid key {key!r} not overridable; allowed: {list(OVERRIDE_KEYS)}")
        vals = []
        for v in values.split(","):
            v = v.strip()
            if key == "scheme":
                vals.append(v)
            elif key in ("h", "max_steps"):
                vals.append(int(v))
            else:
                vals.append(float(v))
        axes.append((key, vals))
    combos = []
    for values in itertools.product(*(vals for _, vals in axes)):
        combos.append(dict(zip((k for k, _ in axes), values)))
    return combos


def _cmd_sweep(args) -> int:
    cfg = parse_config(Path(args.config).read_text(encoding="utf-8"))
    combos = _parse_grid(args.grid)
    if not combos:
        raise ConfigError("sweep grid is empty")
    base_out = Path(args.out or cfg.output_dir or "sweep")
    worst = EXIT_OK
    for combo in combos:
        data = dict(cfg.data)
        overrides = dict(data.get("overrides") or {})
        overrides.update(combo)
        data["overrides"] = overrides
        label = "_".join(f"{k}{v:g}" if isinstance(v, float) else f"{k}{v}"
                         for k, v in sorted(combo.items()))
        data["output_dir"] = str(base_out / label)
        sub = RunConfig(data=data)
        sub.build()   # validate combined overrides
        print(f"[{label}]", end=" ")
        worst = max(worst, _execute(sub))
    return worst


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nldtopo",
        description="Level-set topology optimization with nonlinear diffusion updates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a YAML run configuration")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="override the output directory")
    p_run.set_defaults(func=_cmd_run)

    p_bm = sub.add_parser("benchmark", help="run a named benchmark with overrides")
    p_bm.add_argument("name", choices=BENCHMARKS)
    p_bm.add_argument("--q", type=float)
    p_bm.add_argument("--q-tilde", dest="q_tilde", type=float)
    p_bm.add_argument("--dt", type=float)
    p_bm.add_argument("--tau", type=float)
    p_bm.add_argument("--rho", type=float)
    p_bm.add_argument("--xi", type=float)
    p_bm.add_argument("--p", type=float)
    p_bm.add_argument("--gamma", type=float)
    p_bm.add_argument("--h", type=int, choices=(0, 1))
    p_bm.add_argument("--scheme", choices=("nld", "nnld", "dnld"))
    p_bm.add_argument("--init", choices=("full", "perforated", "upper_half"))
    p_bm.add_argument("--nx", type=int)
    p_bm.add_argument("--ny", type=int)
    p_bm.add_argument("--max-steps", dest="max_steps", type=int)
    p_bm.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p_bm.add_argument("--out")
    p_bm.set_defaults(func=_cmd_benchmark)

    p_sw = sub.add_parser("sweep", help="run a config across a parameter grid")
    p_sw.add_argument("config")
    p_sw.add_argument("--grid", required=True, help="e.g. 'q=1,2,4;dt=0.3,0.5'")
    p_sw.add_argument("--out", help="base output directory for the sweep")
    p_sw.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
