"""Command-line entry points: evolve-tsp, evolve-step, bench, render, analyze."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import re
import shlex
import sys
import time
from pathlib import Path

from .fwa import FwaParams, run_fwa
from .orchestrator import Pool, RunConfig, evolve
from .similarity import mean_sd, similarity_matrix, welch_t_test
from .tsp import bundled_best_known, bundled_instance, load_instance, parse_best_known, relative_gap, tour_length
from .visual import render_tsp_artifacts


def _on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON RunConfig; flags below override it")
    p.add_argument("--iterations", type=int)
    p.add_argument("--pool", type=int, dest="pool_capacity")
    p.add_argument("--visual", type=_on_off, dest="visual_mode", metavar="on|off")
    p.add_argument("--backend", choices=("live", "replay", "null"))
    p.add_argument("--replay-dir")
    p.add_argument("--endpoint")
    p.add_argument("--model")
    p.add_argument("--api-key-env")
    p.add_argument("--command", type=shlex.split, help="candidate runtime template, e.g. 'python3 {code_file}'")
    p.add_argument("--language")
    p.add_argument("--template-dir")
    p.add_argument("--eval-cap", type=int)
    p.add_argument("--seed", type=int, dest="rng_seed")
    p.add_argument("--run-dir")
    p.add_argument("--resume", action="store_true", help="continue from the run directory's state.json")


_RUN_KEYS = ("iterations", "pool_capacity", "visual_mode", "backend", "replay_dir", "endpoint", "model",
             "api_key_env", "command", "language", "template_dir", "eval_cap", "rng_seed", "run_dir")


def _run(args, task: str, extra: dict) -> int:
    overrides = {k: getattr(args, k) for k in _RUN_KEYS}
    overrides.update(extra)
    overrides["task"] = task
    if args.config:
        cfg = RunConfig.load(args.config, **overrides)
    else:
        cfg = RunConfig(**{k: v for k, v in overrides.items() if v is not None})
    result = evolve(cfg, resume=args.resume)
    print(f"best {result.best.id} score {result.best.score:.4f}")
    print(f"pool: {', '.join(f'{c.id}={c.score:.4f}' for c in result.pool.members)}")
    print(f"run directory: {cfg.run_dir}")
    return 0


def cmd_evolve_tsp(args) -> int:
    extra = {"instance": args.instance, "tsp_eval_budget": args.eval_budget, "tsp_runs": args.runs,
             "tsp_timeout": args.timeout}
    return _run(args, "tsp", extra)


def cmd_evolve_step(args) -> int:
    synthetic = None
    if args.problem is None and any(v is not None for v in (args.cells, args.nets, args.problem_seed)):
        synthetic = {k: v for k, v in (("num_cells", args.cells), ("num_nets", args.nets), ("seed", args.problem_seed))
                     if v is not None}
    extra = {"instance": args.problem, "step_iters": args.step_iters, "step_timeout": args.timeout,
             "synthetic": synthetic}
    return _run(args, "step", extra)


def _resolve_instance(name_or_path: str, registry: dict[str, int]):
    path = Path(name_or_path)
    if path.exists():
        return load_instance(path, registry)
    inst = bundled_instance(name_or_path)
    return inst.with_best_known(registry[inst.name]) if inst.name in registry else inst


def cmd_bench(args) -> int:
    registry = bundled_best_known()
    if args.registry:
        registry.update(parse_best_known(Path(args.registry).read_text(encoding="utf-8")))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "n", "best_known", "length", "gap_percent", "float_length", "float_gap_percent",
                     "evaluations", "seconds"])
    for name_or_path in args.instances:
        inst = _resolve_instance(name_or_path, registry)
        lengths, floats, evals, start = [], [], 0, time.perf_counter()
        for r in range(args.runs):
            res = run_fwa(inst, FwaParams(rng_seed=args.seed + r, eval_budget=args.budget))
            lengths.append(res.length)
            floats.append(tour_length(inst, res.tour, "floating"))
            evals = res.evaluations
        # the search runs on rounded distances; the float column re-measures the same tours
        length, flength = sum(lengths) / len(lengths), sum(floats) / len(floats)
        best = f"{inst.best_known:g}" if inst.best_known else ""
        gap = f"{relative_gap(length, inst.best_known):.2f}" if inst.best_known else ""
        fgap = f"{relative_gap(flength, inst.best_known):.2f}" if inst.best_known else ""
        writer.writerow([inst.name, inst.dimension, best, f"{length:g}", gap, f"{flength:.2f}", fgap, evals,
                         f"{time.perf_counter() - start:.2f}"])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    sys.stdout.write(buf.getvalue())
    return 0


def _read_numbers(path: str) -> list[float]:
    text = Path(path).read_text(encoding="utf-8").strip()
    if text.startswith("["):
        return [float(x) for x in json.loads(text)]
    return [float(x) for x in re.split(r"[\s,]+", text) if x]


def cmd_render(args) -> int:
    inst = _resolve_instance(args.instance, bundled_best_known())
    tour = [int(x) for x in _read_numbers(args.tour)]
    for art in render_tsp_artifacts(inst, tour):
        path = art.save(args.out_dir, args.id)
        metrics = ", ".join(f"{k}={v:g}" for k, v in art.metrics.items())
        print(f"{path} ({metrics})")
    return 0


def cmd_analyze(args) -> int:
    if not args.run_dir and not args.groups:
        raise SystemExit("analyze needs --run-dir and/or --groups")
    if args.run_dir:
        ids, codes = [], []
        for run_dir in args.run_dir:
            pool = Pool.from_json((Path(run_dir) / "pool.json").read_text(encoding="utf-8"))
            prefix = f"{Path(run_dir).name}/" if len(args.run_dir) > 1 else ""
            ids += [prefix + c.id for c in pool.members]
            codes += [c.code for c in pool.members]
        text = similarity_matrix(codes, args.k, ids).to_csv()
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            print(f"{len(ids)}x{len(ids)} similarity matrix written to {args.out}")
        else:
            sys.stdout.write(text)
    if args.groups:
        a, b = (_read_numbers(g) for g in args.groups)
        for name, sample in zip(args.groups, (a, b)):
            m, sd = mean_sd(sample)
            print(f"{name}: {m:.4f}±{sd:.4f} (mean±SD, n={len(sample)})")
        res = welch_t_test(a, b)
        print(f"Welch t = {res.t:.4f}, df = {res.df:.2f}, p = {res.p:.6g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cpevolve", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command_name", required=True)

    p = sub.add_parser("evolve-tsp", help="evolve the FWA operators on a TSPLIB instance")
    p.add_argument("--instance", help="TSPLIB file (default: bundled eil51)")
    p.add_argument("--eval-budget", type=int, help="tour evaluations per candidate run")
    p.add_argument("--runs", type=int, help="runs averaged per candidate score")
    p.add_argument("--timeout", type=float, help="seconds per candidate run")
    _add_run_options(p)
    p.set_defaults(func=cmd_evolve_tsp)

    p = sub.add_parser("evolve-step", help="evolve the placement step-size rule")
    p.add_argument("--problem", help="placement problem JSON (default: synthetic netlist)")
    p.add_argument("--cells", type=int)
    p.add_argument("--nets", type=int)
    p.add_argument("--problem-seed", type=int)
    p.add_argument("--step-iters", type=int, help="optimizer iterations per candidate")
    p.add_argument("--timeout", type=float, help="reply deadline per optimizer iteration")
    _add_run_options(p)
    p.set_defaults(func=cmd_evolve_step)

    p = sub.add_parser("bench", help="reference FWA gap table as CSV")
    p.add_argument("instances", nargs="+", help="TSPLIB files or bundled names")
    p.add_argument("--budget", type=int, default=200_000)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--registry", help="extra best-known file ('name length' per line)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="write the three TSP diagnostic PNGs for a tour")
    p.add_argument("--instance", required=True)
    p.add_argument("--tour", required=True, help="file with city indices (whitespace, commas or a JSON list)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--id", default="tour")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("analyze", help="code similarity matrix and Welch t-test")
    p.add_argument("--run-dir", nargs="+")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out")
    p.add_argument("--groups", nargs=2, metavar=("A", "B"), help="files of similarity values to compare")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
