import argparse
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from time import time

import numpy as np
import pandas as pd

from config import settings
from landscape.bundled_problems import BUNDLED, bundled_names, resolve_problem
from landscape.catalog import (
    catalog_frame,
    decompose,
    enumerate_points,
    format_permutation,
    parse_permutation,
)
from landscape.engine import classify, evaluate
from landscape.ensemble import (
    dilated_unitary,
    load_matrix,
    load_problem,
    naimark_dilate,
    problem_to_dict,
    save_problem,
    validate,
)
from landscape.errors import IoError, LandscapeError, ParseError
from landscape.export import emit_figure_data
from landscape.matrix_kernel import permutation_matrix
from landscape.optimizer import OptimizerConfig, run_seeds, runs_frame, survey_critical_points, survey_frame
from landscape.traps import (
    brute_force_survey,
    certify_trap,
    corollary2_check,
    distinct_values,
    false_trap_points,
    global_max_value,
)
from util.io_helper import dump_json_text, frame_to_csv_text, save_csv, save_json
from util.logger import setup_logger

logger = setup_logger(name="main", log_dir=Path(settings.LOG_DIR) / "main")

COLUMN_HELP = """delimited column orders:
  enumerate     pi,value,classification,min_hessian_eig,max_hessian_eig
  detect-traps  value,count,classification,reconcilable,ft
  optimize      seed,iterations,terminal_value,classification,reconcilable,status
  survey        index,value,residual,classification,reconcilable
  --out for optimize/survey writes a histogram file (value_bin,count,reconcilable,classification)
  plus the raw records to <stem>_raw<suffix>."""


@contextmanager
def log_step(name, logger):
    start = time()
    logger.info(f"[시작] {name}")
    yield
    end = time()
    logger.info(f"[완료] {name} - {end - start:.2f}초")


def resolve_unitary(spec, problem):
    """identity, perm:<1부터 시작하는 한 줄 표기>, 문제의 checkpoint 이름, 또는 행렬 파일 경로"""
    D = problem.dimension
    if spec == "identity":
        return np.eye(D, dtype=complex)
    if spec.startswith("perm:"):
        return permutation_matrix(parse_permutation(spec[len("perm:"):], D)).astype(complex)
    checkpoints = problem.metadata.get("checkpoints", {})
    if spec in checkpoints:
        return resolve_unitary(checkpoints[spec], problem)
    if Path(spec).is_file():
        return load_matrix(spec)
    raise ParseError(f"unitary {spec!r} is not identity, perm:..., a checkpoint name or a file", field="unitary")


def output_path(out) -> Path:
    # 디렉터리 없는 파일명은 OUTPUT_DIR 아래로
    path = Path(out)
    if path.parent == Path(".") and not path.is_absolute():
        return Path(settings.OUTPUT_DIR) / path
    return path


def emit(args, payload, frame=None):
    """결과 출력: --out이 있으면 파일, 없으면 stdout"""
    delimited = args.format == "delimited" and frame is not None
    if args.out:
        out = output_path(args.out)
        if delimited:
            if not save_csv(frame, out):
                raise IoError(f"failed to write {out}")
        else:
            try:
                save_json(out, payload)
            except OSError as e:
                raise IoError(f"failed to write {out}: {e}") from e
        print(dump_json_text({"written": str(out)}))
        return
    print(frame_to_csv_text(frame) if delimited else dump_json_text(payload), end="" if delimited else "\n")


def _one_row(payload):
    return pd.DataFrame([{k: v for k, v in payload.items() if not isinstance(v, (list, dict))}])


# ------------------------- 명령 -------------------------
def cmd_validate(args):
    problem = resolve_problem(args.problem)
    report = validate(problem)
    payload = {"name": problem.name, "dimension": problem.dimension, "terms": problem.num_terms, **report.to_dict()}
    emit(args, payload, _one_row(payload))


def cmd_evaluate(args):
    problem = resolve_problem(args.problem)
    U = resolve_unitary(args.unitary, problem)
    payload = {"unitary": args.unitary, "value": evaluate(problem, U)}
    emit(args, payload, _one_row(payload))


def cmd_classify(args):
    problem = resolve_problem(args.problem)
    U = resolve_unitary(args.unitary, problem)
    payload = {"unitary": args.unitary, **classify(problem, U).to_dict()}
    emit(args, payload, _one_row(payload))


def _decomposition_dict(decomposition):
    return {
        "state_blocks": decomposition.state_blocks.tolist(),
        "operator_blocks": decomposition.operator_blocks.tolist(),
        "state_multiplicities": list(decomposition.state_multiplicities),
        "operator_multiplicities": list(decomposition.operator_multiplicities),
        "ties_adjusted": decomposition.ties_adjusted,
    }


def cmd_enumerate(args):
    problem = resolve_problem(args.problem)
    decomposition = decompose(problem)
    threads = args.threads or settings.THREADS
    points = enumerate_points(decomposition, mode=args.mode, n=args.samples, seed=args.seed_offset, threads=threads)
    frame = catalog_frame(points)
    payload = {"decomposition": _decomposition_dict(decomposition), "points": frame.to_dict(orient="records")}
    emit(args, payload, frame)


def cmd_detect_traps(args):
    problem = resolve_problem(args.problem)
    decomposition = decompose(problem)
    corollary2 = None
    threads = args.threads or settings.THREADS
    if problem.num_terms == 3 and decomposition.blocks_match:
        result = corollary2_check(decomposition)
        corollary2 = {"holds": result.holds, "loop": result.loop, "positions": result.positions, "loss": result.loss}

    if args.mode == "exhaustive":
        census = brute_force_survey(problem, decomposition, threads=threads)
        traps = false_trap_points(census, decomposition)
        payload = {**census.to_dict(), "decomposition": _decomposition_dict(decomposition)}
        frame = census.records()
    else:
        points = enumerate_points(decomposition, mode="sampled", n=args.samples, seed=args.seed_offset, threads=threads)
        traps = [(p, certify_trap(p, decomposition)) for p in points if p.is_local_max]
        traps = [(p, c) for p, c in traps if c.is_false_trap]
        payload = {
            "global_max": global_max_value(decomposition),
            "max_trap_values": distinct_values([p.value for p, _ in traps]),
            "decomposition": _decomposition_dict(decomposition),
        }
        frame = catalog_frame([p for p, _ in traps])

    payload["traps"] = [{"pi": format_permutation(p.pi), **c.to_dict()} for p, c in traps]
    payload["corollary2"] = corollary2
    emit(args, payload, frame)


def cmd_optimize(args):
    problem = resolve_problem(args.problem)
    config = OptimizerConfig(
        mode=args.mode,
        max_iters=args.max_iters,
        grad_tol=args.tol if args.tol is not None else 1e-6,
    )
    seeds = range(args.seed_offset, args.seed_offset + args.seeds)
    with log_step(f"{problem.name or args.problem} {args.mode} ({args.seeds} seeds)", logger):
        records = run_seeds(problem, config, seeds, threads=args.threads, progress=not args.no_progress)

    payload = {
        "mode": args.mode,
        "terminal_values": distinct_values([r.terminal_value for r in records], tol=1e-6),
        "runs": [r.to_dict() for r in records],
    }
    if args.out:
        hist, raw = emit_figure_data(records, output_path(args.out), kind="runs", bin_width=args.bin_width)
        print(dump_json_text({"histogram": str(hist), "raw": str(raw), "terminal_values": payload["terminal_values"]}))
        return
    emit(args, payload, runs_frame(records))


def cmd_survey(args):
    problem = resolve_problem(args.problem)
    with log_step(f"{problem.name or args.problem} 임계점 탐색 ({args.seeds} seeds)", logger):
        raw, unique = survey_critical_points(
            problem,
            args.seeds,
            tol=args.tol if args.tol is not None else 1e-10,
            seed_offset=args.seed_offset,
            threads=args.threads,
            progress=not args.no_progress,
        )
    if args.out:
        hist, raw_path = emit_figure_data(raw, output_path(args.out), kind="survey", bin_width=args.bin_width)
        print(dump_json_text({"histogram": str(hist), "raw": str(raw_path), "converged": len(raw)}))
        return
    payload = {
        "seeds": args.seeds,
        "converged": len(raw),
        "unique": [
            {k: v for k, v in r.to_dict().items() if k != "hessian_spectrum"} for r in unique
        ],
    }
    emit(args, payload, survey_frame(raw))


def cmd_dilate(args):
    problem = resolve_problem(args.problem)
    dilated, record = naimark_dilate(problem)
    U = resolve_unitary(args.unitary, problem)
    payload = {
        "dimension": dilated.dimension,
        "unitary": args.unitary,
        "value": evaluate(problem, U),
        "dilated_value": evaluate(dilated, dilated_unitary(record, U)),
    }
    if args.out:
        out = output_path(args.out)
        save_problem(dilated, out)
        payload["written"] = str(out)
    else:
        payload["problem"] = problem_to_dict(dilated)
    print(dump_json_text(payload))


def cmd_examples(args):
    out_dir = Path(args.out or settings.PROBLEM_DIR)
    written = []
    for name in bundled_names():
        problem = BUNDLED[name]()
        path = out_dir / f"{name}.json"
        try:
            save_problem(problem, path)
        except OSError as e:
            raise IoError(f"failed to write {path}: {e}") from e
        reloaded = load_problem(path)
        same = all(
            np.array_equal(a, b)
            for a, b in (
                (problem.weights, reloaded.weights),
                (problem.states, reloaded.states),
                (problem.operators, reloaded.operators),
            )
        )
        if not same:
            raise IoError(f"{path} does not reload to the same problem")
        written.append(str(path))
    print(dump_json_text({"written": written, "verified": True}))


# ------------------------- 인자 파서 -------------------------
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", help="problem file, path without .json, or bundled name")
    common.add_argument("--format", choices=["structured", "delimited"], default="structured")
    common.add_argument("--out", help="output path")
    common.add_argument("--threads", type=int, help="worker threads (default LANDSCAPE_THREADS)")
    common.add_argument("--no-progress", action="store_true")

    parser = argparse.ArgumentParser(
        prog="landscape",
        description="Quantum-classical optimization landscape analysis",
        epilog=COLUMN_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, needs_problem=True, help_text=None):
        sub = commands.add_parser(
            name, parents=[common], help=help_text, epilog=COLUMN_HELP,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sub.set_defaults(handler=handler, needs_problem=needs_problem)
        return sub

    add("validate", cmd_validate, help_text="structure report")
    for name, handler in (("evaluate", cmd_evaluate), ("classify", cmd_classify), ("dilate", cmd_dilate)):
        sub = add(name, handler)
        sub.add_argument("--unitary", default="identity", help="identity, perm:3,2,4,1, checkpoint name or matrix file")

    sub = add("enumerate", cmd_enumerate, help_text="reconcilable critical point catalog")
    sub.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sub.add_argument("--samples", type=int, default=1000)
    sub.add_argument("--seed-offset", type=int, default=0)

    sub = add("detect-traps", cmd_detect_traps, help_text="false trap census and certificates")
    sub.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    sub.add_argument("--samples", type=int, default=1000)
    sub.add_argument("--seed-offset", type=int, default=0)

    sub = add("optimize", cmd_optimize, help_text="multi-seed gradient ascent/descent")
    sub.add_argument("--mode", choices=["ascend", "descend"], default="ascend")
    sub.add_argument("--seeds", type=int, default=100)
    sub.add_argument("--seed-offset", type=int, default=0)
    sub.add_argument("--tol", type=float, help="gradient norm tolerance (default 1e-6)")
    sub.add_argument("--max-iters", type=int, default=5000)
    sub.add_argument("--bin-width", type=float, default=1e-3)

    sub = add("survey", cmd_survey, help_text="numerical critical point survey")
    sub.add_argument("--seeds", type=int, default=1000)
    sub.add_argument("--seed-offset", type=int, default=0)
    sub.add_argument("--tol", type=float, help="residual tolerance (default 1e-10)")
    sub.add_argument("--bin-width", type=float, default=1e-3)

    add("examples", cmd_examples, needs_problem=False, help_text="write the bundled problems")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.needs_problem and not args.problem:
            parser.error(f"{args.command} requires --problem")
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    try:
        args.handler(args)
        return 0
    except LandscapeError as e:
        logger.error(f"❌ {args.command} 실패: {e}")
        print(json.dumps(e.to_dict(), ensure_ascii=False), file=sys.stderr)
        return 1
    except ValueError as e:
        logger.error(f"❌ {args.command} 실패: {e}")
        print(json.dumps({"error": "ValueError", "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
