"""
blockspec.py

Command-line driver for bounds, planning, joint compression and certification
of concatenated block matrices. The JSON report goes to stdout (and to
--report PATH when given); logging goes to stderr.

Usage:
  Bounds for a manifest (first block is the reference):
    uv run python -m scripts.blockspec bounds --manifest data/blocks.json

  Plan groups under a budget:
    uv run python -m scripts.blockspec plan --manifest data/blocks.json --rank 2 --tau 0.1

  Plan, compress and write a container:
    uv run python -m scripts.blockspec compress --manifest data/blocks.json --out data/blocks.bspc

  Reconstruct a container into CSV files:
    uv run python -m scripts.blockspec decompress --container data/blocks.bspc --out data/restored

  Randomized soundness check (exit 6 on any violation):
    uv run python -m scripts.blockspec verify --m 8 --n 4 --k 3 --rank 4 --eps 0.05 --seed 1

  Continuity sweep:
    uv run python -m scripts.blockspec sweep --m 8 --n 4 --k 4 --rank 3 --seed 1 --eps-grid 1e-1,1e-2,1e-3

Exit codes: 0 ok, 2 I/O or invalid input, 3 shape mismatch,
4 rank-deficient reference, 5 rank too large, 6 soundness violation.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from config import config
from config.commands import EXIT_CODES, list_commands
from includes import bounds
from includes.compressor import (
    compress_group,
    group_reconstruction_error,
    reconstruct_block,
    storage_accounting,
)
from includes.errors import BlockSpecError, InvalidArgument, RankDeficientReference
from includes.files.container import read_container, write_container
from includes.files.manifest import load_blocks, load_manifest
from includes.files.matrix_csv import FLOAT_FORMAT, write_matrix_csv
from includes.files.report import Report
from includes.harness import (
    TrialConfig,
    check_decay,
    run_bound_trials,
    run_continuity_sweep,
    summarize,
    violations,
)
from includes.matrix import numerical_rank, singular_values, spectral_norm
from includes.planner import certify_plan, plan_groups

logger = logging.getLogger("blockspec")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes"):
        return True
    if lowered in ("0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got '{text}'")


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"bad eps grid '{text}': {e}")


def _parse_seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


# Every flag any subcommand may take; the registry decides who gets which.
FLAG_SPECS: dict[str, dict] = {
    "--manifest": {"type": Path, "required": True, "help": "JSON manifest of block CSV files"},
    "--container": {"type": Path, "required": True, "help": "BSPC1 container to read"},
    "--rank": {"type": int, "default": None, "help": "Target rank r (overrides the manifest)"},
    "--tau": {"type": float, "default": None, "help": "Absolute tolerance tau (overrides the manifest)"},
    "--rank-tol": {"type": float, "default": None, "help": "Relative numerical-rank tolerance"},
    "--strict-paper-k": {"type": _parse_bool, "default": None, "dest": "strict_sqrt_k",
                          "help": "true: sqrt(k) group rule (default); false: tighter (k-1)/sqrt(k)"},
    "--out": {"type": Path, "default": None, "help": "Output container file / directory"},
    "--report": {"type": Path, "default": None, "help": "Also write the JSON report here"},
    "--with-timing": {"action": "store_true", "help": "Include wall time in the report"},
    "--m": {"type": int, "default": 8, "help": "Block rows"},
    "--n": {"type": int, "default": 4, "help": "Block columns"},
    "--k": {"type": int, "default": 3, "help": "Blocks per instance"},
    "--eps": {"type": float, "default": 0.05, "help": "Perturbation spectral-norm cap"},
    "--seed": {"type": _parse_seed, "required": True, "help": "Master seed (unsigned 64-bit)"},
    "--trials": {"type": int, "default": config.DEFAULT_TRIALS, "help": "Number of trials"},
    "--workers": {"type": int, "default": None, "help": "Thread pool size for trials"},
    "--eps-grid": {"type": _parse_grid, "default": [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
                   "help": "Comma-separated strictly decreasing eps values"},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockspec",
        description="Singular value perturbation bounds, planning and joint compression for block matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, meta in list_commands().items():
        cmd = sub.add_parser(name, help=meta["description"], description=meta["description"])
        for flag in meta["flags"]:
            spec = dict(FLAG_SPECS[flag])
            if flag == "--rank" and name in ("verify", "sweep"):
                spec = {"type": int, "default": 2, "help": "Rank of the generated base blocks"}
            if flag == "--k" and name == "sweep":
                spec = {**spec, "default": 4}
            if flag == "--seed":
                spec["required"] = meta["needs_seed"]
            cmd.add_argument(flag, **spec)
    return parser


# ----------------------------------------------------------------------
# Subcommands. Each returns (Report, exit code).
# ----------------------------------------------------------------------

def cmd_bounds(args) -> tuple[Report, int]:
    manifest = load_manifest(args.manifest, args.rank, args.tau, args.rank_tol)
    blocks = load_blocks(manifest)
    ref = blocks[0]
    m, n = ref.shape
    sv_a = singular_values(ref)
    rank = numerical_rank(sv_a, m, n, manifest.rank_tol)
    r = manifest.budget.target_rank
    if rank < r:
        raise RankDeficientReference(
            f"reference block {manifest.block_paths[0]} has numerical rank {rank} < target rank {r}"
        )

    pert_norms = [spectral_norm(b - ref) for b in blocks[1:]]
    report = bounds.centroid_bounds(float(sv_a[0]), sv_a, rank, pert_norms, len(blocks))
    eps_bar = max(pert_norms, default=0.0)
    results = {
        "bounds": report.to_dict(),
        "pert_norms": pert_norms,
        "eps_bar": eps_bar,
        "kmax": bounds.kmax(manifest.budget.tolerance, float(sv_a[r - 1]), float(sv_a[0]), eps_bar),
    }
    return Report(command="bounds", config=manifest.to_dict(), results=results), EXIT_CODES["ok"]


def _plan(args):
    manifest = load_manifest(args.manifest, args.rank, args.tau, args.rank_tol)
    blocks = load_blocks(manifest)
    plan = plan_groups(blocks, manifest.budget, manifest.rank_tol, args.strict_sqrt_k)
    return manifest, blocks, plan


def _plan_config(manifest, plan) -> dict:
    return {**manifest.to_dict(), "sqrt_k": plan.sqrt_k}


def cmd_plan(args) -> tuple[Report, int]:
    manifest, blocks, plan = _plan(args)
    deviations = certify_plan(plan, blocks)
    groups = []
    for group, deviation in zip(plan.groups, deviations):
        groups.append({**group.to_dict(), "kmax": plan.kmax_hint(group), "measured_deviation": deviation})
    results = {"total_blocks": plan.total_blocks, "group_count": len(plan.groups), "groups": groups}
    notes = []
    uncertified = [g.reference_index for g in plan.groups if not g.certified]
    if uncertified:
        notes.append(f"uncertified singleton groups at blocks {uncertified}")
    return Report(command="plan", config=_plan_config(manifest, plan), results=results, notes=notes), EXIT_CODES["ok"]


def cmd_compress(args) -> tuple[Report, int]:
    manifest, blocks, plan = _plan(args)
    out = args.out or Path(config.DATA_DIR) / "compressed.bspc"
    r = manifest.budget.target_rank
    m, n = blocks[0].shape

    compressed = []
    groups = []
    for group in plan.groups:
        members = [blocks[i] for i in group.member_indices]
        cg = compress_group(members, r)
        errors = group_reconstruction_error(cg, members)
        stats = storage_accounting(m, n, group.k, r)
        compressed.append(cg)
        groups.append({
            "members": list(group.member_indices),
            "certified": group.certified,
            "storage": stats.to_dict(),
            "reconstruction_error": errors.to_dict(),
        })
    write_container(out, compressed)

    total = storage_accounting(m, n, len(blocks), r)
    joint = sum(g["storage"]["joint_scalars"] for g in groups)
    results = {
        "container": str(out),
        "groups": groups,
        "joint_scalars": joint,
        "separate_scalars": total.separate_scalars,
        "ratio": joint / total.separate_scalars,
        "max_block_error": max(e for g in groups for e in g["reconstruction_error"]["per_block"]),
    }
    return Report(command="compress", config=_plan_config(manifest, plan), results=results), EXIT_CODES["ok"]


def cmd_decompress(args) -> tuple[Report, int]:
    groups = read_container(args.container)
    out_dir = args.out or Path(config.DATA_DIR) / "decompressed"
    files = []
    index = 0
    for g in groups:
        for i in range(g.k):
            path = write_matrix_csv(out_dir / f"block_{index:04d}.csv", reconstruct_block(g, i))
            files.append(str(path))
            index += 1
    results = {"groups": len(groups), "blocks": index, "files": files, "float_format": FLOAT_FORMAT}
    return Report(command="decompress", config={"container": str(args.container)}, results=results), EXIT_CODES["ok"]


def cmd_verify(args) -> tuple[Report, int]:
    cfg = TrialConfig(m=args.m, n=args.n, k=args.k, base_rank=args.rank,
                      eps=args.eps, seed=args.seed, trials=args.trials)
    records = run_bound_trials(cfg, args.workers)
    bad = violations(records)
    results = {
        "summary": summarize(records),
        "violations": [r.to_dict() for r in bad],
    }
    code = EXIT_CODES["ok"]
    if bad:
        seeds = sorted({r.seed for r in bad})
        logger.error(f"{len(bad)} soundness violations; replay trial seeds: {seeds}")
        code = EXIT_CODES["soundness"]
    return Report(command="verify", config=cfg.to_dict(), results=results, seed=cfg.seed), code


def cmd_sweep(args) -> tuple[Report, int]:
    if args.k < 2:
        raise InvalidArgument("sweep needs --k >= 2 (continuity is about perturbed copies)")
    cfg = TrialConfig(m=args.m, n=args.n, k=args.k, base_rank=args.rank,
                      eps=max(args.eps_grid, default=0.0), seed=args.seed, trials=args.trials)
    table = run_continuity_sweep(cfg, args.eps_grid)
    sound = bool(table["sound"].all())
    results = {
        "csv": table.to_csv(index=False, float_format=FLOAT_FORMAT),
        "decay_ok": check_decay(table),
        "sound": sound,
    }
    code = EXIT_CODES["ok"]
    if not sound:
        logger.error(f"Envelope exceeded in sweep with seed {cfg.seed}")
        code = EXIT_CODES["soundness"]
    config_echo = {**cfg.to_dict(), "eps_grid": list(args.eps_grid)}
    return Report(command="sweep", config=config_echo, results=results, seed=cfg.seed), code


COMMANDS = {
    "bounds": cmd_bounds,
    "plan": cmd_plan,
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if config.DEBUG else config.LOG_LEVEL,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config.validate()
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CODES["io"]

    started = time.perf_counter()
    try:
        report, code = COMMANDS[args.command](args)
    except BlockSpecError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code

    elapsed = time.perf_counter() - started
    logger.info(f"{args.command} finished in {elapsed:.3f}s (exit {code})")
    if args.with_timing:
        report.wall_time = elapsed
    try:
        text = report.to_json()
        if args.report:
            report.write(args.report)
    except BlockSpecError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
