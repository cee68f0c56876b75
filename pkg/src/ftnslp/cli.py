"""Command-line entry point.

Subcommands: design, sweep, converge, constellation, validate. Every run
echoes its config, git hash and seeds into a manifest so it can be replayed
exactly. Exit codes: 0 success, 2 config error, 3 infeasible scenario.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import sim
from .sim import ConfigError, ScenarioConfig

log = logging.getLogger("ftnslp.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ftnslp", description="FTN symbol-level precoding designer")
    sub = p.add_subparsers(dest="subcommand", required=True)
    for name, doc in (
        ("design", "solve one instance and write solution, trace and metrics"),
        ("sweep", "run the sweep described by the config's sweep section"),
        ("converge", "run both outer algorithms on identical seeds, write traces"),
        ("constellation", "solve one instance and export the received constellation"),
        ("validate", "parse and validate the config, run nothing"),
    ):
        q = sub.add_parser(name, help=doc)
        q.add_argument("--config", required=True, help="path to a JSON scenario config")
        q.add_argument("--out", default="out", help="output directory (default: ./out)")
        q.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="K=V",
            help="dotted-path config override, e.g. dims.block_len=20 (repeatable)",
        )
        q.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker count for sweeps (default: FTN_SLP_THREADS or 1)",
        )
        q.add_argument("--quiet", action="store_true", help="suppress progress logging")
        q.add_argument("-v", "--verbose", action="count", default=0)
    return p


def _apply_override(data: dict, key: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = data
    parts = key.split(".")
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def _load_config(path: str, overrides: list) -> ScenarioConfig:
    cfg_path = Path(path)
    if not cfg_path.is_file():
        raise ConfigError(f"config file not found: {cfg_path}")
    try:
        data = json.loads(cfg_path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {cfg_path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a JSON object: {cfg_path}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        _apply_override(data, key, raw)
    return ScenarioConfig.from_dict(data)


def _git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def _write_manifest(out_dir: Path, scn: ScenarioConfig, argv: list) -> None:
    manifest = {
        "config": scn.to_dict(),
        "git_hash": _git_hash(),
        "seeds": dataclasses.asdict(scn.seeds),
        "argv": argv,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))


def _write_trace(path: Path, sol) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iter", "f", "mmse", "wall_time_s"])
        for k, (f_val, m_val, t_val) in enumerate(
            zip(sol.objective_trace, sol.mmse_trace, sol.iter_times)
        ):
            writer.writerow([k, repr(f_val), repr(m_val), repr(t_val)])


def _write_solution(path: Path, sol) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["antenna", "slot", "re", "im"])
        n_tx, block_len = sol.s_block.shape
        for n in range(n_tx):
            for i in range(block_len):
                writer.writerow([n, i, repr(sol.s_block[n, i].real), repr(sol.s_block[n, i].imag)])


def _write_metrics(path: Path, metrics) -> None:
    rec = dataclasses.asdict(metrics)
    rec.pop("constellation", None)
    path.write_text(json.dumps(rec, indent=2, default=float))


def _cmd_design(scn: ScenarioConfig, out_dir: Path, export_constellation: bool) -> int:
    sol, metrics = sim.run_design(scn)
    if sol.status == "infeasible":
        detail = sol.diagnostics.get("min_energy", sol.diagnostics.get("reason", ""))
        print(f"infeasible scenario: {detail}", file=sys.stderr)
        if "min_energy" in sol.diagnostics:
            print(
                f"minimum energy to satisfy QoS: {sol.diagnostics['min_energy']:.6e} "
                f"(budget {10 ** (scn.energy_dbm / 10):.6e})",
                file=sys.stderr,
            )
        return EXIT_INFEASIBLE
    _write_solution(out_dir / "solution.csv", sol)
    _write_trace(out_dir / "trace.csv", sol)
    _write_metrics(out_dir / "metrics.json", metrics)
    if export_constellation and metrics.constellation:
        sim.write_constellation_csv(metrics.constellation, out_dir / "constellation.csv")
    log.info("design done: mmse=%.6e status=%s", metrics.mmse, metrics.status)
    return EXIT_OK


def _cmd_converge(scn: ScenarioConfig, out_dir: Path) -> int:
    for algorithm in ("minorization", "sca"):
        sol, _ = sim.run_design(scn.replace(algorithm=algorithm), with_constellation=False)
        if sol.status == "infeasible":
            print(f"infeasible scenario under {algorithm}", file=sys.stderr)
            return EXIT_INFEASIBLE
        _write_trace(out_dir / f"trace_{algorithm}.csv", sol)
    return EXIT_OK


def _cmd_sweep(scn: ScenarioConfig, out_dir: Path, threads: int) -> int:
    if scn.sweep is None:
        raise ConfigError("sweep subcommand needs a 'sweep' section in the config")
    rows = []
    try:
        rows = sim.run_sweep(
            scn,
            scn.sweep.axis,
            list(scn.sweep.values),
            trials=scn.sweep.trials,
            threads=threads,
        )
    except KeyboardInterrupt:
        rows.append({"axis": "__truncated__", "trial": "", "status": "interrupted"})
        sim.write_sweep_csv(rows, out_dir / f"sweep_{scn.sweep.axis}.csv")
        raise
    sim.write_sweep_csv(rows, out_dir / f"sweep_{scn.sweep.axis}.csv")
    return EXIT_OK


def _cmd_constellation(scn: ScenarioConfig, out_dir: Path) -> int:
    sol, metrics = sim.run_design(scn)
    if sol.status == "infeasible":
        return EXIT_INFEASIBLE
    sim.write_constellation_csv(metrics.constellation or [], out_dir / "constellation.csv")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    level = logging.WARNING if args.quiet else (logging.DEBUG if args.verbose > 1 else logging.INFO)
    logging.basicConfig(level=level, format="%(name)s %(message)s")
    if args.quiet:
        logging.disable(logging.INFO)

    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("FTN_SLP_THREADS", "1"))

    try:
        scn = _load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.subcommand == "validate":
        try:
            sim.build_design(scn)
        except (ConfigError, ValueError, TypeError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print("config ok")
        return EXIT_OK

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        if args.subcommand == "design":
            code = _cmd_design(scn, out_dir, export_constellation=True)
        elif args.subcommand == "converge":
            code = _cmd_converge(scn, out_dir)
        elif args.subcommand == "sweep":
            code = _cmd_sweep(scn, out_dir, threads)
        elif args.subcommand == "constellation":
            code = _cmd_constellation(scn, out_dir)
        else:  # pragma: no cover
            return EXIT_CONFIG
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _write_manifest(out_dir, scn, list(argv) if argv is not None else sys.argv[1:])
    return code


if __name__ == "__main__":
    sys.exit(main())
