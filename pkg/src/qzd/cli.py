"""Command-line front end.

    qzd <scenario> --config FILE [--seed S] [--out DIR] [--threads K]
    qzd validate --config FILE

Exit status: 0 on success, 2 on configuration errors, 3 on numerical
failures (the failing stage is named on stderr).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import subprocess
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np

from . import config as config_mod
from .errors import ConfigInvalid, QZDError
from .scenarios import CONVENTIONS, RUNNERS

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

log = logging.getLogger("qzd")


def version_string() -> str:
    """Package version, with ``git describe`` appended when run from a checkout."""
    try:
        base = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        base = "0+unknown"
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             cwd=Path(__file__).resolve().parent, capture_output=True,
                             text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{base}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return base


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header, rows, digest: str) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# config_sha256={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not np.isfinite(x):
        return repr(x)
    return x


def run(cfg: config_mod.RunConfig, threads: int = 1) -> int:
    """Execute a resolved configuration and write its outputs."""
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    digest = cfg.digest()
    handler = logging.FileHandler(out / "run.log", mode="w")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO)
    scenario = cfg["scenario"]
    try:
        log.info("scenario %s, config %s, sha256 %s, threads %d", scenario, cfg.source,
                 digest, threads)
        started = time.perf_counter()
        try:
            result = RUNNERS[scenario](cfg, workers=threads)
        except (QZDError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            log.error("numerical failure in stage %s: %s", scenario, exc)
            print(f"error: numerical failure in stage '{scenario}': "
                  f"{type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        for name, (header, rows) in result.tables.items():
            write_csv(out / name, header, rows, digest)
            log.info("wrote %s (%d rows)", name, len(rows))
        summary = {"scenario": scenario, "version": version_string(), "seed": cfg["seed"],
                   "config_sha256": digest, "config": cfg.to_dict(),
                   "conventions": CONVENTIONS, "results": result.summary}
        (out / "summary.json").write_text(
            json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
        if scenario == "zeno-check":
            print(json.dumps(_jsonable(result.summary), indent=2, sort_keys=True))
        log.info("done in %.1f s", time.perf_counter() - started)
        return EXIT_OK
    finally:
        log.removeHandler(handler)
        handler.close()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qzd", description=__doc__.split("\n\n")[0])
    p.add_argument("scenario", choices=(*config_mod.SCENARIOS, "validate"))
    p.add_argument("--config", required=True, help="TOML configuration file")
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--out", help="override the output directory")
    p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {"seed": args.seed, "output_dir": args.out}
    if args.scenario != "validate":
        overrides["scenario"] = args.scenario
    try:
        cfg = config_mod.load(args.config, overrides)
    except ConfigInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.scenario == "validate":
        print(f"# {args.config} is valid (sha256 {cfg.digest()})")
        print("\n".join(cfg.describe()))
        return EXIT_OK
    return run(cfg, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
