from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from covlab.experiment import ExperimentConfig  # noqa: E402


def parser(description: str, default_config: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--config", default=str(ROOT / "configs" / default_config))
    p.add_argument("--replicates", type=int, default=None, help="override the config's replicate count")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    return p


def load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config)
    if args.replicates is not None:
        cfg = dataclasses.replace(cfg, replicates=args.replicates, publication=cfg.publication and args.replicates >= 100)
    return cfg


def out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out or cfg.output_dir)
