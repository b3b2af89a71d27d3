"""Region-constrained multi-hop question answering over a knowledge graph.

Configuration dictionaries use the same keys as the CLI's ``--config`` JSON
file; relative paths are resolved against ``base_dir`` (default: cwd).
"""

import json
import os

from ._core import (
    RegionQAError,
    dispatch_mode,
    fuzzy_ratio,
    map_option,
    mmr_score,
    relation_weight,
)
from . import _core

__all__ = [
    "RegionQAError",
    "ask",
    "dispatch_mode",
    "evaluate",
    "fuzzy_ratio",
    "map_option",
    "mmr_score",
    "region",
    "relation_weight",
]


def _base(base_dir):
    return os.fspath(base_dir) if base_dir is not None else os.getcwd()


def ask(question, config, base_dir=None, timings=False):
    """Run the full pipeline and return the result as a dict."""
    return json.loads(_core._ask(question, json.dumps(config), _base(base_dir), timings))


def region(question, config, base_dir=None):
    """Per-hop regions for a question, without answering it."""
    return json.loads(_core._region(question, json.dumps(config), _base(base_dir)))


def evaluate(dataset, config, base_dir=None):
    """Evaluate a JSONL dataset and return the report as a dict.

    A relative dataset path is resolved against ``base_dir`` like the config paths.
    """
    base = _base(base_dir)
    return json.loads(_core._evaluate(os.path.join(base, os.fspath(dataset)), json.dumps(config), base))
