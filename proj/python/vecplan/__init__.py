# Copyright (C) 2026 The vecplan Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the vecplan floor-plan diffusion engine."""

import json

from . import _core
from ._core import Registry, VecplanError, confirmed_count, encode_plan, estimate_x0, forward_noise
from ._core import rectilinear_iou, schedule

__all__ = [
    "Registry",
    "VecplanError",
    "confirmed_count",
    "encode_plan",
    "estimate_x0",
    "forward_noise",
    "frechet_distance",
    "generate",
    "generate_dataset",
    "plan_statistics",
    "rectilinear_iou",
    "schedule",
    "train",
]


def _dumps(plans):
    return [p if isinstance(p, str) else json.dumps(p) for p in plans]


def generate_dataset(count, seed=1):
    """Synthetic plans as dicts in the interchange schema."""
    return [json.loads(p) for p in _core.generate_dataset(count, seed)]


def plan_statistics(generated, reference):
    return json.loads(_core.plan_statistics(_dumps(generated), _dumps(reference)))


def frechet_distance(a, b):
    return _core.frechet_distance(_dumps(a), _dumps(b))


def train(plans, stage, conditions, config, checkpoint):
    """Trains one variant; config is a dict of train-config keys."""
    text = config if isinstance(config, str) else "\n".join(f"{k} = {v}" for k, v in config.items())
    return [json.loads(r) for r in _core.train(_dumps(plans), stage, conditions, text, str(checkpoint))]


def generate(registry, request):
    """Runs a generation request dict and returns the result dict."""
    return json.loads(registry.generate(json.dumps(request)))
