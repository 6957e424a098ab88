"""Python access to the neural simulated annealing library.

Instances, datasets and checkpoints are plain dicts with the same layout as
the JSON files written by the ``nsa`` command-line tool.
"""

import json

from . import _core
from ._core import ConfigError, Error, UsageError, mh_accept, rollout_length, temperature

__all__ = [
    "ConfigError",
    "Error",
    "UsageError",
    "evaluate",
    "generate",
    "mh_accept",
    "optimal_energy",
    "rollout_length",
    "solve",
    "temperature",
    "train",
]


def _text(obj):
    if obj is None:
        return ""
    return obj if isinstance(obj, str) else json.dumps(obj)


def generate(problem, n, count, seed=0):
    """Return a dataset dict of ``count`` random instances."""
    return json.loads(_core.generate(problem, n, count, seed))


def solve(instance, checkpoint=None, multiplier=1, mode="sampled", seed=0,
          t0=None, tk=None, sigma=1.0):
    """Anneal one instance. Without a checkpoint the uniform proposal is used."""
    return json.loads(_core.solve(_text(instance), _text(checkpoint), multiplier,
                                  mode, seed, t0, tk, sigma))


def evaluate(dataset, checkpoint=None, multiplier=1, mode="sampled",
             run_seeds=(1, 2, 3, 4, 5), t0=None, tk=None, sigma=1.0, workers=1):
    return json.loads(_core.evaluate(_text(dataset), _text(checkpoint), multiplier,
                                     mode, list(run_seeds), t0, tk, sigma, workers))


def train(problem, trainer="ppo", overrides=None, seed=0, workers=1):
    """Train from scratch and return the checkpoint dict."""
    return json.loads(_core.train(problem, trainer, _text(overrides), seed, workers))


def optimal_energy(instance):
    """Exact optimum for small instances, ``None`` when out of reach."""
    return _core.optimal_energy(_text(instance))
