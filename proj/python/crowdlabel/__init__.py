"""Bayesian aggregation of crowdsourced multi-label annotations."""

import json

from ._core import ConfigError, DataError, Dataset, Fit, InvariantError, evaluate, fit_json

__all__ = [
    "MODELS",
    "ConfigError",
    "DataError",
    "Dataset",
    "Fit",
    "InvariantError",
    "evaluate",
    "fit",
    "simulate",
]

MODELS = ("base", "base-hier", "dp-bmm", "dp-bmm-hier")


def simulate(scenario=1, density=4.0, recordings=1000, annotators=20, species=25, seed=0, stream=0):
    """Simulated dataset with gold labels for every cell and the true expertise."""
    config = {
        "scenario": scenario,
        "density": density,
        "recordings": recordings,
        "annotators": annotators,
        "species": species,
        "seed": seed,
        "stream": stream,
    }
    return Dataset.simulate_json(json.dumps(config))


def fit(dataset, model="base", profile="simulation", hypers=None, mcmc=None):
    """Runs the MCMC chains and returns the draws.

    `hypers` and `mcmc` take the keys of the config file sections of the
    command-line tool and override the profile defaults.
    """
    return fit_json(dataset, model, profile, json.dumps(hypers or {}), json.dumps(mcmc or {}))
