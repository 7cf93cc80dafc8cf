"""Packaged fixtures: demo prior model, demo patient, candidate table, scenarios.

The demo model is constructed, not fitted: its means and sds were calibrated
so the bundled patient's ranking lands on the documented efficacy scores and
probability-of-optimal values used throughout the test suite and CLI demos.
"""

from __future__ import annotations

import json
from importlib import resources

from ..priors import InterventionCandidate, PatientProfile, PriorModel

SCENARIOS = ("case_study", "policy_comparison", "generalizability")


def _load(name: str) -> dict:
    with resources.files(__package__).joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def demo_prior_model() -> PriorModel:
    return PriorModel.from_dict(_load("prior_model_migraine.json"))


def demo_profile() -> PatientProfile:
    return PatientProfile.from_dict(_load("profile_demo.json"))


def demo_candidates() -> list[InterventionCandidate]:
    return [InterventionCandidate.from_dict(d) for d in _load("candidates_demo.json")["candidates"]]


def demo_candidates_path() -> str:
    return str(resources.files(__package__).joinpath("candidates_demo.json"))


def demo_model_path() -> str:
    return str(resources.files(__package__).joinpath("prior_model_migraine.json"))


def demo_profile_path() -> str:
    return str(resources.files(__package__).joinpath("profile_demo.json"))


def scenario(name: str) -> dict:
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name!r}; available: {', '.join(SCENARIOS)}")
    return _load(f"scenario_{name}.json")
