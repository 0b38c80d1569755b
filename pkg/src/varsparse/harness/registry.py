"""Suite registry shared by the lemma, theorem and domination modules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .config import ExperimentConfig
from .report import Report


class UnknownSuiteError(KeyError):
    def __str__(self):
        return self.args[0]


@dataclass(frozen=True)
class Suite:
    id: str
    func: Callable[[ExperimentConfig], Report]
    kind: str  # "lemma", "theorem" or "domination"
    aliases: tuple
    summary: str


SUITES: dict[str, Suite] = {}
ALIASES: dict[str, str] = {}


def register(suite_id: str, *aliases: str, kind: str = "lemma", summary: str = ""):
    def deco(func):
        SUITES[suite_id] = Suite(suite_id, func, kind, tuple(aliases), summary or (func.__doc__ or "").strip().splitlines()[0])
        for a in aliases:
            ALIASES[a] = suite_id
        return func

    return deco


def _load_all():
    from . import domination, suites, theorems  # noqa: F401  (imported for registration)

    del domination, suites, theorems


def resolve(suite_id: str) -> Suite:
    _load_all()
    key = ALIASES.get(suite_id, suite_id)
    if key not in SUITES:
        known = ", ".join(sorted(set(SUITES) | set(ALIASES)))
        raise UnknownSuiteError(f"unknown suite {suite_id!r}; known ids: {known}")
    return SUITES[key]


def all_suites() -> list[Suite]:
    _load_all()
    return [SUITES[k] for k in sorted(SUITES)]


def run_suite(suite_id: str, config: ExperimentConfig) -> Report:
    suite = resolve(suite_id)
    return suite.func(config)


def verify_lemma(suite_id: str, config: ExperimentConfig) -> Report:
    suite = resolve(suite_id)
    if suite.kind != "lemma":
        raise UnknownSuiteError(f"{suite_id!r} is a {suite.kind} suite, not a lemma suite")
    return suite.func(config)
