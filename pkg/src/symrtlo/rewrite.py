"""Template application and the verified rewrite pipeline.

``run_pipeline`` applies templates in order and checks every candidate
against the original design through the supplied verify hook; failed
candidates are rolled back and logged, so the pipeline's output is
always verify-equivalent to its input no matter what the templates do.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .errors import TransformFailed
from .nodes import Design
from .templates import MatchSite, RewriteTemplate
from .validation import validate


@dataclass(frozen=True)
class LogEntry:
    template: str
    sites: tuple[str, ...]
    accepted: bool
    reason: str | None = None

    def to_dict(self) -> dict:
        return {
            "template": self.template,
            "sites": list(self.sites),
            "accepted": self.accepted,
            "reason": self.reason,
        }


@dataclass
class RewriteLog:
    entries: list[LogEntry] = field(default_factory=list)
    budget_exhausted: bool = False

    def to_dict(self) -> dict:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "budget_exhausted": self.budget_exhausted,
        }

    def accepted(self) -> list[LogEntry]:
        return [e for e in self.entries if e.accepted]

    def rejected(self) -> list[LogEntry]:
        return [e for e in self.entries if not e.accepted]


def match_nodes(design: Design, template: RewriteTemplate) -> list[MatchSite]:
    """Every node of the template's target kind where its predicate holds,
    in deterministic source order."""
    return template.finder(design)


def apply_template(
    design: Design, template: RewriteTemplate
) -> tuple[Design, LogEntry]:
    """Transform all matched sites in one pass.

    Returns the input unchanged with a no-op entry when nothing matches.
    Raises TransformFailed (leaving the design unchanged) when the
    transform misbehaves or produces an invalid design.
    """
    try:
        sites = template.finder(design)
    except Exception as e:  # noqa: BLE001 - faulty templates must not escape
        raise TransformFailed(template.name, f"matcher raised: {e}") from e
    if not sites:
        return design, LogEntry(template.name, (), accepted=False, reason="no-op")
    try:
        result = template.applier(design)
    except Exception as e:  # noqa: BLE001
        raise TransformFailed(template.name, f"transform raised: {e}") from e
    if result == design:
        return design, LogEntry(template.name, (), accepted=False, reason="no-op")
    errors = [d for d in validate(result) if d.severity == "error"]
    if errors:
        raise TransformFailed(template.name, f"result fails validation: {errors[0]}")
    entry = LogEntry(template.name, tuple(str(s) for s in sites), accepted=True)
    return result, entry


VerifyHook = Callable[[Design, Design], bool]


def run_pipeline(
    design: Design,
    templates: list[RewriteTemplate],
    verify: VerifyHook,
    budget: int = 32,
) -> tuple[Design, RewriteLog]:
    """Apply templates in order with rollback on verification failure.

    Every accepted candidate is checked against the *original* design, so
    the final result is verify-equivalent to the input by construction.
    When the attempt budget runs out, the best verified design so far is
    returned with ``budget_exhausted`` set.
    """
    log = RewriteLog()
    current = design
    for template in templates:
        if budget <= 0:
            log.budget_exhausted = True
            break
        budget -= 1
        try:
            candidate, entry = apply_template(current, template)
        except TransformFailed as e:
            log.entries.append(
                LogEntry(template.name, (), accepted=False, reason=str(e))
            )
            continue
        if not entry.accepted:
            log.entries.append(entry)
            continue
        if verify(design, candidate):
            current = candidate
            log.entries.append(entry)
        else:
            log.entries.append(
                LogEntry(
                    template.name,
                    entry.sites,
                    accepted=False,
                    reason="verification failed",
                )
            )
    return current, log
