"""A complete problem instance: prior, costs, agents, rule, and voting mode."""

from __future__ import annotations

from dataclasses import dataclass

from .core import CostModel, FusionRule, Prior, SignalModel
from .partial import ObservationGraph

__all__ = ["Scenario", "VOTING_MODES"]

VOTING_MODES = ("secret", "public", "partial")


@dataclass(frozen=True)
class Scenario:
    """Everything needed to pose (and simulate) one team decision problem.

    ``models`` is indexed by original agent id; ``ordering`` gives acting
    order as original ids (identity when omitted).  Partial mode requires an
    observation graph indexed by acting position.
    """

    prior: Prior
    costs: CostModel
    models: tuple[SignalModel, ...]
    rule: FusionRule
    mode: str = "secret"
    graph: ObservationGraph | None = None
    ordering: tuple[int, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "models", tuple(self.models))
        if len(self.models) != self.rule.team_size:
            raise ValueError(
                f"got {len(self.models)} agents for a team of {self.rule.team_size}"
            )
        if self.mode not in VOTING_MODES:
            raise ValueError(f"mode must be one of {VOTING_MODES}, got {self.mode!r}")
        if self.mode == "partial":
            if self.graph is None:
                raise ValueError("partial mode requires an observation graph")
            if self.graph.n_agents != self.rule.team_size:
                raise ValueError(
                    f"graph covers {self.graph.n_agents} agents for a team of "
                    f"{self.rule.team_size}"
                )
        if self.ordering is not None:
            ordering = tuple(int(i) for i in self.ordering)
            if sorted(ordering) != list(range(self.rule.team_size)):
                raise ValueError(f"ordering {ordering!r} is not a permutation")
            object.__setattr__(self, "ordering", ordering)

    @property
    def acting_order(self) -> tuple[int, ...]:
        if self.ordering is not None:
            return self.ordering
        return tuple(range(self.rule.team_size))

    @property
    def acting_models(self) -> tuple[SignalModel, ...]:
        """Agent models permuted into acting order."""
        return tuple(self.models[i] for i in self.acting_order)
