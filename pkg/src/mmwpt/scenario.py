"""Scenario description shared by the analytic engine and the simulator."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .channel import AntennaArray, BlockageChannel, Harvester, dbm_to_watts
from .exceptions import DomainError
from .pointprocess import MacroConfig, TierConfig
from .specfun import harmonic_normalizer

MAX_GE_ORDER = 25
STRATEGIES = ("random", "nearest")


@dataclass(frozen=True)
class GEApproximation:
    """Generalized-exponential surrogate of the constant 1, CDF (1 - e^{-a w})^L."""

    order: int = 10

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise DomainError(f"GE order must be a positive integer, got {self.order}")
        if self.order > MAX_GE_ORDER:
            raise DomainError(
                f"GE order {self.order} > {MAX_GE_ORDER}: the alternating binomial sum "
                "loses all double-precision digits")

    @property
    def normalizer(self) -> float:
        return harmonic_normalizer(self.order)


@dataclass(frozen=True)
class ScenarioConfig:
    tiers: tuple
    macro: MacroConfig
    channel: BlockageChannel
    pb_array: AntennaArray
    harvester: Harvester
    typical_tier: int = 1
    strategy: str = "random"
    energy_threshold: float = 1e-3
    ge: GEApproximation = GEApproximation()
    lobe_prob_mode: str = "pi_n"

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not self.tiers:
            raise DomainError("at least one PB tier is required")
        if not 1 <= self.typical_tier <= len(self.tiers):
            raise DomainError(f"typical_tier must be in 1..{len(self.tiers)}, got {self.typical_tier}")
        if self.strategy not in STRATEGIES:
            raise DomainError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not self.energy_threshold > 0:
            raise DomainError("energy threshold must be positive")

    @property
    def k(self) -> int:
        return len(self.tiers)

    @property
    def typical(self) -> TierConfig:
        return self.tiers[self.typical_tier - 1]

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def with_typical(self, **changes) -> "ScenarioConfig":
        """Copy with fields of the typical tier changed."""
        tiers = list(self.tiers)
        tiers[self.typical_tier - 1] = dataclasses.replace(self.typical, **changes)
        return self.replace(tiers=tuple(tiers))

    def with_all_tiers(self, **changes) -> "ScenarioConfig":
        return self.replace(tiers=tuple(dataclasses.replace(t, **changes) for t in self.tiers))


def default_scenario(**changes) -> ScenarioConfig:
    """The reference two-tier configuration used throughout the tests."""
    tier = TierConfig(parent_intensity=1000e-6, pb_scatter=10.0, eu_scatter=10.0,
                      mean_pb_count=5.0, mean_eu_count=5.0, pb_power=float(dbm_to_watts(20.0)))
    scn = ScenarioConfig(
        tiers=(tier, tier),
        macro=MacroConfig(intensity=200e-6, power=float(dbm_to_watts(40.0)),
                          array=AntennaArray.from_mode(64, "pi_n")),
        channel=BlockageChannel(alpha_los=2.0, alpha_nlos=4.0, m_los=3.0, m_nlos=2.0,
                                r_min=100.0, r_max=200.0),
        pb_array=AntennaArray.from_mode(16, "pi_n"),
        harvester=Harvester(p_max=4.927e-3, p_th=0.064e-3, c1=274.0, c2=0.29),
        typical_tier=1,
        strategy="random",
        energy_threshold=1e-3,
        ge=GEApproximation(10),
        lobe_prob_mode="pi_n",
    )
    return scn.replace(**changes) if changes else scn
