"""Flat ``key=value`` scenario files.

Powers are given in dBm or mW as the key suffix says, densities per km^2 and
lengths in metres; everything is converted to SI units on load.  Keys that
are not given fall back to the reference scenario.
"""

from __future__ import annotations

import re
from pathlib import Path

from .channel import LOBE_MODES, AntennaArray, BlockageChannel, Harvester, dbm_to_watts, watts_to_dbm
from .exceptions import ConfigError, DomainError
from .pointprocess import MacroConfig, TierConfig
from .scenario import GEApproximation, ScenarioConfig

DEFAULTS = {
    "k": "2",
    "mbs.lambda_per_km2": "200",
    "mbs.power_dbm": "40",
    "nb": "16",
    "nm": "64",
    "lobe_prob_mode": "pi_n",
    "alpha_los": "2",
    "alpha_nlos": "4",
    "m_los": "3",
    "m_nlos": "2",
    "r_min_m": "100",
    "r_max_m": "200",
    "p_max_mw": "4.927",
    "p_th_mw": "0.064",
    "c1": "274",
    "c2": "0.29",
    "ge_L": "10",
    "gamma_th_mw": "1",
    "typical_tier": "1",
    "strategy": "random",
}

TIER_DEFAULTS = {
    "lambda_per_km2": "1000",
    "sigma_b_m": "10",
    "sigma_u_m": "10",
    "mean_pb": "5",
    "mean_eu": "5",
    "pb_power_dbm": "20",
}

_TIER_KEY = re.compile(r"^tier(\d+)\.(\w+)$")
_UNITLESS_POWER = {"mbs.power", "p_max", "p_th", "gamma_th", "pb_power"}
_STRATEGY_ALIASES = {"random": "random", "ra": "random", "nearest": "nearest", "na": "nearest"}


def parse_text(text: str, source: str = "<config>") -> dict:
    """Split ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        _check_key(key)
        out[key] = value
    return out


def parse_overrides(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = (p.strip() for p in item.split("=", 1))
        _check_key(key)
        out[key] = value
    return out


def _check_key(key: str) -> None:
    m = _TIER_KEY.match(key)
    base = m.group(2) if m else key
    if base in _UNITLESS_POWER or key in _UNITLESS_POWER:
        raise ConfigError(f"key {key!r}: power values need a unit suffix (_dbm or _mw)")
    if m:
        if base not in TIER_DEFAULTS:
            raise ConfigError(f"unknown tier key {key!r}")
        if int(m.group(1)) < 1:
            raise ConfigError(f"key {key!r}: tiers are numbered from 1")
    elif key not in DEFAULTS and key != "gamma_th_dbm":
        raise ConfigError(f"unknown key {key!r}")


def _num(values: dict, key: str, cast=float):
    try:
        return cast(values[key])
    except ValueError:
        raise ConfigError(f"key {key!r}: cannot parse {values[key]!r} as {cast.__name__}") from None


def build_scenario(values: dict) -> ScenarioConfig:
    """Resolve a key/value mapping (missing keys take defaults) into a scenario."""
    v = dict(DEFAULTS)
    v.update(values)
    k = _num(v, "k", int)
    if k < 1:
        raise ConfigError("key 'k': need at least one tier")
    for key in values:
        m = _TIER_KEY.match(key)
        if m and int(m.group(1)) > k:
            raise ConfigError(f"key {key!r} refers to tier {m.group(1)} but k={k}")
    mode = v["lobe_prob_mode"]
    if mode not in LOBE_MODES:
        raise ConfigError(f"key 'lobe_prob_mode': expected one of {LOBE_MODES}, got {mode!r}")
    strategy = _STRATEGY_ALIASES.get(v["strategy"].lower())
    if strategy is None:
        raise ConfigError(f"key 'strategy': expected random or nearest, got {v['strategy']!r}")
    if "gamma_th_dbm" in values:
        if "gamma_th_mw" in values:
            raise ConfigError("give either gamma_th_mw or gamma_th_dbm, not both")
        gamma = float(dbm_to_watts(_num(v, "gamma_th_dbm")))
    else:
        gamma = _num(v, "gamma_th_mw") * 1e-3
    try:
        tiers = []
        for i in range(1, k + 1):
            t = {f: v.get(f"tier{i}.{f}", d) for f, d in TIER_DEFAULTS.items()}
            tv = {f"tier{i}.{f}": val for f, val in t.items()}
            tiers.append(TierConfig(
                parent_intensity=_num(tv, f"tier{i}.lambda_per_km2") / 1e6,
                pb_scatter=_num(tv, f"tier{i}.sigma_b_m"),
                eu_scatter=_num(tv, f"tier{i}.sigma_u_m"),
                mean_pb_count=_num(tv, f"tier{i}.mean_pb"),
                mean_eu_count=_num(tv, f"tier{i}.mean_eu"),
                pb_power=float(dbm_to_watts(_num(tv, f"tier{i}.pb_power_dbm"))),
            ))
        return ScenarioConfig(
            tiers=tuple(tiers),
            macro=MacroConfig(intensity=_num(v, "mbs.lambda_per_km2") / 1e6,
                              power=float(dbm_to_watts(_num(v, "mbs.power_dbm"))),
                              array=AntennaArray.from_mode(_num(v, "nm", int), mode)),
            channel=BlockageChannel(alpha_los=_num(v, "alpha_los"), alpha_nlos=_num(v, "alpha_nlos"),
                                    m_los=_num(v, "m_los"), m_nlos=_num(v, "m_nlos"),
                                    r_min=_num(v, "r_min_m"), r_max=_num(v, "r_max_m")),
            pb_array=AntennaArray.from_mode(_num(v, "nb", int), mode),
            harvester=Harvester(p_max=_num(v, "p_max_mw") * 1e-3, p_th=_num(v, "p_th_mw") * 1e-3,
                                c1=_num(v, "c1"), c2=_num(v, "c2")),
            typical_tier=_num(v, "typical_tier", int),
            strategy=strategy,
            energy_threshold=gamma,
            ge=GEApproximation(_num(v, "ge_L", int)),
            lobe_prob_mode=mode,
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path=None, overrides=None) -> ScenarioConfig:
    """Read a config file (``None`` means all defaults) and apply overrides."""
    values = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file {p} does not exist")
        values = parse_text(p.read_text(), str(p))
    if overrides:
        values.update(overrides if isinstance(overrides, dict) else parse_overrides(overrides))
    return build_scenario(values)


def scenario_to_mapping(scn: ScenarioConfig) -> dict:
    """Resolved scenario in the config file's units (for reports)."""
    out = {
        "k": scn.k,
        "mbs.lambda_per_km2": scn.macro.intensity * 1e6,
        "mbs.power_dbm": float(watts_to_dbm(scn.macro.power)),
        "nb": scn.pb_array.size,
        "nm": scn.macro.array.size,
        "lobe_prob_mode": scn.lobe_prob_mode,
        "rho_b": scn.pb_array.lobe_hit_probability,
        "rho_m": scn.macro.array.lobe_hit_probability,
        "alpha_los": scn.channel.alpha_los,
        "alpha_nlos": scn.channel.alpha_nlos,
        "m_los": scn.channel.m_los,
        "m_nlos": scn.channel.m_nlos,
        "r_min_m": scn.channel.r_min,
        "r_max_m": scn.channel.r_max,
        "p_max_mw": scn.harvester.p_max * 1e3,
        "p_th_mw": scn.harvester.p_th * 1e3,
        "c1": scn.harvester.c1,
        "c2": scn.harvester.c2,
        "ge_L": scn.ge.order,
        "gamma_th_mw": scn.energy_threshold * 1e3,
        "typical_tier": scn.typical_tier,
        "strategy": scn.strategy,
    }
    for i, t in enumerate(scn.tiers, 1):
        out.update({
            f"tier{i}.lambda_per_km2": t.parent_intensity * 1e6,
            f"tier{i}.sigma_b_m": t.pb_scatter,
            f"tier{i}.sigma_u_m": t.eu_scatter,
            f"tier{i}.mean_pb": t.mean_pb_count,
            f"tier{i}.mean_eu": t.mean_eu_count,
            f"tier{i}.pb_power_dbm": float(watts_to_dbm(t.pb_power)),
        })
    return out
