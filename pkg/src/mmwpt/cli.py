"""Command-line front end: analytic, simulation, validation and sweep runs."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, fields

from . import analytic, montecarlo
from .config import load_config, parse_overrides, scenario_to_mapping
from .exceptions import ConfigError, DomainError, QuadratureError

log = logging.getLogger("mmwpt")

MODES = ("analytic", "simulate", "validate", "sweep")
SWEEP_PARAMS = ("nb", "gamma_th_dbm", "mean_pb_count", "sigma_u", "sigma_b")
_TIER_SWEEP_KEYS = {"mean_pb_count": "mean_pb", "sigma_u": "sigma_u_m", "sigma_b": "sigma_b_m"}
_STRATS = {"ra": ("random",), "na": ("nearest",), "both": ("random", "nearest")}
_SHORT = {"random": "ra", "nearest": "na"}


@dataclass
class RunRequest:
    mode: str = "analytic"
    config_path: str | None = None
    overrides: tuple = ()
    sweep_param: str | None = None
    sweep_values: tuple = ()
    strategy: str = "both"
    trials: int = 20000
    seed: int = 0
    workers: int = 1
    out_csv: str | None = None
    out_json: str | None = None
    out_svg: str | None = None
    timing: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.strategy not in _STRATS:
            raise ConfigError(f"strategy must be ra, na or both, got {self.strategy!r}")
        if self.sweep_param is not None:
            base = self.sweep_param.removesuffix(".typical")
            if base not in SWEEP_PARAMS or (base != self.sweep_param and base not in _TIER_SWEEP_KEYS):
                raise ConfigError(f"invalid sweep axis {self.sweep_param!r}; expected one of {SWEEP_PARAMS}"
                                  " (tier axes may carry a .typical suffix)")
            if len(self.sweep_values) < 2:
                raise ConfigError("a sweep needs at least two values")
        elif self.mode == "sweep":
            raise ConfigError("sweep mode requires --sweep and --values")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")


@dataclass
class ResultRow:
    sweep_value: float | None
    strategy: str
    analytic_p: float | None
    mc_p: float | None
    mc_ci_low: float | None
    mc_ci_high: float | None
    abs_gap: float | None
    trials: int | None
    seed: int | None
    runtime_seconds: float | None


CSV_COLUMNS = tuple(f.name for f in fields(ResultRow))


def sweep_overrides(param: str, value: float, k: int, typical_tier: int) -> dict:
    """Config overrides that place one sweep point."""
    base = param.removesuffix(".typical")
    if base == "nb":
        return {"nb": str(int(round(value)))}
    if base == "gamma_th_dbm":
        return {"gamma_th_dbm": repr(float(value))}
    key = _TIER_SWEEP_KEYS[base]
    tiers = [typical_tier] if param.endswith(".typical") else range(1, k + 1)
    return {f"tier{i}.{key}": repr(float(value)) for i in tiers}


def _evaluate(scn, req: RunRequest, sweep_value):
    rows, diags = [], []
    for strat in _STRATS[req.strategy]:
        sc = scn.replace(strategy=strat)
        t0 = time.perf_counter()
        ap = mc = None
        diag = {"sweep_value": sweep_value, "strategy": _SHORT[strat]}
        if req.mode in ("analytic", "validate", "sweep"):
            res = analytic.analyze(sc)
            ap = res.probability
            diag["analytic"] = {k: v for k, v in res.diagnostics.items()}
            diag["analytic"]["rf_threshold_w"] = res.rf_threshold
        if req.mode in ("simulate", "validate", "sweep"):
            mc = montecarlo.estimate_coverage(sc, req.trials, req.seed, req.workers)
            diag["mc"] = {"covered": mc.covered, "window": mc.window,
                          "mean_breakdown_w": asdict(mc.mean_breakdown)}
        runtime = time.perf_counter() - t0
        diag["runtime_seconds"] = runtime
        rows.append(ResultRow(
            sweep_value=sweep_value,
            strategy=_SHORT[strat],
            analytic_p=ap,
            mc_p=mc.probability if mc else None,
            mc_ci_low=mc.ci_low if mc else None,
            mc_ci_high=mc.ci_high if mc else None,
            abs_gap=abs(ap - mc.probability) if (mc is not None and ap is not None) else None,
            trials=req.trials if mc else None,
            seed=req.seed if mc else None,
            runtime_seconds=runtime if req.timing else None,
        ))
        diags.append(diag)
    return rows, diags


def execute(req: RunRequest):
    """Compute result rows and the JSON report for a request (no file output)."""
    overrides = parse_overrides(req.overrides)
    base = load_config(req.config_path, overrides)
    rows, diags, configs = [], [], []
    points = req.sweep_values if req.sweep_param else (None,)
    for value in points:
        if value is None:
            scn = base
        else:
            extra = dict(overrides)
            extra.update(sweep_overrides(req.sweep_param, value, base.k, base.typical_tier))
            if req.sweep_param.startswith("gamma_th_dbm"):
                extra.pop("gamma_th_mw", None)
            scn = load_config(req.config_path, extra)
        r, d = _evaluate(scn, req, None if value is None else float(value))
        rows += r
        diags += d
        configs.append(scenario_to_mapping(scn))
    report = {
        "request": {k: v for k, v in asdict(req).items()},
        "lobe_prob_mode": base.lobe_prob_mode,
        "config": scenario_to_mapping(base),
        "point_configs": configs,
        "rows": [asdict(r) for r in rows],
        "diagnostics": diags,
    }
    return rows, report


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v)) if isinstance(v, float) else str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    out = []
    for rec in reader:
        conv = {}
        for c in CSV_COLUMNS:
            v = rec[c]
            if c == "strategy":
                conv[c] = v
            elif v == "":
                conv[c] = None
            elif c in ("trials", "seed"):
                conv[c] = int(v)
            else:
                conv[c] = float(v)
        out.append(ResultRow(**conv))
    return out


def write_svg(rows, path: str, xlabel: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "mmwpt"
    fig, ax = plt.subplots(figsize=(6, 4))
    for strat, style in (("ra", "o-"), ("na", "s--")):
        sel = [r for r in rows if r.strategy == strat]
        if not sel:
            continue
        x = [r.sweep_value if r.sweep_value is not None else 0.0 for r in sel]
        if any(r.analytic_p is not None for r in sel):
            ax.plot(x, [r.analytic_p for r in sel], style, label=f"{strat.upper()} analytic")
        if any(r.mc_p is not None for r in sel):
            y = [r.mc_p for r in sel]
            err = [[r.mc_p - r.mc_ci_low for r in sel], [r.mc_ci_high - r.mc_p for r in sel]]
            ax.errorbar(x, y, yerr=err, fmt="x", capsize=3, label=f"{strat.upper()} Monte Carlo")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("energy coverage probability")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def run(req: RunRequest) -> int:
    try:
        rows, report = execute(req)
    except (ConfigError, DomainError) as exc:
        log.error("%s", exc)
        return 2
    except QuadratureError as exc:
        log.error("quadrature failure: %s (panel %s)", exc, exc.panel)
        return 3
    text = rows_to_csv(rows)
    if req.out_csv:
        with open(req.out_csv, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if req.out_json:
        with open(req.out_json, "w") as fh:
            json.dump(report, fh, indent=2, default=_json_default)
    if req.out_svg:
        write_svg(rows, req.out_svg, req.sweep_param or "scenario")
    for r in rows:
        if r.abs_gap is not None:
            log.info("%s x=%s analytic=%.4f mc=%.4f gap=%.4f", r.strategy, r.sweep_value,
                     r.analytic_p, r.mc_p, r.abs_gap)
    return 0


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmwpt", description=__doc__)
    p.add_argument("--mode", choices=MODES, default="analytic")
    p.add_argument("--config", help="key=value scenario file (defaults to the reference scenario)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--sweep", help=f"sweep axis: one of {', '.join(SWEEP_PARAMS)}; "
                   "tier axes accept a .typical suffix")
    p.add_argument("--values", help="comma-separated sweep values")
    p.add_argument("--strategy", choices=tuple(_STRATS), default="both")
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="CSV output path (stdout if omitted)")
    p.add_argument("--json", help="JSON report path")
    p.add_argument("--svg", help="SVG plot path")
    p.add_argument("--timing", action="store_true",
                   help="fill runtime_seconds in the CSV (makes it non-reproducible)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        values = tuple(float(v) for v in args.values.split(",")) if args.values else ()
        req = RunRequest(mode=args.mode, config_path=args.config, overrides=tuple(args.overrides),
                         sweep_param=args.sweep, sweep_values=values, strategy=args.strategy,
                         trials=args.trials, seed=args.seed, workers=args.workers,
                         out_csv=args.out, out_json=args.json, out_svg=args.svg, timing=args.timing)
    except (ConfigError, ValueError) as exc:
        log.error("%s", exc)
        return 2
    return run(req)


if __name__ == "__main__":
    sys.exit(main())
