"""Command-line interface: headway reports, diagram and sweep CSVs.

Subcommands
-----------
eigen          closed-form, spectral and simulated headways for one train count
phase-diagram  analytic diagram sampled on a density grid -> phase_diagram.csv
demand-sweep   controlled headway over a (trains, demand scale) grid -> demand_sweep.csv
instability    delay injection on the uncontrolled vs controlled dynamics -> instability.csv
validate       configuration schema and model property checks

Exit codes: 0 success, 2 configuration error, 3 model error (for example a
fully implicit system with zero or n trains).  Commands writing files also
drop a `manifest.json` next to them recording the exact invocation, so a
run can be reproduced byte for byte.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    control_params,
    demand_sweep,
    diagram_params,
    instability_metric,
    phase_diagram_density,
    write_demand_sweep_csv,
    write_instability_csv,
    write_phase_diagram_csv,
)
from .errors import ConfigError, ModelError
from .line import (
    LineConfig,
    build_controlled_system,
    build_demand_coupled_system,
    build_maxplus_system,
    closed_form_headway,
    maxplus_to_affine,
    place_trains,
    segmentize,
    simulate,
)
from .monotone import check_homogeneous_monotone
from .spectral import generalized_eigenpair

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metromax",
        description="Max-plus and dynamic-programming analysis of a circular metro line.",
    )
    parser.add_argument("--version", action="version", version="metromax " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="line configuration JSON")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")

    p = sub.add_parser("eigen", help="headway for a fixed train count, three ways")
    add_common(p)
    p.add_argument("--trains", type=int, required=True, help="number of running trains")
    p.add_argument("--events", type=int, default=5000, help="simulation horizon")

    p = sub.add_parser("phase-diagram", help="analytic diagram over a density grid")
    add_common(p)
    p.add_argument("--steps", type=int, default=200, help="density samples in (0, rho_max)")

    p = sub.add_parser("demand-sweep", help="controlled headway over (m, c) grid")
    add_common(p)
    p.add_argument("--trains", default=None,
                   help="comma-separated train counts (default: 1..n-1)")
    p.add_argument("--scale", default="0.5,1,2,3,5,9",
                   help="comma-separated demand scale factors")
    p.add_argument("--events", type=int, default=2000, help="events per sweep point")

    p = sub.add_parser("instability", help="delay injection experiment")
    add_common(p)
    p.add_argument("--trains", type=int, required=True)
    p.add_argument("--events", type=int, default=200, help="horizon after warmup")
    p.add_argument("--delay", type=float, default=30.0, help="injected delay, seconds")
    p.add_argument("--ratio", type=float, default=None,
                   help="override lambda/alpha at every platform")
    p.add_argument("--profile", choices=["uncontrolled", "controlled"],
                   default="uncontrolled", help="which dynamics receive the delay")

    p = sub.add_parser("validate", help="check a configuration and its model properties")
    p.add_argument("--config", required=True)
    return parser


def _load_model(path: str):
    cfg = LineConfig.from_json(path)
    return cfg, segmentize(cfg)


def _write_manifest(outdir: Path, args: argparse.Namespace, outputs: list) -> None:
    doc = {
        "tool": "metromax",
        "version": __version__,
        "command": args.command,
        "parameters": {
            k: v for k, v in sorted(vars(args).items()) if k != "command"
        },
        "outputs": [str(o) for o in outputs],
    }
    (outdir / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n")


def _parse_int_list(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError("expected comma-separated integers: %r" % text) from exc


def _parse_float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError("expected comma-separated numbers: %r" % text) from exc


def cmd_eigen(args) -> int:
    cfg, model = _load_model(args.config)
    m = args.trains
    h_formula = closed_form_headway(model, m)
    if not np.isfinite(h_formula):
        print("m=%d of n=%d segments: headway is infinite (frequency 0); "
              "no train movement is possible" % (m, model.n))
        return EXIT_OK
    placement = place_trains(model, m)
    a = build_maxplus_system(model, placement)
    h_spectral = generalized_eigenpair(a).mu
    res = simulate(maxplus_to_affine(a), model, placement, events=args.events)
    h_sim = res.headway_estimate
    values = {"closed-form": h_formula, "spectral": h_spectral, "simulated": h_sim}
    spread = max(values.values()) - min(values.values())
    rel = spread / h_formula
    print("headway with m=%d trains on %d segments (%s):" % (m, model.n, cfg.name))
    for k, v in values.items():
        print("  %-12s %10.4f s   (%.2f trains/h)" % (k, v, 3600.0 / v))
    print("max pairwise relative difference: %.3e" % rel)
    return EXIT_OK


def cmd_phase_diagram(args) -> int:
    cfg, model = _load_model(args.config)
    points = phase_diagram_density(model, args.steps)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "phase_diagram.csv"
    write_phase_diagram_csv(points, out)
    _write_manifest(outdir, args, [out])
    p = diagram_params(model)
    print("wrote %s (%d rows)" % (out, len(points)))
    print("v = %.2f km/h, w' = %.2f km/h, f_max = %.2f trains/h, L = %.3f km"
          % (p.v_kmh, p.w_prime_kmh, p.f_max_per_hour, p.L / 1000.0))
    return EXIT_OK


def cmd_demand_sweep(args) -> int:
    cfg, model = _load_model(args.config)
    counts = (_parse_int_list(args.trains) if args.trains
              else list(range(1, model.n)))
    scales = _parse_float_list(args.scale)
    points = demand_sweep(model, cfg.demand, counts, scales, events=args.events)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "demand_sweep.csv"
    write_demand_sweep_csv(points, out)
    _write_manifest(outdir, args, [out])
    print("wrote %s (%d rows over %d train counts x %d scales)"
          % (out, len(points), len(counts), len(scales)))
    return EXIT_OK


def cmd_instability(args) -> int:
    cfg, model = _load_model(args.config)
    placement = place_trains(model, args.trains)
    demand = cfg.demand
    if args.ratio is not None:
        demand = type(demand)(
            arrival_rates=demand.boarding_rates * args.ratio,
            boarding_rates=demand.boarding_rates,
        )
    if args.profile == "uncontrolled":
        sys_ = build_demand_coupled_system(model, placement, demand)
    else:
        ctrl = control_params(model, placement, demand)
        sys_ = build_controlled_system(model, placement, demand, ctrl)

    # settle into the stationary regime before injecting
    base = maxplus_to_affine(build_maxplus_system(model, placement))
    warm = simulate(base, model, placement, events=200).departures[-1]
    node = int(model.platform_nodes[0])
    result = instability_metric(sys_, model, placement, node=node, event=1,
                                delay=args.delay, events=args.events, warmup=warm)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    out = outdir / "instability.csv"
    write_instability_csv(result, out)
    _write_manifest(outdir, args, [out])
    print("wrote %s" % out)
    print("%s dynamics, %.0f s delay at node %d: amplification %.4f (%s)"
          % (args.profile, args.delay, node, result.amplification,
             "amplified" if result.amplified else "not amplified"))
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg, model = _load_model(args.config)
    print("configuration %s: OK (%d stations, %d segments, L = %.3f km)"
          % (args.config, len(cfg.stations), model.n, model.total_length / 1000.0))
    m = max(1, min(model.n - 1, model.n // 4))
    placement = place_trains(model, m)
    sys_ = maxplus_to_affine(build_maxplus_system(model, placement))
    report = check_homogeneous_monotone(sys_, trials=5)
    if not report.all_passed:
        raise ModelError("model property check failed: %s" % report.counterexample)
    print("passenger-free dynamics at m=%d: homogeneous, monotone, non-expansive" % m)
    return EXIT_OK


_COMMANDS = {
    "eigen": cmd_eigen,
    "phase-diagram": cmd_phase_diagram,
    "demand-sweep": cmd_demand_sweep,
    "instability": cmd_instability,
    "validate": cmd_validate,
}


def main(argv: list | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print("configuration error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except ModelError as exc:
        print("model error: %s" % exc, file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
