"""Command-line front end: TOML scenarios in, CSV results out.

Subcommands: network (one scenario, full rate report), sweep (curves over
distance and user-count grids), montecarlo (synthetic raw data through the
estimation pipeline), optimize (modulation-variance search), bps (per-pulse
to bit/s conversion).  Exit codes: 0 ok, 2 config or usage error, 3
numerical or physicality error.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import estimator
from .channels import DetectorParams, NetworkScenario
from .gaussian import NumericalDegeneracyError, UnphysicalStateError
from .keyrate import (
    KeyRateReport,
    bits_per_second,
    key_rate_total,
    network_report,
    optimize_modulation_variance,
)

RESULT_SCHEMA = "cvqnet-results-v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def load_config(path: str | Path | None) -> dict:
    if path is None:
        return {}
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc


def scenario_from_config(config: dict, **overrides) -> NetworkScenario:
    """Build a scenario from the [scenario] table.

    Accepts the native field names plus the aliases `users` and
    `modulation_variance`, and the per-user noise form
    `user_excess_noise` with optional `noise_placement`.
    """
    table = dict(config.get("scenario") or {})
    if not table and not overrides:
        raise ConfigError("config has no [scenario] table")
    table.update(overrides)

    if "users" in table:
        table["n_users"] = table.pop("users")
    if "modulation_variance" in table:
        if "source_variance" in table:
            raise ConfigError(
                "give either modulation_variance or source_variance, not both"
            )
        table["source_variance"] = float(table.pop("modulation_variance")) + 1.0

    user_eps = table.pop("user_excess_noise", None)
    placement = table.pop("noise_placement", "drop")
    if isinstance(table.get("ratios"), list):
        table["ratios"] = tuple(table["ratios"])
    dets = table.get("detectors")
    if isinstance(dets, dict):
        table["detectors"] = DetectorParams(**dets)
    elif isinstance(dets, list):
        table["detectors"] = tuple(DetectorParams(**d) for d in dets)

    try:
        if user_eps is not None:
            for key in ("excess_noise", "drop_excess_noise"):
                if table.pop(key, 0.0) not in (0.0, 0):
                    raise ConfigError(
                        f"{key} cannot be combined with user_excess_noise"
                    )
            scn = NetworkScenario.from_channel_referred_noise(
                tuple(user_eps), placement=placement, **table
            )
        else:
            scn = NetworkScenario(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc
    return scn


def _run_table(config: dict) -> dict:
    return dict(config.get("run") or {})


def write_csv(
    path: str | Path | None,
    command: str,
    columns: list[str],
    rows: list[tuple],
    *,
    meta: dict | None = None,
    timestamp: bool = True,
) -> None:
    lines = [f"# schema: {RESULT_SCHEMA}", f"# command: {command}"]
    for key, val in (meta or {}).items():
        lines.append(f"# {key}: {val}")
    if timestamp:
        lines.append(f"# created: {datetime.now(timezone.utc).isoformat()}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _scenario_meta(scn: NetworkScenario) -> dict:
    return {"scenario": json.dumps(scn.as_dict(), separators=(",", ":"))}


def _report_rows(rep: KeyRateReport) -> tuple[list[str], list[tuple]]:
    columns = [
        "user", "mi_alice", "mi_rest", "holevo", "k_raw", "k_clamped",
        "k_tot", "k_ub", "k_ub_p2p", "k_lb", "ratio",
    ]
    rows = []
    for u in rep.users:
        rows.append((
            u.user, u.mi_alice, u.mi_rest, u.holevo, u.k_raw, u.k_clamped,
            rep.k_tot, rep.k_ub,
            rep.k_ub_p2p if rep.k_ub_p2p is not None else float("nan"),
            rep.k_lb if rep.k_lb is not None else float("nan"),
            rep.ratio,
        ))
    return columns, rows


def cmd_network(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    scn = scenario_from_config(config)
    rep = network_report(scn)
    columns, rows = _report_rows(rep)
    write_csv(
        args.out, "network", columns, rows,
        meta=_scenario_meta(scn), timestamp=not args.no_timestamp,
    )
    print(
        f"{scn.n_users} users, feeder {scn.feeder_km:g} km: "
        f"K_tot={_fmt(rep.k_tot)} bit/pulse, K_UB={_fmt(rep.k_ub)}, "
        f"K_LB={_fmt(rep.k_lb)}, K_tot/K_UB={rep.ratio:.4f}",
        file=sys.stderr,
    )
    return EXIT_OK


def _sweep_point(payload: tuple) -> tuple:
    config, dist, n_users = payload
    scn = scenario_from_config(config, feeder_km=dist, n_users=n_users)
    rep = network_report(scn)
    return (
        dist, n_users, rep.users[0].k_clamped, rep.k_tot, rep.k_ub,
        rep.k_lb, scn.n_users * rep.k_lb,
    )


def cmd_sweep(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run = _run_table(config)
    distances = run.get("distances_km")
    if not distances:
        raise ConfigError("sweep needs run.distances_km, a non-empty list")
    if list(distances) != sorted(distances):
        raise ConfigError("run.distances_km must be increasing")
    user_grid = run.get("users") or [scenario_from_config(config).n_users]
    base = scenario_from_config(config)
    if not base.is_symmetric():
        raise ConfigError("sweeps need a symmetric scenario (uniform users)")

    points = [(config, float(d), int(n)) for n in user_grid for d in distances]
    if args.jobs and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, points))
    else:
        rows = [_sweep_point(p) for p in points]

    columns = ["distance_km", "n_users", "k_user", "k_tot", "k_ub", "k_lb", "n_k_lb"]
    write_csv(
        args.out, "sweep", columns, rows,
        meta=_scenario_meta(base), timestamp=not args.no_timestamp,
    )
    print(f"sweep: {len(rows)} points written", file=sys.stderr)
    return EXIT_OK


def cmd_montecarlo(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run = _run_table(config)
    scn = scenario_from_config(config)
    seed = args.seed if args.seed is not None else int(run.get("seed", 0))
    m = int(run.get("samples", 100_000))
    exact = bool(run.get("exact", False))

    theory = network_report(scn)
    if exact:
        sigma = estimator.outcome_sigma(scn)
        sys_est = estimator.system_from_sigma(sigma, scn)
        est = key_rate_total(sys_est, scn.beta, scn=scn)
    else:
        samples = estimator.sample_outcomes(scn, m, seed=seed)
        if args.samples_out:
            estimator.save_samples(
                samples, args.samples_out, timestamp=not args.no_timestamp
            )
        est = estimator.keyrate_from_samples(samples)

    columns = ["quantity", "estimated", "theory"]
    rows: list[tuple] = [
        (f"k_user_{u.user}", u.k_clamped, t.k_clamped)
        for u, t in zip(est.users, theory.users)
    ]
    rows += [
        ("k_tot", est.k_tot, theory.k_tot),
        ("k_ub", est.k_ub, theory.k_ub),
        ("ratio", est.ratio, theory.ratio),
    ]
    meta = _scenario_meta(scn)
    meta.update({"seed": seed, "samples": 0 if exact else m, "exact": exact})
    write_csv(
        args.out, "montecarlo", columns, rows,
        meta=meta, timestamp=not args.no_timestamp,
    )
    print(
        f"montecarlo: K_tot estimated {_fmt(est.k_tot)} vs theory "
        f"{_fmt(theory.k_tot)}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_optimize(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run = _run_table(config)
    scn = scenario_from_config(config)
    bounds = tuple(run.get("bounds", (0.1, 100.0)))
    tol = float(run.get("tol", 1e-3))
    res = optimize_modulation_variance(scn, bounds=bounds, tol=tol)
    write_csv(
        args.out, "optimize",
        ["v_mod", "k_tot", "saturated"],
        [(res.v_mod, res.k_tot, res.saturated)],
        meta=_scenario_meta(scn), timestamp=not args.no_timestamp,
    )
    note = " (rate still rising at the upper bound)" if res.saturated else ""
    print(
        f"optimal modulation variance {res.v_mod:.3f} SNU, "
        f"K_tot={_fmt(res.k_tot)}{note}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_bps(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    run = _run_table(config)
    baud = args.baud if args.baud is not None else run.get("baud_hz")
    if baud is None:
        raise ConfigError("bps needs --baud or run.baud_hz")
    overhead = (
        args.overhead if args.overhead is not None else run.get("overhead", 0.0)
    )
    rates = [float(r) for r in args.rate or []]
    labels = [f"rate_{i + 1}" for i in range(len(rates))]
    if not rates:
        if "scenario" not in config:
            raise ConfigError("bps needs --rate values or a [scenario] table")
        rep = network_report(scenario_from_config(config))
        rates = [u.k_clamped for u in rep.users] + [rep.k_tot]
        labels = [f"k_user_{u.user}" for u in rep.users] + ["k_tot"]
    try:
        rows = [
            (lab, r, bits_per_second(r, float(baud), float(overhead)))
            for lab, r in zip(labels, rates)
        ]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_csv(
        args.out, "bps",
        ["quantity", "bits_per_pulse", "bits_per_second"],
        rows, timestamp=not args.no_timestamp,
    )
    for lab, _, bps in rows:
        print(f"{lab}: {bps / 1e6:.2f} Mbps", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cvqnet",
        description="Key rates for broadcast-channel CV-QKD networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, config_required: bool) -> None:
        p.add_argument(
            "--config", required=config_required, help="TOML scenario file"
        )
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument(
            "--no-timestamp", action="store_true",
            help="omit the created-at header line",
        )

    p = sub.add_parser("network", help="rate report for one scenario")
    common(p, True)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("sweep", help="curves over distance and user grids")
    common(p, True)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("montecarlo", help="sampled estimation pipeline")
    common(p, True)
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--samples-out", help="also write the raw sample CSV here")
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("optimize", help="best modulation variance")
    common(p, True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bps", help="bit/pulse to bit/s conversion")
    common(p, False)
    p.add_argument(
        "--rate", action="append", type=float,
        help="bit/pulse value to convert; repeatable",
    )
    p.add_argument("--baud", type=float, help="symbol rate in Hz")
    p.add_argument("--overhead", type=float, help="non-key symbol fraction")
    p.set_defaults(func=cmd_bps)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (UnphysicalStateError, NumericalDegeneracyError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
