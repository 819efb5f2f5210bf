"""Scenario-driven command line: sweeps and fits emitted as CSV/JSON.

Every output starts with a ``#`` header carrying the fully resolved
scenario and the tool version; re-running with that scenario reproduces
the file byte for byte (no timestamps, shortest-roundtrip float
formatting, deterministic Monte Carlo streams).

Exit codes: 0 success, 2 scenario/schema error, 3 numerical
non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__, channels, gammafit, mc, outage
from .channels import (
    EnergySplit,
    GammaModelParams,
    LinkSide,
    ModeSwitch,
    TimeSwitch,
    lemma_fit_gamma,
)
from .outage import ChannelModelKind, OutageQuery, SeriesDivergence
from .scenario import (
    Scenario,
    SchemaError,
    load_scenario_file,
    resolve_scenario,
    scenario_to_json,
)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERIC = 3
EXIT_IO = 4

_SIDES = ((LinkSide.REFLECTING, "rfl"), (LinkSide.TRANSMITTING, "rfr"))


class _NumericFailure(Exception):
    pass


def _fmt(x: float) -> str:
    return repr(float(x))


def _load(args) -> tuple[Scenario, dict]:
    if args.scenario:
        scenario, resolved = load_scenario_file(args.scenario)
    else:
        scenario, resolved = resolve_scenario({})
    if args.seed is not None:
        resolved["mc"]["seed"] = args.seed
    if args.trials is not None:
        resolved["mc"]["trials"] = args.trials
    return scenario, resolved


def _header(resolved: dict) -> list[str]:
    return [
        f"# starnoma {__version__}",
        f"# scenario: {scenario_to_json(resolved)}",
    ]


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line + "\n")


def _mc_config(resolved: dict) -> mc.McConfig:
    block = resolved["mc"]
    return mc.McConfig(
        trials=block["trials"], seed=block["seed"], chunk_size=block["chunk_size"]
    )


def _scenario_for(scenario: Scenario, resolved: dict, variable: str, value: float) -> Scenario:
    from .network import dbm_to_watts

    if variable == "p_t_dbm":
        return scenario.with_p_t(dbm_to_watts(value))
    doc = {
        "geometry": dict(resolved["geometry"]),
        "power": dict(resolved["power"]),
        "rician": dict(resolved["rician"]),
        "protocol": dict(resolved["protocol"]),
        "elements": resolved["elements"],
    }
    if variable == "elements":
        doc["elements"] = int(value)
        if doc["protocol"]["kind"] == "MS":
            doc["protocol"] = {"kind": "MS"}  # re-derive the default split
    elif variable == "radius_m":
        doc["geometry"]["radius_m"] = value
    else:
        raise SchemaError(f"sweep.variable: unsupported {variable!r}")
    new_scenario, _ = resolve_scenario(
        {k: v for k, v in doc.items() if k in ("geometry", "power", "rician", "protocol", "elements")}
    )
    return new_scenario


def _sweep_grid(resolved: dict) -> tuple[str, np.ndarray]:
    sweep = resolved["sweep"]
    grid = np.linspace(float(sweep["start"]), float(sweep["stop"]), int(sweep["points"]))
    if sweep["variable"] == "elements":
        grid = np.unique(np.round(grid).astype(int)).astype(float)
    return sweep["variable"], grid


def _fit_gamma_params(
    scenario: Scenario, resolved: dict, side: LinkSide
) -> GammaModelParams:
    """Curve-fit parameters: shape pinned to the active element count,
    scale from deterministic channel samples (scaled out of beta_eff)."""
    proto = scenario.protocol
    m_eff = scenario.m_elements
    beta_eff = 1.0
    if isinstance(proto, EnergySplit):
        beta_eff = proto.beta_rfl if side is LinkSide.REFLECTING else proto.beta_rfr
    elif isinstance(proto, ModeSwitch):
        m_eff = proto.m_rfl if side is LinkSide.REFLECTING else proto.m_rfr
    samples = mc.channel_power_samples(
        scenario.m_elements,
        scenario.rician_br,
        scenario.rician_ru,
        proto,
        side,
        n_samples=resolved["mc"]["fit_samples"],
        seed=resolved["mc"]["seed"] + 104729,
        chunk_size=resolved["mc"]["chunk_size"],
    )
    return lemma_fit_gamma(samples, m_eff, beta_eff=beta_eff)


def _series_cell(fn, *args) -> tuple[str, str, float | None]:
    """Evaluate an outage series; on divergence return the fallback marker."""
    try:
        result = fn(*args)
        return _fmt(result.value), result.flags(), result.value
    except SeriesDivergence:
        return "", "series-fallback", None


def cmd_outage_sweep(args) -> int:
    scenario, resolved = _load(args)
    variable, grid = _sweep_grid(resolved)
    models = resolved["models"]
    cfg = _mc_config(resolved)

    columns = [variable, "snr_db"]
    for name in models:
        for _, tag in _SIDES:
            if name == "mc":
                columns += [f"pout_mc_{tag}", f"stderr_mc_{tag}"]
            elif name == "quad":
                columns += [f"pout_quad_{tag}"]
            else:
                columns += [f"pout_{name}_{tag}", f"flags_{name}_{tag}"]

    gamma_cache: dict[tuple[int, str], GammaModelParams] = {}
    lines = _header(resolved) + [",".join(columns)]
    for value in grid:
        point = _scenario_for(scenario, resolved, variable, float(value))
        cells = [_fmt(value), _fmt(point.snr_db())]
        for name in models:
            for side, tag in _SIDES:
                if name == "mc":
                    est = mc.estimate_outage(point, side, cfg, threads=args.threads)
                    cells += [_fmt(est.p_hat), _fmt(est.stderr)]
                elif name == "cl":
                    fn = (
                        outage.pout_rfl_central_limit
                        if side is LinkSide.REFLECTING
                        else outage.pout_rfr_central_limit
                    )
                    text, flags, val = _series_cell(fn, point)
                    if val is None:
                        q = OutageQuery(point, side, ChannelModelKind.CENTRAL_LIMIT)
                        text = _fmt(outage.pout_quadrature_oracle(q))
                    cells += [text, flags]
                elif name == "cf":
                    key = (point.m_elements, tag)
                    if key not in gamma_cache:
                        gamma_cache[key] = _fit_gamma_params(point, resolved, side)
                    gp = gamma_cache[key]
                    fn = (
                        outage.pout_rfl_curvefit
                        if side is LinkSide.REFLECTING
                        else outage.pout_rfr_curvefit
                    )
                    text, flags, val = _series_cell(fn, point, gp)
                    if val is None:
                        q = OutageQuery(point, side, ChannelModelKind.CURVE_FIT)
                        text = _fmt(outage.pout_quadrature_oracle(q, gamma_params=gp))
                    cells += [text, flags]
                elif name == "quad":
                    q = OutageQuery(point, side, ChannelModelKind.CENTRAL_LIMIT)
                    cells += [_fmt(outage.pout_quadrature_oracle(q))]
                elif name == "mfold":
                    sigma = channels.mfold_sigma(
                        0, 0, point.rician_br.k, point.rician_ru.k
                    )
                    res = outage.pout_asymptotic(point, point.protocol, side, sigma)
                    cells += [_fmt(res.value), res.flags()]
        lines.append(",".join(cells))
    _write_lines(args.out, lines)
    return EXIT_OK


def cmd_channel_cdf(args) -> int:
    scenario, resolved = _load(args)
    m_list = [int(tok) for tok in args.m_list.split(",") if tok.strip()]
    if not m_list:
        raise SchemaError("--m-list: expected a comma-separated list of element counts")
    n_samples = args.samples
    seed = resolved["mc"]["seed"]
    lines = _header(resolved) + ["m,x,ecdf,cl_cdf,cf_cdf"]
    footer = []
    for m in m_list:
        doc = {
            "geometry": dict(resolved["geometry"]),
            "power": dict(resolved["power"]),
            "rician": dict(resolved["rician"]),
            "protocol": dict(resolved["protocol"]),
            "elements": m,
        }
        if doc["protocol"]["kind"] == "MS":
            doc["protocol"] = {"kind": "MS"}
        point, _ = resolve_scenario(doc)
        side = LinkSide.REFLECTING
        samples = mc.channel_power_samples(
            m,
            point.rician_br,
            point.rician_ru,
            point.protocol,
            side,
            n_samples=n_samples,
            seed=seed,
            chunk_size=resolved["mc"]["chunk_size"],
        )
        stats = _effective_stats_for(point, side)
        beta_eff = stats.beta_eff
        gp = lemma_fit_gamma(samples, stats.m_active, beta_eff=beta_eff)
        ecdf = mc.empirical_cdf(samples)
        ks_cl = mc.ks_distance(ecdf, lambda x: channels.cl_cdf_vec(x, stats))
        ks_cf = mc.ks_distance(ecdf, lambda x: channels.gamma_cdf_vec(x, gp))
        grid = np.quantile(samples, np.linspace(0.001, 0.999, args.grid_points))
        e = ecdf(grid)
        cl = channels.cl_cdf_vec(grid, stats)
        cf = channels.gamma_cdf_vec(grid, gp)
        for x, ev, cv, fv in zip(grid, e, cl, cf):
            lines.append(f"{m},{_fmt(x)},{_fmt(ev)},{_fmt(cv)},{_fmt(fv)}")
        footer.append(f"# ks m={m} cl={_fmt(ks_cl)} cf={_fmt(ks_cf)}")
    _write_lines(args.out, lines + footer)
    return EXIT_OK


def _effective_stats_for(scenario: Scenario, side: LinkSide):
    from .outage import _effective_stats

    return _effective_stats(scenario, side)


def cmd_diversity(args) -> int:
    scenario, resolved = _load(args)
    protocols = []
    for tok in args.protocols.split(","):
        tok = tok.strip().upper()
        if tok == "ES":
            if resolved["protocol"]["kind"] == "ES":
                block = resolved["protocol"]
                protocols.append(EnergySplit(block["beta_rfl"], block["beta_rfr"]))
            else:
                protocols.append(EnergySplit(beta_rfl=0.7, beta_rfr=0.3))
        elif tok == "MS":
            m = scenario.m_elements
            m_rfl = -(-7 * m // 10)  # ceil(0.7 M)
            protocols.append(ModeSwitch(m_rfl=m_rfl, m_rfr=m - m_rfl))
        elif tok == "TS":
            protocols.append(TimeSwitch())
        else:
            raise SchemaError(f"--protocols: unknown protocol {tok!r}")
    if scenario.m_elements > 4 and not args.analytic_only:
        print(
            f"warning: M={scenario.m_elements} Monte Carlo diversity runs need "
            "outage below ~1e-6; consider --analytic-only",
            file=sys.stderr,
        )
    variable, grid = _sweep_grid(resolved)
    if variable != "p_t_dbm":
        raise SchemaError("diversity sweeps must use sweep.variable == p_t_dbm")
    cfg = _mc_config(resolved)
    sigma = channels.mfold_sigma(0, 0, scenario.rician_br.k, scenario.rician_ru.k)

    lines = _header(resolved) + [
        "protocol,side,m_active,analytic_order,analytic_slope,mc_slope"
    ]
    for proto in protocols:
        for side, tag in _SIDES:
            report = outage.diversity_order(proto, side, scenario.m_elements)
            snrs, logps = [], []
            for value in grid:
                point = _scenario_for(scenario, resolved, "p_t_dbm", float(value))
                snrs.append(point.snr_db())
                logps.append(outage.log10_pout_asymptotic(point, proto, side, sigma))
            analytic_slope = mc.diversity_slope(snrs, [10.0**lp for lp in logps])
            if args.analytic_only:
                mc_cell = ""
            else:
                pouts = []
                for value in grid:
                    point = _scenario_for(scenario, resolved, "p_t_dbm", float(value))
                    est = mc.estimate_outage(point, side, cfg, proto=proto, threads=args.threads)
                    pouts.append(est.p_hat)
                try:
                    mc_cell = _fmt(mc.diversity_slope(snrs, pouts))
                except ValueError as exc:
                    raise _NumericFailure(f"MC diversity slope: {exc}") from exc
            lines.append(
                f"{report.protocol},{tag},{report.order},{report.order},"
                f"{_fmt(analytic_slope)},{mc_cell}"
            )
    _write_lines(args.out, lines)
    return EXIT_OK


def cmd_compare_protocols(args) -> int:
    scenario, resolved = _load(args)
    m = scenario.m_elements
    m_rfl = -(-7 * m // 10)
    protocols = [
        ("es", EnergySplit(beta_rfl=0.7, beta_rfr=0.3)),
        ("ms", ModeSwitch(m_rfl=m_rfl, m_rfr=m - m_rfl)),
        ("ts", TimeSwitch()),
    ]
    variable, grid = _sweep_grid(resolved)
    cfg = _mc_config(resolved)
    columns = [variable, "snr_db"]
    for name, _ in protocols:
        for _, tag in _SIDES:
            columns += [f"pout_{name}_{tag}", f"stderr_{name}_{tag}"]
    lines = _header(resolved) + [",".join(columns)]
    for value in grid:
        point = _scenario_for(scenario, resolved, variable, float(value))
        cells = [_fmt(value), _fmt(point.snr_db())]
        for _, proto in protocols:
            for side, tag in _SIDES:
                est = mc.estimate_outage(point, side, cfg, proto=proto, threads=args.threads)
                cells += [_fmt(est.p_hat), _fmt(est.stderr)]
        lines.append(",".join(cells))
    _write_lines(args.out, lines)
    return EXIT_OK


def cmd_fit_gamma(args) -> int:
    scenario, resolved = _load(args)
    side = LinkSide.REFLECTING if args.side == "rfl" else LinkSide.TRANSMITTING
    stats = _effective_stats_for(scenario, side)
    samples = mc.channel_power_samples(
        scenario.m_elements,
        scenario.rician_br,
        scenario.rician_ru,
        scenario.protocol,
        side,
        n_samples=resolved["mc"]["trials"],
        seed=resolved["mc"]["seed"],
        chunk_size=resolved["mc"]["chunk_size"],
    )
    scaled = samples / stats.beta_eff
    try:
        if args.method == "mle":
            fit = gammafit.fit_mle(scaled)
        else:
            fit = gammafit.fit_moments(scaled)
    except ValueError as exc:
        raise _NumericFailure(str(exc)) from exc
    fit = gammafit.FitResult(
        params=replace(fit.params, beta_eff=stats.beta_eff),
        n_samples=fit.n_samples,
        method=fit.method,
        gof_ks=fit.gof_ks,
    )
    _write_lines(args.out, [fit.to_json()])
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="starnoma",
        description="Outage and channel-model analysis for omni-surface NOMA links",
    )
    parser.add_argument("--version", action="version", version=f"starnoma {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--scenario", help="scenario JSON file (defaults apply when omitted)")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--seed", type=int, default=None, help="override mc.seed")
        p.add_argument("--trials", type=int, default=None, help="override mc.trials")
        p.add_argument(
            "--threads",
            type=int,
            default=1,
            help="Monte Carlo worker threads (speed only, never results)",
        )

    p = sub.add_parser("outage-sweep", help="outage probability over the scenario sweep")
    common(p)
    p.set_defaults(fn=cmd_outage_sweep)

    p = sub.add_parser("channel-cdf", help="empirical vs model channel CDFs")
    common(p)
    p.add_argument("--m-list", default="10,20,30", help="comma-separated element counts")
    p.add_argument("--samples", type=int, default=1_000_000, help="draws per element count")
    p.add_argument("--grid-points", type=int, default=200, help="CDF evaluation points")
    p.set_defaults(fn=cmd_channel_cdf)

    p = sub.add_parser("diversity", help="analytic and Monte Carlo diversity orders")
    common(p)
    p.add_argument("--protocols", default="ES,MS,TS", help="comma-separated protocol tags")
    p.add_argument("--analytic-only", action="store_true", help="skip Monte Carlo slopes")
    p.set_defaults(fn=cmd_diversity)

    p = sub.add_parser("compare-protocols", help="Monte Carlo outage for ES/MS/TS")
    common(p)
    p.set_defaults(fn=cmd_compare_protocols)

    p = sub.add_parser("fit-gamma", help="fit the Gamma surrogate from channel samples")
    common(p)
    p.add_argument("--method", choices=("mle", "moments"), default="mle")
    p.add_argument("--side", choices=("rfl", "rfr"), default="rfl")
    p.set_defaults(fn=cmd_fit_gamma)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (_NumericFailure, outage.QuadratureError, SeriesDivergence) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
