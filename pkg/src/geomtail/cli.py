"""Command-line interface.

Six subcommands share one flat key=value configuration file:

* ``tail``      tail probabilities P(S > x) on a grid
* ``delta``     relative error of the first-order approximation on a grid
* ``kernels``   K and J kernels along the cutoff, with closed-form envelopes
* ``bound``     run the full bound construction, emit a certificate
* ``tune``      sweep cutoff scales and splice points
* ``plot-data`` exact error versus certified bound, ready for plotting

Exit codes: 0 success, 2 contraction failure (delta >= 1), 3 configuration
error, 4 engine error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .bounder import (
    BoundCertificate,
    ProcedureFailed,
    _build_delta_table,
    build_bound,
    build_spliced_g,
    tune,
)
from .compound import TailTable, delta_from_tails, mc_tail, panjer_tail
from .config import ConfigError, RunConfig, build_dist, build_g, build_h, parse_kv
from .dist import GeometricParams, ParetoDist, WeibullDist, discretize
from .kernels import (
    J_kernel,
    K_kernel,
    PowerTestFunction,
    pareto_J_envelope,
    pareto_K_envelope,
    weibull_J_envelope,
    weibull_K_envelope,
)

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="geomtail", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("tail", "compound tail probabilities on a grid"),
        ("delta", "relative error of the first-order tail approximation"),
        ("kernels", "overshoot kernels along the cutoff"),
        ("bound", "certified relative-error bound"),
        ("tune", "sweep cutoff scales and splice points"),
        ("plot-data", "exact error versus certified bound"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="key=value configuration file")
        cmd.add_argument("--out", default=None, help="output file (default: stdout)")
        cmd.add_argument("--seed", type=int, default=None, help="override the config seed")
        cmd.add_argument(
            "--engine", choices=("panjer", "mc"), default=None,
            help="override the config engine",
        )
        if name == "plot-data":
            cmd.add_argument(
                "--certificate", required=True, help="certificate file from the bound command"
            )
    return parser


def _emit(out_path: str | None, text: str) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(*vals) -> str:
    return ",".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in vals)


def _load(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    if args.engine is not None:
        cfg.values["engine"] = args.engine
    return cfg


def _tail_table_on_grid(cfg: RunConfig, dist, params, xs: np.ndarray) -> TailTable:
    engine = cfg.require_engine_inputs()
    xmax = float(np.max(xs))
    if engine == "panjer":
        bw = cfg.get("bandwidth")
        trunc_raw = cfg.get("truncation", 2.0 * xmax)
        n_cells = int(math.ceil(trunc_raw / bw - 1e-9))
        lattice = discretize(dist, bw, n_cells * bw, mode=cfg.get("mode", "rounded"))
        table = panjer_tail(lattice, params, xmax)
        # S is lattice-valued, so P(S > x) is constant between lattice points
        idx = np.minimum(
            np.floor(xs / bw + 1e-9).astype(int), len(table) - 1
        )
        return TailTable(
            xs=xs,
            tails=table.tails[idx],
            stderrs=np.zeros(xs.size),
            engine="panjer",
            bandwidth=bw,
        )
    return mc_tail(dist, params, cfg.require("mc_samples"), cfg.require("seed"), xs)


def _grid_from_config(cfg: RunConfig) -> np.ndarray:
    xs = np.asarray(cfg.require("xgrid"), dtype=float)
    if np.any(np.diff(xs) <= 0.0):
        raise ConfigError("xgrid must be strictly increasing")
    return xs


def cmd_tail(cfg: RunConfig, args) -> str:
    dist = build_dist(cfg)
    params = GeometricParams(p=cfg.require("p"))
    xs = _grid_from_config(cfg)
    table = _tail_table_on_grid(cfg, dist, params, xs)
    lines = ["x,tail,stderr,engine"]
    for row in table:
        lines.append(_fmt(row.x, row.tail, row.stderr) + f",{row.engine}")
    return "\n".join(lines) + "\n"


def cmd_delta(cfg: RunConfig, args) -> str:
    dist = build_dist(cfg)
    params = GeometricParams(p=cfg.require("p"))
    xs = _grid_from_config(cfg)
    table = delta_from_tails(_tail_table_on_grid(cfg, dist, params, xs), dist, params)
    lines = ["x,delta,delta_stderr"]
    for x, d, s in zip(table.xs, table.delta, table.delta_stderr):
        lines.append(_fmt(float(x), float(d), float(s)))
    return "\n".join(lines) + "\n"


def cmd_kernels(cfg: RunConfig, args) -> str:
    dist = build_dist(cfg)
    h = build_h(cfg)
    xs = _grid_from_config(cfg)
    lines = ["x,K,J,envelopeK,envelopeJ"]
    for x in xs:
        x = float(x)
        r = float(h(x))
        try:
            kv = K_kernel(dist, x, r)
            jv = J_kernel(dist, x, r) if r < x / 2.0 else 0.0
        except (ValueError, RuntimeError):
            kv = jv = math.nan
        ek = ej = math.nan
        try:
            if isinstance(dist, ParetoDist):
                ek = pareto_K_envelope(dist.alpha, x, r)
                ej = pareto_J_envelope(dist.alpha, x, r)
            elif isinstance(dist, WeibullDist):
                ek = weibull_K_envelope(dist.beta, x, r)
                ej = weibull_J_envelope(dist.beta, x, r)
        except ValueError:
            pass
        lines.append(_fmt(x, kv, jv, ek, ej))
    return "\n".join(lines) + "\n"


def _bound_from_config(cfg: RunConfig) -> BoundCertificate:
    dist = build_dist(cfg)
    params = GeometricParams(p=cfg.require("p"))
    h = build_h(cfg)
    g, bstar = build_g(cfg, dist, h)
    engine = cfg.require_engine_inputs()
    return build_bound(
        dist,
        params,
        h,
        g,
        B=cfg.require("B"),
        engine=engine,
        bandwidth=cfg.get("bandwidth"),
        truncation=cfg.get("truncation"),
        mc_samples=cfg.get("mc_samples"),
        seed=cfg.get("seed"),
        bstar=bstar,
        mode=cfg.get("mode", "rounded"),
        x_far=cfg.get("x_far", 1e8),
        grid_ratio=cfg.get("grid_ratio", 1.02),
        min_b_cap=cfg.get("min_b_cap", 10_000),
        mc_grid_points=cfg.get("mc_grid_points", 512),
    )


def cmd_bound(cfg: RunConfig, args) -> str:
    cert = _bound_from_config(cfg)
    return cert.to_text()


def cmd_tune(cfg: RunConfig, args) -> str:
    dist = build_dist(cfg)
    params = GeometricParams(p=cfg.require("p"))
    h = build_h(cfg)
    g, _ = build_g(cfg, dist, h)
    if not isinstance(g, PowerTestFunction):
        raise ConfigError("tuning requires g.variant = power (the tail shape to compare)")
    engine = cfg.require_engine_inputs()
    result = tune(
        dist,
        params,
        h,
        g,
        B=cfg.require("B"),
        s_grid=cfg.require("tune.s"),
        bstar_grid=cfg.require("tune.bstar"),
        engine=engine,
        bandwidth=cfg.get("bandwidth"),
        truncation=cfg.get("truncation"),
        mc_samples=cfg.get("mc_samples"),
        seed=cfg.get("seed"),
        mode=cfg.get("mode", "rounded"),
        x_far=cfg.get("x_far", 1e8),
        grid_ratio=cfg.get("grid_ratio", 1.02),
        mc_grid_points=cfg.get("mc_grid_points", 512),
    )
    lines = [
        f"# best scale = {result.scale:.12g}",
        f"# best bstar = {'none' if result.bstar is None else f'{result.bstar:.12g}'}",
        f"# coefficient = {result.coefficient:.12g}",
        f"# C = {result.C:.12g}",
        "scale,bstar,feasible,C,coefficient,note",
    ]
    for row in result.rows:
        lines.append(
            _fmt(row.scale)
            + f",{'none' if row.bstar is None else f'{row.bstar:.12g}'}"
            + f",{int(row.feasible)}"
            + f",{'' if row.C is None else f'{row.C:.12g}'}"
            + f",{'' if row.coefficient is None else f'{row.coefficient:.12g}'}"
            + f",{row.note}"
        )
    return "\n".join(lines) + "\n"


_CERT_CONFIG_KEYS = (
    "family", "alpha", "beta", "terms", "p", "engine", "bandwidth", "truncation",
    "mc_samples", "seed", "B",
    "h.family", "h.scale", "h.gamma", "h.kappa",
    "g.variant", "g.coef", "g.exponent", "g.bstar",
)


def cmd_plot_data(cfg: RunConfig, args) -> str:
    with open(args.certificate, "r", encoding="utf-8") as fh:
        cert_kv = parse_kv(fh.read())
    cert_cfg = RunConfig.from_text(
        "\n".join(f"{k} = {v}" for k, v in cert_kv.items() if k in _CERT_CONFIG_KEYS)
    )
    dist = build_dist(cert_cfg)
    params = GeometricParams(p=cert_cfg.require("p"))
    h = build_h(cert_cfg)
    g, bstar = build_g(cert_cfg, dist, h)
    C = float(cert_kv["C"])
    valid_from = float(cert_kv["valid_from"])
    B = cert_cfg.require("B")

    xmax = cfg.get("plot.xmax", B)
    npts = cfg.get("plot.points", 200)
    engine = cert_cfg.get("engine", "panjer")
    trunc = cert_cfg.get("truncation")
    if engine == "panjer" and trunc is not None and trunc < 2.0 * xmax:
        trunc = None  # recompute with enough headroom for the plot range
    table, _ = _build_delta_table(
        dist, params, max(xmax, B), float(h(B)), engine,
        cert_cfg.get("bandwidth"), trunc,
        cert_cfg.get("mc_samples"), cert_cfg.get("seed"),
        max(npts, 256), cert_cfg.get("mode", "rounded"),
    )
    if bstar is not None:
        g_final = build_spliced_g(table, bstar, g)
        stored = cert_kv.get("kappa_splice")
        drift = ""
        if stored is not None:
            rel = abs(g_final.kappa_splice - float(stored)) / max(1e-300, float(stored))
            if rel > 1e-6:
                drift = f" (rebuilt kappa drifts by {rel:.2e} from the certificate)"
        header = f"# spliced test function rebuilt, kappa = {g_final.kappa_splice:.12g}{drift}"
    else:
        g_final = g
        header = f"# test function: {g_final.describe()}"

    lo = float(h(B))
    sel = (table.xs >= lo) & (table.xs <= xmax) & (table.xs > 0)
    xs = table.xs[sel]
    dv = table.delta[sel]
    if xs.size > npts:
        idx = np.unique(np.linspace(0, xs.size - 1, npts).round().astype(int))
        xs, dv = xs[idx], dv[idx]

    lines = [header, f"# C = {C:.12g}, valid from {valid_from:.12g}",
             "x,log10_delta_exact,log10_delta_upper"]
    for x, d in zip(xs, dv):
        exact = math.log10(d) if d > 0.0 else math.nan
        upper = math.log10(C * g_final(float(x)))
        lines.append(_fmt(float(x), exact, upper))
    return "\n".join(lines) + "\n"


_COMMANDS = {
    "tail": cmd_tail,
    "delta": cmd_delta,
    "kernels": cmd_kernels,
    "bound": cmd_bound,
    "tune": cmd_tune,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _load(args)
        text = _COMMANDS[args.command](cfg, args)
        _emit(args.out, text)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 3
    except ProcedureFailed as exc:
        print(f"bound construction failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
