"""Command-line surface: simulate, fit, analyze, oracle.

Every subcommand accepts ``--config <file>`` with one ``key=value`` per
line (``#`` comments); keys are the flag names with underscores. Explicit
flags always win over config values. Exit codes: 0 success, 1 validation
error, 2 runtime error, 3 oracle budget violation.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from . import analysis, oracle, render
from .errors import PenaltyParseError, PppmixError, SelectorMismatchError
from .model import MixtureParams, read_dataset, simulate_data, write_dataset
from .penalty import format_penalty, parse_penalty
from .priors import HYPER_KEYS, default_hyperparams
from .sampler import ChainConfig, SampleStore, run_chain

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_BUDGET = 3

_REQUIRED = object()


class CliError(PppmixError):
    """Flag/config validation failure (exit code 1)."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; exit 2 is reserved for runtime errors here
    def error(self, message):
        raise CliError(message)


def _floats_csv(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ValueError(f"expected comma-separated reals, got {text!r}") from None
    if not vals:
        raise ValueError("expected at least one value")
    return vals


def _paths_csv(text: str) -> list[str]:
    return [p for p in text.split(",") if p]


def _bandwidth(text: str):
    if text == "auto":
        return "auto"
    val = float(text)
    if val <= 0.0:
        raise ValueError("bandwidth must be positive or 'auto'")
    return val


def _axis_arg(text: str) -> analysis.AxisSpec:
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected lo:hi:bins, got {text!r}")
    return analysis.AxisSpec(float(parts[0]), float(parts[1]), int(parts[2]))


def _range_arg(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected lo:hi, got {text!r}")
    return float(parts[0]), float(parts[1])


def _config_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _read_config(path) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, "r") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected key=value")
                key, val = line.split("=", 1)
                out[key.strip()] = val.strip()
    except OSError as exc:
        raise CliError(f"cannot read config file: {exc}") from None
    return out


def _merge(args: argparse.Namespace, schema: dict) -> dict:
    """Overlay precedence: explicit flags > config file > defaults."""
    cfg = _read_config(args.config) if getattr(args, "config", None) else {}
    unknown = sorted(set(cfg) - set(schema))
    if unknown:
        raise CliError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for key, (cast, default) in schema.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            merged[key] = flag_val
        elif key in cfg:
            try:
                merged[key] = cast(cfg[key])
            except ValueError as exc:
                raise CliError(f"config key {key}: {exc}") from None
        elif default is _REQUIRED:
            raise CliError(f"missing required option --{key.replace('_', '-')}")
        else:
            merged[key] = default
    return merged


_HYPER_SCHEMA = {key: (float, None) for key in HYPER_KEYS}

_SIM_SCHEMA = {
    "k": (int, _REQUIRED),
    "means": (_floats_csv, _REQUIRED),
    "sds": (_floats_csv, _REQUIRED),
    "weights": (_floats_csv, _REQUIRED),
    "n": (int, _REQUIRED),
    "seed": (int, _REQUIRED),
    "out": (str, _REQUIRED),
}

_FIT_SCHEMA = {
    "data": (str, _REQUIRED),
    "k": (int, _REQUIRED),
    "penalty": (str, "none"),
    "iters": (int, 20000),
    "burnin": (int, 5000),
    "thin": (int, 2),
    "chains": (int, 1),
    "seed": (int, 0),
    "init": (str, "quantile"),
    "out": (str, _REQUIRED),
    **_HYPER_SCHEMA,
}

_ANALYZE_SCHEMA = {
    "samples": (_paths_csv, _REQUIRED),
    "relabel": (str, "none"),
    "kde": (_paths_csv, []),
    "grid2d": (_paths_csv, []),
    "tailprob": (_paths_csv, []),
    "bandwidth": (_bandwidth, "auto"),
    "bins": (int, 512),
    "bins2d": (int, 101),
    "range": (_range_arg, None),
    "range2d": (str, None),
    "smooth2d": (_config_bool, False),
    "svg": (_config_bool, False),
    "out_prefix": (str, _REQUIRED),
}

_ORACLE_SCHEMA = {
    "data": (str, _REQUIRED),
    "penalty": (str, "none"),
    "fixed_weights": (_floats_csv, [0.5, 0.5]),
    "fixed_variances": (_floats_csv, [1.0, 1.0]),
    "fixed_beta": (float, 1.0),
    "grid": (_axis_arg, analysis.AxisSpec(-3.0, 5.0, 101)),
    "iters": (int, 210000),
    "burnin": (int, 10000),
    "thin": (int, 1),
    "rw_steps": (int, 1000000),
    "rw_step": (float, 0.5),
    "seed": (int, 0),
    "tv_budget_chain": (float, 0.05),
    "tv_budget_rw": (float, 0.05),
    "out_prefix": (str, _REQUIRED),
    **_HYPER_SCHEMA,
}


def _hyper_overrides(data, merged: dict):
    hyper = default_hyperparams(data)
    overrides = {key: merged[key] for key in HYPER_KEYS if merged.get(key) is not None}
    return replace(hyper, **overrides) if overrides else hyper


def cmd_simulate(args: argparse.Namespace) -> int:
    m = _merge(args, _SIM_SCHEMA)
    k = m["k"]
    if k < 1:
        raise CliError("k must be >= 1")
    if m["n"] < 1:
        raise CliError("n must be >= 1")
    means, sds, weights = m["means"], m["sds"], m["weights"]
    if not (len(means) == len(sds) == len(weights) == k):
        raise CliError("means, sds and weights must each have k entries")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise CliError("weights must sum to 1 within 1e-9")
    if any(s <= 0.0 for s in sds):
        raise CliError("sds must be positive")
    w = np.asarray(weights, dtype=float)
    params = MixtureParams(weights=w / w.sum(), means=means, variances=np.square(sds))
    dataset = simulate_data(params, m["n"], m["seed"])
    write_dataset(dataset, m["out"])
    print(f"wrote {m['n']} observations to {m['out']}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    m = _merge(args, _FIT_SCHEMA)
    if m["chains"] < 1:
        raise CliError("chains must be >= 1")
    spec = parse_penalty(m["penalty"])
    data = read_dataset(m["data"])
    hyper = _hyper_overrides(data, m)
    configs = [
        ChainConfig(
            k=m["k"],
            iterations=m["iters"],
            burn_in=m["burnin"],
            thin=m["thin"],
            seed=m["seed"] + i,
            penalty=spec,
            hyper=hyper,
            init=m["init"],
        )
        for i in range(m["chains"])
    ]
    t0 = time.perf_counter()
    if len(configs) == 1:
        stores = [run_chain(data, configs[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(configs)) as pool:
            stores = list(pool.map(lambda cfg: run_chain(data, cfg), configs))
    wall = time.perf_counter() - t0

    chain_paths = []
    for i, store in enumerate(stores, start=1):
        path = f"{m['out']}_chain{i}.csv"
        store.to_csv(path)
        chain_paths.append(path)

    report_path = f"{m['out']}_report.txt"
    lines = ["subcommand=fit"]
    for key in ("data", "k", "iters", "burnin", "thin", "chains", "seed", "init"):
        lines.append(f"{key}={m[key]}")
    lines.append(f"penalty={format_penalty(spec)}")
    for key, val in hyper.as_config().items():
        lines.append(f"{key}={val!r}")
    for i, store in enumerate(stores, start=1):
        lines.append(f"records_chain{i}={store.records}")
        lines.append(f"acceptance_rate_mu_chain{i}={store.acceptance_rate!r}")
        lines.append(f"samples_chain{i}={chain_paths[i - 1]}")
    lines.append(f"wall_time_s={wall:.3f}")
    with open(report_path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

    for i, store in enumerate(stores, start=1):
        print(f"chain {i}: {store.records} records, mean-block acceptance {store.acceptance_rate:.4f}")
    print(f"report: {report_path}")
    return EXIT_OK


def _concat_stores(stores: list[SampleStore]) -> SampleStore:
    k = stores[0].k
    if any(s.k != k for s in stores):
        raise CliError("sample files disagree on the number of components")
    accept = np.concatenate([s.accept_mu for s in stores])
    return SampleStore(
        k=k,
        iters=np.concatenate([s.iters for s in stores]),
        accept_mu=accept,
        beta=np.concatenate([s.beta for s in stores]),
        weights=np.vstack([s.weights for s in stores]),
        means=np.vstack([s.means for s in stores]),
        variances=np.vstack([s.variances for s in stores]),
        acceptance_rate=float(accept.mean()) if accept.size else 1.0,
    )


def _parse_tailprob(text: str) -> tuple[str, str, float]:
    for op in ("<", ">"):
        if op in text:
            col, _, thr = text.partition(op)
            if not col or not thr:
                break
            try:
                return col, op, float(thr)
            except ValueError:
                break
    raise CliError(f"expected <column><op><threshold> with op '<' or '>', got {text!r}")


def cmd_analyze(args: argparse.Namespace) -> int:
    m = _merge(args, _ANALYZE_SCHEMA)
    if m["relabel"] not in ("none", "ic-mu"):
        raise CliError("relabel must be 'none' or 'ic-mu'")
    stores = [SampleStore.from_csv(p) for p in m["samples"]]
    combined = _concat_stores(stores)
    samples = analysis.relabel_ic(combined) if m["relabel"] == "ic-mu" else combined

    prefix = m["out_prefix"]
    summary = [
        "subcommand=analyze",
        f"samples={','.join(m['samples'])}",
        f"relabel={m['relabel']}",
        f"records={combined.records}",
        f"k={combined.k}",
    ]

    for col in m["kde"]:
        values = analysis.resolve_column(samples, col)
        if m["range"] is not None:
            axis = analysis.AxisSpec(m["range"][0], m["range"][1], m["bins"])
        else:
            axis = analysis.default_axis(values, m["bins"])
        bw = m["bandwidth"] if m["bandwidth"] != "auto" else analysis.silverman_bandwidth(values)
        grid = analysis.kde_1d(values, bw, axis)
        path = f"{prefix}_kde_{col}.csv"
        grid.to_csv(path)
        if m["svg"]:
            render.render_svg(grid, f"{prefix}_kde_{col}.svg", title=col)
        modes = analysis.find_modes(grid)
        summary.append(f"kde_{col}_bandwidth={bw!r}")
        summary.append(f"kde_{col}_modes={len(modes)}")
        summary.append(f"kde_{col}_mode_locations={','.join(repr(loc) for loc, _ in modes)}")

    for pair in m["grid2d"]:
        colx, sep, coly = pair.partition(":")
        if not sep or not colx or not coly:
            raise CliError(f"expected <colx>:<coly>, got {pair!r}")
        xv = analysis.resolve_column(samples, colx)
        yv = analysis.resolve_column(samples, coly)
        if m["range2d"] is not None:
            parts = m["range2d"].split(",")
            if len(parts) != 2:
                raise CliError("range2d must be lox:hix,loy:hiy")
            xr, yr = _range_arg(parts[0]), _range_arg(parts[1])
            ax = analysis.AxisSpec(xr[0], xr[1], m["bins2d"])
            ay = analysis.AxisSpec(yr[0], yr[1], m["bins2d"])
        else:
            ax = analysis.default_axis(xv, m["bins2d"])
            ay = analysis.default_axis(yv, m["bins2d"])
        grid = analysis.grid_2d(xv, yv, ax, ay, smooth=m["smooth2d"])
        path = f"{prefix}_grid2d_{colx}_{coly}.csv"
        grid.to_csv(path)
        if m["svg"]:
            render.render_svg(grid, f"{prefix}_grid2d_{colx}_{coly}.svg", title=pair)
        summary.append(f"grid2d_{colx}_{coly}={path}")

    for spec_text in m["tailprob"]:
        col, op, thr = _parse_tailprob(spec_text)
        p = analysis.tail_probability(analysis.resolve_column(samples, col), op, thr)
        summary.append(f"tailprob[{spec_text}]={p!r}")

    summary_path = f"{prefix}_summary.txt"
    with open(summary_path, "w", newline="") as fh:
        fh.write("\n".join(summary) + "\n")
    print(f"summary: {summary_path}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    m = _merge(args, _ORACLE_SCHEMA)
    data = read_dataset(m["data"])
    spec = parse_penalty(m["penalty"])
    hyper = _hyper_overrides(data, m)
    axis = m["grid"]
    weights = np.asarray(m["fixed_weights"], dtype=float)
    variances = np.asarray(m["fixed_variances"], dtype=float)
    beta = m["fixed_beta"]

    gp = oracle.grid_posterior(data, weights, variances, beta, hyper, spec, axis, axis)
    cover = oracle.coverage_fraction(data, weights, variances, beta, hyper, spec, axis, axis)
    chain = oracle.constrained_chain_marginal(
        data, weights, variances, beta, hyper, spec,
        iterations=m["iters"], burn_in=m["burnin"], thin=m["thin"], seed=m["seed"],
        axis1=axis, axis2=axis,
    )
    walker = oracle.reference_rw_sampler(
        data, weights, variances, beta, hyper, spec,
        steps=m["rw_steps"], step_size=m["rw_step"], seed=m["seed"] + 1,
        axis1=axis, axis2=axis,
    )
    tv_chain = oracle.tv_distance(gp.density, chain)
    tv_rw = oracle.tv_distance(gp.density, walker)
    tv_cross = oracle.tv_distance(chain, walker)

    prefix = m["out_prefix"]
    gp.density.to_csv(f"{prefix}_grid.csv")
    chain.to_csv(f"{prefix}_chain.csv")
    walker.to_csv(f"{prefix}_rw.csv")

    chain_ok = tv_chain < m["tv_budget_chain"]
    rw_ok = tv_rw < m["tv_budget_rw"]
    lines = ["subcommand=oracle"]
    for key in ("data", "iters", "burnin", "thin", "rw_steps", "rw_step", "seed"):
        lines.append(f"{key}={m[key]}")
    lines.append(f"penalty={format_penalty(spec)}")
    lines.append(f"grid={axis.lo!r}:{axis.hi!r}:{axis.bins}")
    lines.append(f"fixed_weights={','.join(repr(v) for v in weights)}")
    lines.append(f"fixed_variances={','.join(repr(v) for v in variances)}")
    lines.append(f"fixed_beta={beta!r}")
    lines.append(f"coverage={cover!r}")
    lines.append(f"tv_grid_chain={tv_chain!r}")
    lines.append(f"tv_grid_rw={tv_rw!r}")
    lines.append(f"tv_chain_rw={tv_cross!r}")
    lines.append(f"tv_budget_chain={m['tv_budget_chain']!r}")
    lines.append(f"tv_budget_rw={m['tv_budget_rw']!r}")
    lines.append(f"result_chain={'PASS' if chain_ok else 'FAIL'}")
    lines.append(f"result_rw={'PASS' if rw_ok else 'FAIL'}")
    with open(f"{prefix}_report.txt", "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")

    print(f"TV(grid, chain) = {tv_chain:.4f} (budget {m['tv_budget_chain']}): "
          f"{'PASS' if chain_ok else 'FAIL'}")
    print(f"TV(grid, walker) = {tv_rw:.4f} (budget {m['tv_budget_rw']}): "
          f"{'PASS' if rw_ok else 'FAIL'}")
    print(f"TV(chain, walker) = {tv_cross:.4f}; grid coverage {cover:.6f}")
    return EXIT_OK if (chain_ok and rw_ok) else EXIT_BUDGET


def build_parser() -> _Parser:
    parser = _Parser(prog="pppmix", description="Normal mixture MCMC with proximity penalty priors")
    sub = parser.add_subparsers(dest="command")

    sim = sub.add_parser("simulate", help="draw a synthetic dataset CSV")
    sim.add_argument("--k", type=int)
    sim.add_argument("--means", type=_floats_csv)
    sim.add_argument("--sds", type=_floats_csv)
    sim.add_argument("--weights", type=_floats_csv)
    sim.add_argument("--n", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out")
    sim.add_argument("--config")
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="run penalty-accept chains on a dataset")
    fit.add_argument("--data")
    fit.add_argument("--k", type=int)
    fit.add_argument("--penalty")
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burnin", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--chains", type=int)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--init", choices=("quantile", "prior"))
    fit.add_argument("--out")
    fit.add_argument("--config")
    for key in HYPER_KEYS:
        fit.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    fit.set_defaults(func=cmd_fit)

    ana = sub.add_parser("analyze", help="post-process sample CSVs")
    ana.add_argument("--samples", nargs="+")
    ana.add_argument("--relabel", choices=("none", "ic-mu"))
    ana.add_argument("--kde", action="append")
    ana.add_argument("--grid2d", action="append")
    ana.add_argument("--tailprob", action="append")
    ana.add_argument("--bandwidth", type=_bandwidth)
    ana.add_argument("--bins", type=int)
    ana.add_argument("--bins2d", type=int)
    ana.add_argument("--range", type=_range_arg)
    ana.add_argument("--range2d")
    ana.add_argument("--smooth2d", action="store_true", default=None)
    ana.add_argument("--svg", action="store_true", default=None)
    ana.add_argument("--out-prefix", dest="out_prefix")
    ana.add_argument("--config")
    ana.set_defaults(func=cmd_analyze)

    orc = sub.add_parser("oracle", help="verify the sampler against brute force")
    orc.add_argument("--data")
    orc.add_argument("--penalty")
    orc.add_argument("--fixed-weights", dest="fixed_weights", type=_floats_csv)
    orc.add_argument("--fixed-variances", dest="fixed_variances", type=_floats_csv)
    orc.add_argument("--fixed-beta", dest="fixed_beta", type=float)
    orc.add_argument("--grid", type=_axis_arg)
    orc.add_argument("--iters", type=int)
    orc.add_argument("--burnin", type=int)
    orc.add_argument("--thin", type=int)
    orc.add_argument("--rw-steps", dest="rw_steps", type=int)
    orc.add_argument("--rw-step", dest="rw_step", type=float)
    orc.add_argument("--seed", type=int)
    orc.add_argument("--tv-budget-chain", dest="tv_budget_chain", type=float)
    orc.add_argument("--tv-budget-rw", dest="tv_budget_rw", type=float)
    orc.add_argument("--out-prefix", dest="out_prefix")
    orc.add_argument("--config")
    for key in HYPER_KEYS:
        orc.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)
    orc.set_defaults(func=cmd_oracle)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "func", None) is None:
            parser.print_usage(sys.stderr)
            return EXIT_VALIDATION
        return args.func(args)
    except (CliError, PenaltyParseError, SelectorMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PppmixError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
