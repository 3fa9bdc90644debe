"""Batch experiment runner.

Every pipeline is a subcommand taking a config file (the same structured
dialect as chain/weight files; one file may hold [chain], [weight] and
[run] together).  Outputs are CSV and flat key-value text files, written
atomically and byte-identical across runs for a fixed config.

Exit codes: 0 success, 2 consistency verdict "inconsistent", 3 input error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

from . import fileformats as ff
from .asymptotics import (
    conjecture_report,
    edge_exponents,
    edge_scaled_christoffel,
    ratio_limit_with_edge_spread,
)
from .chains import (
    ChainSpec,
    asymptotic_aperiodicity_sum,
    is_periodic,
    killing_sum,
    potential_coefficients,
    rj_over_pj_sum,
    series_L,
)
from .errors import InputError, RwlabError
from .fileformats import atomic_write, csv_text, keyvalue_text
from .measures import (
    cn_series,
    quadrature_from_chain,
    srlp_predicted_limit,
    transition_probability,
)
from .normalization import normalize
from .polynomials import absorption_probabilities, eval_Q, support_edges
from .recover import (
    WeightSpec,
    chain_from_recurrence,
    discretize_weight,
    grid_size_for_depth,
    stieltjes_recurrence,
)

LOG10 = math.log(10.0)


@dataclass
class ExperimentConfig:
    """Validated run parameters assembled from the config file and flags."""

    chain: ChainSpec | None
    weight: WeightSpec | None
    precision: int
    truncation: int
    horizon: int
    seed: int
    out: str
    options: dict

    def require_chain(self) -> ChainSpec:
        if self.chain is None:
            raise InputError("this subcommand needs a [chain] section")
        return self.chain

    def require_weight(self) -> WeightSpec:
        if self.weight is None:
            raise InputError("this subcommand needs a [weight] section")
        return self.weight


def _diagnostic(level: str, code: str, message: str) -> None:
    sys.stderr.write(json.dumps(
        {"level": level, "code": code, "message": message}, sort_keys=True
    ) + "\n")


def load_config(args) -> ExperimentConfig:
    sections = ff.parse_file(args.config) if args.config else {}
    run = sections.get("run", {})
    chain = ff.chain_from_sections(sections) if "chain" in sections else None
    weight = ff.weight_from_sections(sections) if "weight" in sections else None

    def pick(flag, key, default, cast=int):
        if flag is not None:
            return flag
        if key in run:
            return cast(run[key])
        return default

    precision = pick(args.precision, "precision", 34)
    if precision < 15:
        raise InputError("precision must be >= 15 digits")
    truncation = pick(args.truncation, "truncation", 400)
    if truncation < 2:
        raise InputError("truncation must be >= 2")
    horizon = pick(args.horizon, "horizon", 2 * truncation - 1)
    seed = pick(args.seed, "seed", 1234)
    out = args.out or run.get("out") or "out"
    options = {k: v for k, v in run.items()}
    return ExperimentConfig(chain, weight, precision, truncation, horizon, seed, out, options)


def _opt(cfg: ExperimentConfig, key: str, default, cast=int):
    if key in cfg.options:
        return cast(cfg.options[key])
    return default


def _path(cfg: ExperimentConfig, name: str) -> str:
    return os.path.join(cfg.out, name)


# --- subcommand handlers --------------------------------------------------------


def cmd_chain_info(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    n = int(min(cfg.horizon, chain.depth - 2))
    rows = [("label", chain.label), ("periodic", is_periodic(chain)),
            ("has_killing", chain.has_killing())]
    recurrence = series_L(chain, n, cfg.precision)
    rows.append(("recurrence_series", recurrence.verdict))
    rows.append(("recurrence_detail", recurrence.tail_analysis))
    if not chain.has_killing():
        ar = asymptotic_aperiodicity_sum(chain, n, cfg.precision)
        rows.append(("aperiodicity_sum", ar.verdict))
        rows.append(("aperiodicity_detail", ar.tail_analysis))
    rp = rj_over_pj_sum(chain, n, cfg.precision)
    rows.append(("hold_over_up_sum", rp.verdict))
    ks = killing_sum(chain, n, cfg.precision)
    rows.append(("killing_sum", ks.verdict))
    pis = potential_coefficients(chain, min(n, 64), cfg.precision)
    atomic_write(_path(cfg, "chain_info.txt"), keyvalue_text(rows))
    atomic_write(
        _path(cfg, "potential_coefficients.csv"),
        csv_text(["j", "log10_pi", "pi"], (
            (j, v.log10, v.value) for j, v in enumerate(pis)
        )),
    )
    return 0


def cmd_polys(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    x = cfg.options.get("x", "1/2")
    n = _opt(cfg, "depth", int(min(64, chain.depth - 1)))
    from fractions import Fraction

    trace = eval_Q(chain, n, Fraction(x), cfg.precision)
    rows = []
    for k in range(n + 1):
        qv = trace.values[k]
        pv = trace.orthonormal_values[k]
        rows.append((k, qv.sign, qv.log10, pv.sign, pv.log10))
    atomic_write(
        _path(cfg, "polys.csv"),
        csv_text(["n", "sign_Q", "log10_abs_Q", "sign_p", "log10_abs_p"], rows),
    )
    return 0


def cmd_edges(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    e = support_edges(chain, max(50, cfg.truncation), digits=cfg.precision)
    atomic_write(_path(cfg, "edges.txt"), keyvalue_text([
        ("eta_hat", e.eta_hat), ("zeta_hat", e.zeta_hat), ("method", e.method),
        ("truncation_size", e.truncation_size), ("discrepancy", e.discrepancy),
        ("eta_eigen", e.eta_eigen), ("eta_bisection", e.eta_bisection),
        ("zeta_eigen", e.zeta_eigen), ("zeta_bisection", e.zeta_bisection),
    ]))
    return 0


def _measure_for(cfg: ExperimentConfig):
    if cfg.weight is not None:
        grid = _opt(cfg, "grid", grid_size_for_depth(cfg.horizon))
        return discretize_weight(cfg.weight, grid, cfg.precision)
    chain = cfg.require_chain()
    return quadrature_from_chain(chain, cfg.truncation, cfg.precision)


def cmd_measure(cfg: ExperimentConfig) -> int:
    m = _measure_for(cfg)
    if m.mp_nodes is not None:
        rows = (
            (ff.format_number(x, cfg.precision + 2), ff.format_number(w, cfg.precision + 2))
            for x, w in zip(m.mp_nodes, m.mp_weights)
        )
    else:
        rows = zip(m.nodes, m.weights)
    atomic_write(_path(cfg, "measure.csv"), csv_text(["node", "weight"], rows))
    return 0


def cmd_cn(cfg: ExperimentConfig) -> int:
    m = _measure_for(cfg)
    horizon = min(cfg.horizon, 2 * len(m) - 1)
    values = cn_series(m, horizon)
    atomic_write(
        _path(cfg, "cn.csv"),
        csv_text(["n", "C_n"], ((n, v) for n, v in enumerate(values))),
    )
    return 0


def cmd_christoffel(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    e = support_edges(chain, int(min(max(50, cfg.truncation), chain.depth)),
                      digits=cfg.precision)
    n_max = int(min(cfg.horizon, chain.depth - 1))
    seq, est, spread = ratio_limit_with_edge_spread(chain, n_max, e.eta_hat, cfg.precision)
    atomic_write(
        _path(cfg, "christoffel.csv"),
        csv_text(
            ["k", "rho_ratio", "log10_rho_ratio", "q_sq_ratio"],
            (
                (k + 1, seq.ratios[k], seq.log10_ratios[k], seq.q_sq_ratios[k + 1])
                for k in range(len(seq.ratios))
            ),
        ),
    )
    atomic_write(_path(cfg, "christoffel_limit.txt"), keyvalue_text([
        ("eta_hat", e.eta_hat), ("limit", est.value), ("uncertainty", est.uncertainty),
        ("edge_spread", spread), ("method", est.method),
    ]))
    return 0


def cmd_normalize(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    e = support_edges(chain, int(min(max(50, cfg.truncation), chain.depth)),
                      digits=cfg.precision)
    depth = _opt(cfg, "depth", int(min(256, chain.depth - 2)))
    norm = normalize(chain, e.eta_hat, depth, cfg.precision)
    text = ff.chain_to_text(
        norm.chain,
        comment=f"normalized from {norm.base_label} at eta = {norm.eta_used!r}",
    )
    atomic_write(_path(cfg, "normalized_chain.txt"), text)
    return 0


def cmd_recover(cfg: ExperimentConfig) -> int:
    weight = cfg.require_weight()
    depth = _opt(cfg, "depth", 64)
    grid = _opt(cfg, "grid", grid_size_for_depth(depth))
    m = discretize_weight(weight, grid, cfg.precision)
    coeffs = stieltjes_recurrence(m, depth, cfg.precision)
    recovery = chain_from_recurrence(coeffs, label=weight.label + "-chain")
    atomic_write(
        _path(cfg, "recurrence.csv"),
        csv_text(["k", "a", "b"], (
            (k + 1, coeffs.a[k], coeffs.b[k]) for k in range(coeffs.length)
        )),
    )
    if not recovery.ok:
        _diagnostic("error", "not-a-random-walk-measure",
                    f"{weight.label}: {recovery.fail_reason} (index {recovery.fail_index})")
        return 3
    atomic_write(_path(cfg, "recovered_chain.txt"),
                 ff.chain_to_text(recovery.chain, comment=f"recovered from {weight.label}"))
    return 0


def cmd_srlp(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    e = support_edges(chain, int(min(max(50, cfg.truncation), chain.depth)),
                      digits=cfg.precision)
    i = _opt(cfg, "i", 0)
    j = _opt(cfg, "j", 1)
    k = _opt(cfg, "k", 0)
    l = _opt(cfg, "l", 0)
    cmp_ = srlp_predicted_limit(chain, i, j, k, l, e.eta_hat, cfg.precision,
                                horizon=min(cfg.horizon, 400))
    atomic_write(
        _path(cfg, "srlp.csv"),
        csv_text(["n", "empirical_ratio", "predicted"], (
            (int(n), r, cmp_.predicted) for n, r in zip(cmp_.ns, cmp_.ratios)
        )),
    )
    return 0


def cmd_conjecture(cfg: ExperimentConfig) -> int:
    if cfg.chain is None and cfg.weight is None:
        raise InputError("conjecture needs a [chain] or [weight] section")
    rep = conjecture_report(
        chain=cfg.chain if cfg.weight is None else None,
        weight=cfg.weight,
        N=cfg.truncation,
        n_max=cfg.horizon,
        truncation=max(200, cfg.truncation),
        digits=cfg.precision,
        edge_digits=min(cfg.precision, 15),
    )
    pairs = [
        ("label", rep.chain_label),
        ("branch", rep.branch),
        ("verdict", rep.verdict),
        ("tolerance", rep.tolerance),
        ("rho_ratio_limit", rep.lim_rho_ratio.value),
        ("rho_ratio_uncertainty", rep.lim_rho_ratio.uncertainty),
        ("eta_hat", rep.edges.eta_hat),
        ("eta_spread", rep.eta_spread),
    ]
    if rep.lim_cn is not None:
        pairs.insert(4, ("cn_limit", rep.lim_cn.value))
        pairs.insert(5, ("cn_uncertainty", rep.lim_cn.uncertainty))
    if rep.prediction is not None:
        pairs.append(("prediction", rep.prediction))
        pairs.append(("prediction_source", rep.prediction_source))
    for key, value in sorted(rep.diagnostics.items()):
        pairs.append((f"diag_{key}", value))
    atomic_write(_path(cfg, "conjecture.txt"), keyvalue_text(pairs))
    n_rows = len(rep.ratio_values)
    cn = rep.cn_values
    atomic_write(
        _path(cfg, "conjecture_series.csv"),
        csv_text(["n", "C_n", "rho_ratio"], (
            (
                k + 1,
                cn[k + 1] if cn is not None and k + 1 < len(cn) else math.nan,
                rep.ratio_values[k],
            )
            for k in range(n_rows)
        )),
    )
    return 0 if rep.verdict != "inconsistent" else 2


def cmd_dt_check(cfg: ExperimentConfig) -> int:
    weight = cfg.require_weight()
    n_max = cfg.horizon
    m = discretize_weight(weight, _opt(cfg, "grid", grid_size_for_depth(n_max)), cfg.precision)
    coeffs = stieltjes_recurrence(m, n_max, cfg.precision)
    recovery = chain_from_recurrence(coeffs, label=weight.label + "-chain")
    if not recovery.ok:
        _diagnostic("error", "not-a-random-walk-measure", str(recovery.fail_reason))
        return 3
    exps = edge_exponents(weight, cfg.precision)
    e = support_edges(recovery.chain, min(cfg.truncation, n_max), digits=min(cfg.precision, 15))
    result = edge_scaled_christoffel(recovery.chain, exps, e.eta_hat, n_max, cfg.precision)
    atomic_write(
        _path(cfg, "dt_scaled.csv"),
        csv_text(["n", "scaled_top", "scaled_bottom"], (
            (int(n), t, b)
            for n, t, b in zip(result.ns, result.scaled_top, result.scaled_bottom)
        )),
    )
    atomic_write(_path(cfg, "dt_constants.txt"), keyvalue_text([
        ("limit_top", result.limit_top.value),
        ("limit_bottom", result.limit_bottom.value),
        ("printed_constant_top", result.printed_constant_top),
        ("printed_constant_bottom", result.printed_constant_bottom),
        ("calibration_factor", result.calibration_factor),
        ("note", "printed constant and calibration factor are both reported; "
                 "neither is asserted as ground truth"),
    ]))
    return 0


def cmd_absorb(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    j_max = _opt(cfg, "j_max", 8)
    res = absorption_probabilities(chain, j_max, cfg.horizon, cfg.precision)
    atomic_write(
        _path(cfg, "absorption.csv"),
        csv_text(["j", "tau"], ((j, t) for j, t in enumerate(res.tau))),
    )
    atomic_write(_path(cfg, "absorption.txt"), keyvalue_text([
        ("q_infinity", res.q_infinity), ("route", res.route),
    ]))
    return 0


def cmd_mc(cfg: ExperimentConfig) -> int:
    chain = cfg.require_chain()
    samples = _opt(cfg, "samples", 10**5)
    steps = _opt(cfg, "steps", 4)
    rows = []
    for i, j in ((0, 0), (0, 1), (1, 1)):
        for n in range(1, steps + 1):
            tq = transition_probability(
                chain, i, j, n, digits=min(cfg.precision, 15),
                mc_samples=samples, seed=cfg.seed + 17 * n + i + 3 * j,
            )
            est, se = tq.value_mc
            rows.append((i, j, n, tq.value_spectral, tq.value_matrix, est, se))
    atomic_write(
        _path(cfg, "mc.csv"),
        csv_text(["i", "j", "n", "spectral", "matrix", "mc_est", "mc_se"], rows),
    )
    return 0


HANDLERS = {
    "chain-info": cmd_chain_info,
    "polys": cmd_polys,
    "edges": cmd_edges,
    "measure": cmd_measure,
    "cn": cmd_cn,
    "christoffel": cmd_christoffel,
    "normalize": cmd_normalize,
    "recover": cmd_recover,
    "srlp": cmd_srlp,
    "conjecture": cmd_conjecture,
    "dt-check": cmd_dt_check,
    "absorb": cmd_absorb,
    "mc": cmd_mc,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rwlab",
        description="birth-death chain / orthogonal polynomial laboratory",
    )
    parser.add_argument("subcommand", choices=sorted(HANDLERS))
    parser.add_argument("--config", help="structured config file")
    parser.add_argument("--precision", type=int, help="working decimal digits")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--truncation", type=int, help="quadrature / operator size")
    parser.add_argument("--horizon", type=int, help="maximal sequence index")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        return HANDLERS[args.subcommand](cfg)
    except InputError as exc:
        _diagnostic("error", "input", str(exc))
        return 3
    except RwlabError as exc:
        _diagnostic("error", type(exc).__name__, str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
