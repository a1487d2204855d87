"""Command-line experiment runner.

Every experiment is a subcommand (``qextrap hiding ...``); ``qextrap run
--experiment NAME ...`` is an equivalent spelling. Reports go to stdout or
``--out`` as JSON or CSV. The exit status is 0 when every check passes, 1
when a check fails and 2 on usage or input errors.

Examples::

    qextrap hiding --family mub_prime:2 --pair 0,1
    qextrap haar-limit --dim 64 --trials 2000 --seed 1
    qextrap commit-hiding --instance bb84 --family clifford:1 --format csv
    qextrap commit-reduction --instance excited --family mub_prime:2:bases=2 --trials 200
"""

from __future__ import annotations

import argparse
import math
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from . import bases, commit, extrap, hiding, mub
from .instances import InstanceError, load_instance
from .qcore import haar_state, random_density
from .report import Report, check_close, check_ge, check_le, emit
from .rng import stream

INV_SQRT2 = 1 / math.sqrt(2)


@dataclass
class ExperimentConfig:
    experiment: str
    family: str | None = None
    instance: str | None = None
    n: int | None = None
    dim: int | None = None
    dims: str | None = None
    trials: int | None = None
    seed: int = 0
    mode: str = "auto"
    tol: float | None = None
    format: str = "json"
    out: str | None = None
    workers: int = 1
    lam: int = 2
    td: float = 0.01
    pair: str = "0,1"
    scale: float = 0.3

    def params(self) -> dict:
        skip = {"format", "out", "workers"}
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in skip}


def _map_trials(fn: Callable, cfg: ExperimentConfig, count: int, tag: int) -> list:
    """``fn(i, stream_i)`` for each trial; trial streams depend only on (seed, tag, i)."""
    streams = [stream(cfg.seed, tag, i) for i in range(count)]
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            return list(ex.map(fn, range(count), streams))
    return [fn(i, s) for i, s in enumerate(streams)]


def _basis_pair(spec: str, dim: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = (int(x) for x in spec.split(","))
    if not (0 <= i < dim and 0 <= j < dim):
        raise ValueError(f"basis indices {spec} outside dimension {dim}")
    e = np.eye(dim, dtype=complex)
    return np.outer(e[i], e[i]), np.outer(e[j], e[j])


def _gen(cfg: ExperimentConfig, default: str) -> commit.GenInstance:
    inst = load_instance(cfg.instance or default, m=cfg.n or 1)
    if not isinstance(inst, commit.GenInstance):
        raise InstanceError("this experiment needs a gen instance")
    return inst


def _default_family(m: int) -> str:
    return "mub_prime:2" if m == 1 else f"mub_qubits:{m}"


def _dims(cfg: ExperimentConfig) -> tuple[int, int] | None:
    if not cfg.dims:
        return None
    a, b = (int(x) for x in cfg.dims.replace("x", ",").split(","))
    return a, b


# --------------------------------------------------------------------------
# experiments
# --------------------------------------------------------------------------

def exp_hiding(cfg: ExperimentConfig) -> Report:
    fam = bases.parse_family(cfg.family or "mub_prime:2", cfg.seed)
    mode = {"mc": "monteCarlo"}.get(cfg.mode, cfg.mode)
    trials = cfg.trials or 2000
    if cfg.pair not in ("random", "mixed"):
        r0, r1 = _basis_pair(cfg.pair, fam.dim)
        rep = hiding.expected_pinch_distance(fam, r0, r1, mode=mode, trials=trials,
                                             rng=stream(cfg.seed, 1), workers=cfg.workers)
        results = {"expectedTD": rep.expected_td, "bound": rep.bound, "tdInput": rep.td_input,
                   "mode": rep.mode, "trials": rep.trials, "stderr": rep.stderr}
        rows = [{"key": fam.key_label(k), "td": t} for k, t in zip(rep.keys, rep.per_key_tds)]
        checks = [check_le("monotone", rep.expected_td, rep.td_input, 1e-9)]
        if rep.bound is not None:
            slack = 1e-9 if rep.mode == "exact" else 3 * rep.stderr + 1e-9
            checks.append(check_le("bound", rep.expected_td, rep.bound, slack))
        return Report("hiding", cfg.params(), results, checks, cfg.seed, rows=rows)

    pairs = cfg.trials or 200

    def one(i, rng):
        if cfg.pair == "random":
            a, b = haar_state(fam.dim, rng).density().mat, haar_state(fam.dim, rng).density().mat
        else:
            a, b = random_density(fam.dim, rng).mat, random_density(fam.dim, rng).mat
        return hiding.expected_pinch_distance(fam, a, b, mode=mode, trials=2000, rng=rng, keep_keys=False)

    reps = _map_trials(one, cfg, pairs, 2)
    rows = [{"tdInput": r.td_input, "expectedTD": r.expected_td, "bound": r.bound, "ratio": r.ratio}
            for r in reps]
    ratios = [r.ratio for r in reps if r.ratio is not None]
    results = {"pairs": pairs, "worstRatio": max(ratios) if ratios else None, "mode": reps[0].mode}
    checks = [check_le("monotone", max(r.expected_td - r.td_input for r in reps), 0.0, 1e-9)]
    if reps[0].bound is not None:
        excess = max(r.expected_td - r.bound - (0 if r.mode == "exact" else 3 * r.stderr) for r in reps)
        results["maxExcessOverBound"] = excess
        results["ratioBound"] = hiding.lemma_bound(fam, 1.0)
        checks.append(check_le("bound", excess, 0.0, 1e-9))
    return Report("hiding", cfg.params(), results, checks, cfg.seed, rows=rows)


def exp_mub_verify(cfg: ExperimentConfig) -> Report:
    if cfg.n is not None:
        m = mub.qubit_mub(cfg.n)
    else:
        m = mub.prime_mub(cfg.dim or 2)
    tol = cfg.tol or 1e-9
    dev, orth = mub.max_deviation(m), mub.orthonormality_error(m)
    results = {"dim": m.dim, "bases": len(m.bases), "maxDeviation": dev, "orthonormalityError": orth}
    checks = [check_le("unbiased", dev, tol), check_le("orthonormal", orth, tol),
              check_close("maximal", len(m.bases), m.dim + 1, 0)]
    return Report("mub-verify", cfg.params(), results, checks, cfg.seed)


def exp_design2(cfg: ExperimentConfig) -> Report:
    fam = bases.parse_family(cfg.family or "clifford:1", cfg.seed)
    mode = "sampled" if cfg.mode in ("mc", "monteCarlo", "sampled") else "exact"
    res = bases.verify_2design(fam, mode=mode, count=cfg.trials or 10_000, rng=stream(cfg.seed, 3))
    tol = cfg.tol or 1e-9
    checks = []
    for key in ("firstMoment", "fourthMoment", "crossMoment"):
        part = res[key]
        if mode == "exact":
            checks.append(check_le(key, part["maxDeviation"], tol))
        else:
            z = max((abs(v - part["target"]) - 3 * s for v, s in zip(part["values"], part["stderr"])),
                    default=0.0)
            checks.append(check_le(key, z, tol))
    return Report("design2-verify", cfg.params(), res, checks, cfg.seed)


def exp_ivanovic(cfg: ExperimentConfig) -> Report:
    n = cfg.dim or 2
    if mub.is_prime(n):
        m = mub.prime_mub(n)
    elif n & (n - 1) == 0:
        m = mub.qubit_mub(int(math.log2(n)))
    else:
        raise ValueError(f"no maximal MUB set available for N={n}")

    def one(i, rng):
        r = hiding.ivanovic_decompose(random_density(n, rng), m)
        return r.residual, r.max_overlap

    out = _map_trials(one, cfg, cfg.trials or 100, 4)
    res = {"dim": n, "trials": len(out), "maxResidual": max(o[0] for o in out),
           "maxOverlap": max(o[1] for o in out)}
    rows = [{"residual": a, "overlap": b} for a, b in out]
    checks = [check_le("residual", res["maxResidual"], 1e-8), check_le("orthogonality", res["maxOverlap"], 1e-9)]
    return Report("ivanovic", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_counterexample(cfg: ExperimentConfig) -> Report:
    which = (cfg.family or "binary_phase").split(":")[0]
    n = cfg.n or 2
    mode = {"mc": "monteCarlo", "auto": "exact"}.get(cfg.mode, cfg.mode)
    rep = hiding.counterexample_run(which, n, mode=mode, trials=cfg.trials or 2000, rng=stream(cfg.seed, 5))
    expected = 1 - (2 / 3) ** n if which == "per_qubit_pauli" else 1.0
    fam = bases.build_family(which, n, verify=False)
    rows = [{"key": fam.key_label(k), "td": t} for k, t in zip(rep.keys, rep.per_key_tds)]
    res = {"expectedTD": rep.expected_td, "predicted": expected, "mode": rep.mode, "keys": rep.trials,
           "stderr": rep.stderr}
    tol = cfg.tol or (1e-9 if rep.mode == "exact" else 3 * rep.stderr + 1e-9)
    return Report("counterexample", cfg.params(), res, [check_close("value", rep.expected_td, expected, tol)],
                  cfg.seed, rows=rows)


def exp_haar_limit(cfg: ExperimentConfig) -> Report:
    n = cfg.dim or 64
    rep = hiding.haar_limit(n, cfg.trials or 2000, stream(cfg.seed, 6))
    res = {"dim": n, "estimate": rep.expected_td, "stderr": rep.stderr, "trials": rep.trials, "limit": 0.5,
           "designBound": rep.bound}
    checks = [check_close("limit", rep.expected_td, 0.5, cfg.tol or 0.05)]
    return Report("haar-limit", cfg.params(), res, checks, cfg.seed)


def _pair(cfg: ExperimentConfig, default_instance: str, default_family: str | None = None,
          representation: str = "auto") -> commit.CommitmentPair:
    gen = _gen(cfg, default_instance)
    fam = bases.parse_family(cfg.family or default_family or _default_family(gen.msg_qubits), cfg.seed)
    return commit.build_commitment(gen, fam, representation)


def exp_commit_hiding(cfg: ExperimentConfig) -> Report:
    pair = _pair(cfg, "degenerate")
    td = commit.hiding_distance(pair)
    res = {"instance": pair.gen.name, "family": pair.family, "hidingTD": td, "bound": INV_SQRT2,
           "optimalBinding": commit.optimal_binding(pair), "dense": pair.has_dense,
           "layoutSize": pair.layout.total}
    checks = [check_le("hiding", td, INV_SQRT2, 1e-9)]
    if pair.has_dense:
        dtd = commit.hiding_distance(pair, "dense")
        res["hidingTDDense"] = dtd
        checks.append(check_le("representations agree", abs(dtd - td), 1e-8))
    return Report("commit-hiding", cfg.params(), res, checks, cfg.seed)


def _adversaries(pair: commit.CommitmentPair, cfg: ExperimentConfig, count: int, tag: int):
    lay = pair.layout
    fixed = [commit.identity_adversary(lay), commit.swap_adversary(lay)]
    rand = _map_trials(lambda i, rng: commit.random_adversary(lay, rng), cfg, count, tag)
    return fixed + rand


def exp_commit_binding(cfg: ExperimentConfig) -> Report:
    pair = _pair(cfg, "excited", "mub_prime:2:bases=2", "dense")
    opt = commit.optimal_binding(pair)
    advs = _adversaries(pair, cfg, cfg.trials or 50, 7)
    vals = [commit.binding_advantage(pair, a) for a in advs]
    rows = [{"adversary": a.name, "advantage": v} for a, v in zip(advs, vals)]
    res = {"optimalBinding": opt, "maxAdvantage": max(vals), "identityAdvantage": vals[0],
           "swapAdvantage": vals[1], "overlapSquared": abs(np.vdot(pair.com1, pair.com0)) ** 2}
    checks = [check_le("below optimum", max(vals), opt, 1e-9),
              check_close("identity = overlap", vals[0], res["overlapSquared"], 1e-9)]
    return Report("commit-binding", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_commit_reduction(cfg: ExperimentConfig) -> Report:
    pair = _pair(cfg, "excited", "mub_prime:2:bases=2", "dense")
    advs = _adversaries(pair, cfg, cfg.trials or 200, 8)
    out = [commit.binding_reduction(pair, a) for a in advs]
    rows = [{"adversary": a.name, "bindingAdvantage": r.binding_advantage, "reductionSuccess": r.reduction_success,
             "chain5": r.chain[0], "chain6": r.chain[1], "chain7": r.chain[2]} for a, r in zip(advs, out)]
    margin = min(r.reduction_success - r.binding_advantage for r in out)
    res = {"adversaries": len(out), "minMargin": margin,
           "maxAdvantage": max(r.binding_advantage for r in out)}
    checks = [check_ge("dominance", margin, 0.0, 1e-9)]
    return Report("commit-reduction", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_xor(cfg: ExperimentConfig) -> Report:
    pair = _pair(cfg, "excited", "mub_prime:2:bases=2", "structured")
    rep = commit.xor_amplify([pair] * cfg.lam)
    res = {"lambda": cfg.lam, "componentTDs": rep.component_tds, "compositeTD": rep.composite_td,
           "product": rep.product, "method": rep.method}
    return Report("xor", cfg.params(), res, [check_close("product law", rep.composite_td, rep.product, 1e-9)],
                  cfg.seed)


def exp_fixed_basis(cfg: ExperimentConfig) -> Report:
    d = commit.fixed_basis_failure_demo(cfg.n or 1)
    res = {"n": d.n, "overlap": d.overlap, "differenceNorm": d.difference_norm,
           "identityAdvantage": d.identity_advantage, "mubBipartiteTD": d.mub_bipartite_td,
           "contrastHidingTD": d.contrast_hiding_td, "contrastOptimalBinding": d.contrast_optimal_binding}
    checks = [check_close("identical states", d.overlap, 1.0, 1e-9),
              check_close("identity opens", d.identity_advantage, 1.0, 1e-9),
              check_le("contrast hiding", d.contrast_hiding_td, INV_SQRT2, 1e-9),
              check_le("contrast binding", d.contrast_optimal_binding, 1.0 - 1e-9)]
    return Report("fixed-basis-demo", cfg.params(), res, checks, cfg.seed)


def exp_extrapolate(cfg: ExperimentConfig) -> Report:
    fixed = _dims(cfg)
    if cfg.instance:
        task = load_instance(cfg.instance)
        if not isinstance(task, extrap.QExtrapTask):
            raise InstanceError("extrapolate needs a task instance")
    else:
        task = None

    def one(i, rng):
        t = task
        if t is None:
            da, db = fixed or (int(rng.integers(1, 9)), int(rng.integers(1, 9)))
            g = haar_state(da * db, rng).amps.reshape(da, db)
            t = extrap.make_task(g)
        ch = extrap.exact_extrapolator(t)
        return (t.dims, extrap.phase_distance(t.target.amps, extrap.svd_target(t)),
                extrap.extrapolation_fidelity(t, ch), ch.tp_error(), abs(np.linalg.norm(t.target.amps) - 1))

    count = 1 if task is not None else (cfg.trials or 200)
    out = _map_trials(one, cfg, count, 9)
    rows = [{"dA": o[0][0], "dB": o[0][1], "targetGap": o[1], "fidelity": o[2], "tpError": o[3]} for o in out]
    res = {"tasks": count, "maxTargetGap": max(o[1] for o in out), "minFidelity": min(o[2] for o in out),
           "maxTPError": max(o[3] for o in out), "maxNormError": max(o[4] for o in out)}
    checks = [check_le("targets agree", res["maxTargetGap"], 1e-8),
              check_ge("exact extrapolator", res["minFidelity"], 1 - 1e-8),
              check_le("trace preserving", res["maxTPError"], 1e-9),
              check_le("target normalized", res["maxNormError"], 1e-9)]
    return Report("extrapolate", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_robustness(cfg: ExperimentConfig) -> Report:
    fixed = _dims(cfg)

    def one(i, rng):
        dims = fixed or (int(rng.integers(1, 5)), int(rng.integers(1, 5)))
        return extrap.robustness_check(*extrap.perturbed_pair(dims, cfg.scale, rng))

    out = _map_trials(one, cfg, cfg.trials or 500, 10)
    rows = [{"eps": r.eps, "targetOverlap": r.target_overlap, "bound": r.bound, "holevo": r.holevo_fidelity,
             "td": r.trace_distance} for r in out]
    margin = min(r.target_overlap - r.bound for r in out)
    hgap = max(abs(r.target_overlap - r.holevo_fidelity) for r in out)
    res = {"pairs": len(out), "minMargin": margin, "maxEps": max(r.eps for r in out),
           "maxHolevoGap": hgap}
    checks = [check_ge("overlap bound", margin, 0.0, 1e-9), check_le("overlap is holevo fidelity", hgap, 1e-9)]
    return Report("robustness", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_conjugation(cfg: ExperimentConfig) -> Report:
    if cfg.instance and cfg.instance != "random":
        gens = [_gen(cfg, "haar")]
    else:
        m = cfg.n or 1

        def one(i, rng):
            k = int(rng.integers(1, 5))
            t = np.array([haar_state(2**m, rng).amps for _ in range(k)])
            w = rng.random(k) + 0.05
            return commit.GenInstance.classical(w / np.linalg.norm(w), list(range(k)), t, k, name=f"random{i}")

        gens = _map_trials(one, cfg, cfg.trials or 50, 11)
    out = [extrap.conjugation_reduce(g) for g in gens]
    rows = [{"instance": g.name, "qFidelity": r.q_fidelity, "cqSuccess": r.cq_success} for g, r in zip(gens, out)]
    res = {"instances": len(out), "minCqSuccess": min(r.cq_success for r in out),
           "minMargin": min(r.cq_success - r.q_fidelity for r in out)}
    checks = [check_ge("transport", res["minMargin"], 0.0, 1e-8),
              check_ge("perfect solver", res["minCqSuccess"], 1.0, 1e-8)]
    return Report("conjugation", cfg.params(), res, checks, cfg.seed, rows=rows)


def exp_attack(cfg: ExperimentConfig) -> Report:
    if cfg.instance:
        rep = extrap.commitment_attack(_pair(cfg, "excited", None, "dense"))
    else:
        dc, dd = _dims(cfg) or (3, 4)
        c0, c1 = extrap.synthetic_pair(dc, dd, cfg.td, stream(cfg.seed, 12))
        rep = extrap.commitment_attack(c0, c1)
    res = {"hidingTD": rep.hiding_td, "targetOverlap": rep.target_overlap, "overlapFloor": rep.overlap_floor,
           "forwardFidelity": rep.forward_fidelity, "inverseFidelity": rep.inverse_fidelity,
           "achievedAdvantage": rep.achieved_advantage, "chainBound": rep.chain_bound,
           "chainBoundSquared": rep.chain_bound_squared, "vacuous": rep.vacuous}
    checks = [check_ge("chain", rep.achieved_advantage, rep.chain_bound, 1e-6),
              check_ge("overlap floor", rep.target_overlap, rep.overlap_floor, 1e-9)]
    return Report("attack-commitment", cfg.params(), res, checks, cfg.seed)


EXPERIMENTS: dict[str, Callable[[ExperimentConfig], Report]] = {
    "hiding": exp_hiding,
    "mub-verify": exp_mub_verify,
    "design2-verify": exp_design2,
    "ivanovic": exp_ivanovic,
    "counterexample": exp_counterexample,
    "haar-limit": exp_haar_limit,
    "commit-hiding": exp_commit_hiding,
    "commit-binding": exp_commit_binding,
    "commit-reduction": exp_commit_reduction,
    "xor": exp_xor,
    "fixed-basis-demo": exp_fixed_basis,
    "extrapolate": exp_extrapolate,
    "robustness": exp_robustness,
    "conjugation": exp_conjugation,
    "attack-commitment": exp_attack,
}


def run(cfg: ExperimentConfig) -> Report:
    if cfg.experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    t0 = time.perf_counter()
    rep = EXPERIMENTS[cfg.experiment](cfg)
    rep.wall_clock = time.perf_counter() - t0
    return rep


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--family", help="basis family descriptor, e.g. mub_prime:2, clifford:1, mub_prime:2:bases=2")
    p.add_argument("--instance", help="built-in instance name (optionally name:m) or JSON file")
    p.add_argument("--n", type=int, help="number of qubits")
    p.add_argument("--dim", type=int, help="Hilbert-space dimension")
    p.add_argument("--dims", help="bipartite dims as dA,dB")
    p.add_argument("--trials", type=int, help="trials / samples / random instances")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", default="auto", choices=["auto", "exact", "mc", "monteCarlo", "sampled"])
    p.add_argument("--tol", type=float, help="override the check tolerance")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="threads for independent trials")
    p.add_argument("--lam", type=int, default=2, help="number of XOR-composed commitments")
    p.add_argument("--td", type=float, default=0.01, help="hiding TD of the synthetic commitment")
    p.add_argument("--pair", default="0,1", help="state pair: basis indices i,j, 'random' or 'mixed'")
    p.add_argument("--scale", type=float, default=0.3, help="perturbation scale for robustness")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qextrap", description="Measurement-hiding and extrapolation experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        _common(sub.add_parser(name, help=f"run the {name} experiment"))
    runp = sub.add_parser("run", help="run an experiment named by --experiment")
    runp.add_argument("--experiment", required=True, choices=list(EXPERIMENTS))
    _common(runp)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    name = args.experiment if args.command == "run" else args.command
    kw = {f.name: getattr(args, f.name) for f in fields(ExperimentConfig) if f.name != "experiment"}
    return ExperimentConfig(experiment=name, **kw)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = config_from_args(args)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            rep = run(cfg)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        text = emit(rep, cfg.format, cfg.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if cfg.out is None:
        sys.stdout.write(text)
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
