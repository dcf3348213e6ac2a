"""Command-line front end.

Exit codes: 0 success, 2 usage or validation error, 3 a bound was violated
(the theory check failed, as opposed to a bad invocation).
"""
import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import bounds as bd
from . import chain_gen as gen
from . import fileformats as ff
from . import lumpability as lump
from . import markov_core as mc
from . import simulator as sim

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIOLATION = 3
BOUND_TOL = 1e-9

# the two-block experiment on 100 states
EXP_N = 100
EXP_A_SIZE = 50
EXP_P0 = EXP_Q0 = 0.25
EXP_EPSILON = 0.1
EXP_HORIZON = 200
MC_CHECK_FROM = 15
TIME_TO_BOUND_GATE = 15
MIN_WALKERS_FOR_MC_CHECK = 1000


class UsageError(Exception):
    pass


def _matrix_lines(M, indent="    "):
    return [indent + "  ".join(f"{v:.6f}" for v in row) for row in np.asarray(M)]


def analysis_dict(chain):
    rep = lump.analyze(chain.P, chain.partition)
    params = bd.BoundParams(rep.rho_L, rep.epsilon, rep.m)
    return {
        "n": chain.n,
        "m": rep.m,
        "epsilon": rep.epsilon,
        "L": rep.L.entries.tolist(),
        "U": rep.U.entries.tolist(),
        "rho_L": rep.rho_L,
        "rho_U": rep.rho_U,
        "contraction": params.contraction,
        "bound_valid": params.valid,
        "exactly_lumpable": rep.exact,
        "limit_l1_sum": params.limit if params.valid else None,
    }


def cmd_analyze(args):
    chain = ff.load_chain(args.input)
    d = analysis_dict(chain)
    if args.json:
        print(json.dumps(d, indent=1))
        return EXIT_OK
    print(f"states n = {d['n']}, blocks m = {d['m']}")
    print(f"tight epsilon = {d['epsilon']!r}")
    print("verdict: " + ("exactly lumpable" if d["exactly_lumpable"] else "not exactly lumpable"))
    print("lower matrix L:")
    print("\n".join(_matrix_lines(d["L"])))
    print("upper matrix U:")
    print("\n".join(_matrix_lines(d["U"])))
    print(f"rho(L) = {d['rho_L']!r}")
    print(f"rho(U) = {d['rho_U']!r}")
    print(f"rho(L) + epsilon*m/2 = {d['contraction']!r} ({'< 1, bound applies' if d['bound_valid'] else '>= 1, bound does not apply'})")
    if d["bound_valid"]:
        print(f"limit of the aggregate bound (L1 sum over blocks) = {d['limit_l1_sum']!r}")
    return EXIT_OK


def build_chain(args):
    kind = args.kind
    if kind == "two-block":
        if args.a_size is None:
            args.a_size = args.n // 2
        try:
            spec = gen.TwoBlockSpec(args.n, args.a_size, args.p0, args.q0, args.epsilon, args.seed)
        except (bd.DomainError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        g = gen.generate_two_block_chain(spec)
        meta = {"generator": spec.to_dict(), "seed": args.seed,
                "realized_spread": g.realized_spread, "labels": ["A", "not A"]}
        return ff.ChainFile(g.P, g.Q, meta)

    if not 1 <= args.m <= args.n:
        raise UsageError(f"--m must lie in 1..n, got {args.m}")
    if kind == "perturbed" and not 0 <= args.epsilon <= 1:
        raise UsageError(f"--epsilon must lie in [0, 1] for perturbed chains, got {args.epsilon}")
    seq_partition, seq_chain, seq_perturb = np.random.SeedSequence(args.seed).spawn(3)
    rng = gen.make_rng(seq_partition)
    Q = gen.random_partition(args.n, args.m, rng)
    target = gen.random_stochastic_matrix(args.m, rng)
    P = gen.generate_exactly_lumpable(args.n, Q, target, seq_chain)
    meta = {"generator": {"kind": kind, "n": args.n, "m": args.m, "seed": args.seed},
            "seed": args.seed}
    if kind == "perturbed":
        P = gen.perturb_lumpable(P, Q, args.epsilon, seq_perturb)
        meta["generator"]["epsilon"] = args.epsilon
    return ff.ChainFile(P, Q, meta)


def cmd_generate(args):
    chain = build_chain(args)
    text = ff.dumps_chain(chain)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    return EXIT_OK


def parse_pi0(spec, n):
    if spec == "uniform":
        return np.full(n, 1.0 / n)
    if spec.startswith("point:"):
        x = int(spec.split(":", 1)[1])
        if not 0 <= x < n:
            raise UsageError(f"--pi0 state {x} out of range")
        return sim.point_mass(n, x)
    raise UsageError(f"--pi0 must be 'uniform' or 'point:<state>', got {spec!r}")


def select_bound(kind, chain, target, horizon):
    """Bound curve matched to the chain, or None for kind 'none'."""
    if kind == "none":
        return None
    rep = lump.analyze(chain.P, chain.partition)
    if kind == "thm2":
        params = bd.BoundParams(rep.rho_L, rep.epsilon, rep.m)
        if not params.valid:
            raise UsageError(f"aggregate bound needs rho(L) + epsilon*m/2 < 1, got {params.contraction!r}")
        return bd.quasi_lumpable_curve(params, horizon)
    if kind == "cor1":
        if not rep.exact:
            raise UsageError(f"cor1 bound needs an exactly lumpable chain (epsilon = {rep.epsilon!r})")
        rho = mc.ergodic_coefficient(lump.lumped_matrix(chain.P, chain.partition).entries)
        return bd.lumped_curve(min(rho, 1.0), horizon)
    if kind == "two-block":
        if rep.m != 2:
            raise UsageError(f"two-block bound needs m = 2, chain has m = {rep.m}")
        other = 1 - target
        p0 = float(rep.L.entries[target, other])
        q0 = float(rep.L.entries[other, target])
        try:
            return bd.two_block_curve(p0, q0, rep.epsilon, horizon)
        except bd.DomainError as exc:
            raise UsageError(f"two-block bound not applicable: {exc}") from exc
    raise UsageError(f"unknown bound {kind!r}")


def cmd_simulate(args):
    chain = ff.load_chain(args.input)
    mode = "monte_carlo" if args.mode == "mc" else "exact"
    try:
        cfg = sim.SimulationConfig(
            chain.P, chain.partition, target_block=args.target_block,
            pi0=parse_pi0(args.pi0, chain.n), horizon=args.horizon, mode=mode,
            walkers=args.walkers, seed=args.seed, jobs=args.jobs,
        )
    except (ValueError, IndexError) as exc:
        raise UsageError(str(exc)) from exc
    curve = select_bound(args.bound, chain, args.target_block, args.horizon)
    pi = mc.stationary_distribution(chain.P)
    if mode == "exact":
        rows = sim.exact_trace(cfg, curve, pi)
        slack = BOUND_TOL
    else:
        rows = sim.mc_trace(cfg, curve, pi)
        # sampling noise: 3 standard errors per block, in the curve's norm
        per_block = 3 * sim.standard_error_bound(args.walkers)
        scale = chain.partition.m if curve is None or curve.norm == "l1_sum" else chain.partition.m / 2
        slack = BOUND_TOL + per_block * scale
    ff.write_trace(args.output, rows)
    bad = sim.bound_violations(rows, slack)
    if bad:
        for r in bad[:10]:
            print(f"bound violated at t={r.t}: distance {r.distance!r} > bound {r.bound!r}",
                  file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def reproduce_seed(seed, walkers, horizon, outdir):
    spec = gen.TwoBlockSpec(EXP_N, EXP_A_SIZE, EXP_P0, EXP_Q0, EXP_EPSILON, seed)
    g = gen.generate_two_block_chain(spec)
    pi = mc.stationary_distribution(g.P)
    curve = bd.two_block_curve(EXP_P0, EXP_Q0, EXP_EPSILON, horizon)
    asym = bd.asymptotic_bound(EXP_P0, EXP_Q0, EXP_EPSILON)

    exact_cfg = sim.SimulationConfig(g.P, g.Q, 0, horizon=horizon)
    exact = sim.exact_trace(exact_cfg, curve, pi)
    mc_cfg = sim.SimulationConfig(g.P, g.Q, 0, horizon=horizon, mode="monte_carlo",
                                  walkers=walkers, seed=seed)
    mcrows = sim.mc_trace(mc_cfg, curve, pi)
    se = float(sim.standard_error_bound(walkers))

    check_a = all(r.deviation <= r.bound + BOUND_TOL for r in exact[1:])
    mc_checked = walkers >= MIN_WALKERS_FOR_MC_CHECK
    mc_excess = max(r.deviation for r in mcrows[MC_CHECK_FROM:]) if horizon >= MC_CHECK_FROM else 0.0
    check_b = (mc_excess <= asym + 3 * se) if mc_checked else None
    ttb = sim.time_to_bound(exact, asym)
    check_c = ttb is not None and ttb <= TIME_TO_BOUND_GATE

    tag = f"seed_{seed:04d}"
    ff.save_chain(os.path.join(outdir, f"{tag}_chain.json"),
                  ff.ChainFile(g.P, g.Q, {"generator": spec.to_dict(), "seed": seed}))
    ff.write_trace(os.path.join(outdir, f"{tag}_exact.csv"), exact)
    ff.write_trace(os.path.join(outdir, f"{tag}_mc.csv"), mcrows)
    pi_a = float(pi[list(g.Q.blocks[0])].sum())
    header = ["t", "mc_frequency", "exact_mass", "stationary_mass", "mc_deviation",
              "exact_deviation", "two_block_bound", "asymptote"]
    for name, last in (("figure1", horizon), ("figure2", min(horizon, 30))):
        with open(os.path.join(outdir, f"{tag}_{name}.csv"), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for e, m in zip(exact[:last + 1], mcrows[:last + 1]):
                w.writerow([e.t, repr(float(m.mass[0])), repr(float(e.mass[0])), repr(pi_a),
                            repr(m.deviation), repr(e.deviation), repr(e.bound), repr(asym)])
    rep = lump.analyze(g.P, g.Q)
    return {
        "seed": seed,
        "stationary_mass_A": pi_a,
        "tight_epsilon": rep.epsilon,
        "rho_L": rep.rho_L,
        "time_to_bound_exact": ttb,
        "time_to_bound_mc": sim.time_to_bound(mcrows, asym + 3 * se),
        "max_mc_deviation_after_15": mc_excess,
        "exact_within_bound": check_a,
        "mc_within_asymptote": check_b,
        "time_to_bound_ok": check_c,
        "passed": check_a and check_c and check_b is not False,
    }


def cmd_reproduce(args):
    os.makedirs(args.output, exist_ok=True)
    seeds = list(range(args.base_seed, args.base_seed + args.seeds))
    if args.walkers < MIN_WALKERS_FOR_MC_CHECK:
        print(f"caveat: {args.walkers} walkers give a standard error up to "
              f"{sim.standard_error_bound(args.walkers):.3f}; the Monte Carlo check is not asserted")
    run = lambda s: reproduce_seed(s, args.walkers, args.horizon, args.output)  # noqa: E731
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]

    keys = list(results[0])
    with open(os.path.join(args.output, "summary.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys)
        w.writeheader()
        w.writerows(results)
    with open(os.path.join(args.output, "summary.json"), "w") as fh:
        json.dump({"asymptote": bd.asymptotic_bound(EXP_P0, EXP_Q0, EXP_EPSILON),
                   "walkers": args.walkers, "horizon": args.horizon, "seeds": results}, fh, indent=1)

    for r in results:
        status = "PASS" if r["passed"] else "FAIL"
        mc_note = "n/a" if r["mc_within_asymptote"] is None else r["mc_within_asymptote"]
        print(f"seed {r['seed']:4d} {status}  eps={r['tight_epsilon']:.4f}  "
              f"rho(L)={r['rho_L']:.4f}  steps_to_0.2={r['time_to_bound_exact']}  "
              f"exact<=bound={r['exact_within_bound']}  mc<=0.2+3se={mc_note}")
    failed = [r["seed"] for r in results if not r["passed"]]
    print(f"{len(results) - len(failed)}/{len(results)} seeds passed")
    if failed:
        print(f"failed seeds: {failed}", file=sys.stderr)
        return EXIT_VIOLATION
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="quasilump", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="report epsilon, L, U and bound parameters of a chain file")
    a.add_argument("input")
    a.add_argument("--json", action="store_true", help="emit machine-readable JSON")
    a.set_defaults(func=cmd_analyze)

    g = sub.add_parser("generate", help="write a seeded test chain")
    g.add_argument("--kind", choices=["two-block", "lumpable", "perturbed"], default="two-block")
    g.add_argument("--n", type=int, default=EXP_N)
    g.add_argument("--a-size", type=int, default=None)
    g.add_argument("--m", type=int, default=2, help="block count for lumpable/perturbed")
    g.add_argument("--p0", type=float, default=EXP_P0)
    g.add_argument("--q0", type=float, default=EXP_Q0)
    g.add_argument("--epsilon", type=float, default=EXP_EPSILON)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", default="-")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("simulate", help="write a deviation-vs-bound trace CSV")
    s.add_argument("input")
    s.add_argument("--mode", choices=["exact", "mc"], default="exact")
    s.add_argument("--horizon", type=int, default=EXP_HORIZON)
    s.add_argument("--walkers", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target-block", type=int, default=0)
    s.add_argument("--pi0", default="point:0", help="'uniform' or 'point:<state>'")
    s.add_argument("--bound", choices=["thm2", "two-block", "cor1", "none"], default="none")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_simulate)

    r = sub.add_parser("reproduce", help="run the 100-state two-block experiment over several seeds")
    r.add_argument("--seeds", type=int, default=20)
    r.add_argument("--base-seed", type=int, default=0)
    r.add_argument("--walkers", type=int, default=100_000)
    r.add_argument("--horizon", type=int, default=EXP_HORIZON)
    r.add_argument("--jobs", type=int, default=1)
    r.add_argument("-o", "--output", default="reproduce_out")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ff.ChainFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
