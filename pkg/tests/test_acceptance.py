"""Acceptance criteria, one test per criterion (the conftest prints a
pass/fail line for each)."""

import random
import time
from dataclasses import dataclass, field
from importlib import resources

import pytest

from crrcheck.bench import (CSV_HEADER, ExperimentConfig, bmc, random_aig, read_manifest,
                            run_experiment)
from crrcheck.checker import CheckConfig, mc_crr
from crrcheck.cnf import CnfFormula, VariablePool, Role, make_clause, tseitin_encode
from crrcheck.model import CounterSpec, Unrolling, counter_aig, from_aig, replay
from crrcheck.pqe import (PqeProblem, brute_force_pqe, expand_clause, is_noise_free_clause,
                          qe, take_out)
from oracles import (Events, Explicit, noise_free_chain, project, random_circuit,
                     random_cnf, table)


@dataclass
class Runs:
    systems: dict = field(default_factory=dict)    # name -> Explicit
    grid: list = field(default_factory=list)       # (spec, n, crr, bmc)
    random: list = field(default_factory=list)     # (name, n, crr, bmc)
    events: Events = field(default_factory=Events)
    grid_secs: float = 0.0


def _counter_specs():
    for k in (2, 3):
        for seed in (None, 7):
            for d in range(1, 2 ** k - 1):
                yield CounterSpec(k, d, seed)


@pytest.fixture(scope="module")
def runs() -> Runs:
    r = Runs()
    cfg = CheckConfig(recorder=r.events)
    t0 = time.perf_counter()
    for spec in _counter_specs():
        aig = counter_aig(spec)
        ts = from_aig(aig, spec.name)
        r.systems[spec.name] = Explicit(aig, ts)
        for n in range(1, 9):
            r.grid.append((spec, n, mc_crr(ts, n, cfg), bmc(ts, n)))
    r.grid_secs = time.perf_counter() - t0
    for seed in range(50):
        aig = random_aig(seed)
        ts = from_aig(aig, f"random_{seed}")
        r.systems[ts.name] = Explicit(aig, ts)
        for n in range(1, 9):
            r.random.append((ts.name, n, mc_crr(ts, n, cfg), bmc(ts, n)))
    return r


def _root_states(root):
    return root.initial_states()


# --------------------------------------------------------------------------


@pytest.mark.criterion(1, "counter grid: counterexample iff n >= d, length exactly d, < 60 s")
def test_counter_grid(runs):
    assert len(runs.grid) == 2 * (2 + 6) * 8
    wrong = []
    for spec, n, v, _ in runs.grid:
        if v.fails != (n >= spec.d) or (v.fails and v.trace.length != spec.d):
            wrong.append((spec.name, n, v.kind, v.trace and v.trace.length))
    assert not wrong
    assert runs.grid_secs < 60


@pytest.mark.criterion(2, "CRR and BMC agree on the grid and 50 random systems; traces replay")
def test_crr_bmc_agreement(runs):
    rows = [(runs.systems[s.name], n, v, w) for s, n, v, w in runs.grid]
    rows += [(runs.systems[name], n, v, w) for name, n, v, w in runs.random]
    assert len(rows) == 128 + 400
    for ex, n, v, w in rows:
        assert v.fails == w.fails, (ex.ts.name, n)
        assert v.fails == (ex.shortest_cex() <= n), (ex.ts.name, n)
        for verdict in (v, w):
            if verdict.fails:
                assert replay(ex.ts, verdict.trace) == []
                # the same trace under direct AIG simulation
                tr = verdict.trace
                assert tr.states[0] in ex.init
                for j in range(tr.length):
                    assert ex.sim.step(tr.states[j], tr.inputs[j]) == tr.states[j + 1]
                    assert tr.states[j] not in ex.bad
                assert tr.states[-1] in ex.bad


def _pqe_instance(seed: int):
    rng = random.Random(seed)
    pool = VariablePool()
    nf, nw = rng.randint(1, 8), rng.randint(1, 8)
    free = [pool.new(Role.STATE) for _ in range(nf)]
    W = [pool.new(Role.INTERNAL) for _ in range(nw)]
    allv = free + W
    G = CnfFormula(pool, random_cnf(rng, allv, rng.randint(1, 2 * len(allv)), (1, 3)))
    F = CnfFormula(pool, random_cnf(rng, allv, rng.randint(0, 3), (1, 3)))
    return PqeProblem(F, G, W, free), free, W


@pytest.fixture(scope="module")
def pqe_instances():
    return [_pqe_instance(seed) for seed in range(200)]


@pytest.mark.criterion(3, "take_out contract and agreement with brute force on range points")
def test_pqe_contract(pqe_instances):
    t0 = time.perf_counter()
    for p, free, W in pqe_instances:
        order = free + W
        exG = project(table(p.G, order), len(free), len(W))
        exFG = project(table(list(p.G) + list(p.F), order), len(free), len(W))
        H = take_out(p).H
        hz = table(H, free)
        assert ((hz & exG) == exFG).all()
        bz = table(brute_force_pqe(p).H, free)
        assert (hz[exG] == bz[exG]).all()
        assert bz[~exG].all()
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(4, "qe equals projection by truth table")
def test_qe_contract(pqe_instances):
    for p, free, W in pqe_instances:
        exG = project(table(p.G, free + W), len(free), len(W))
        R = qe(p.G, W, free=free)
        assert R.variables() <= set(free)
        assert (table(R, free) == exG).all()


@pytest.mark.parametrize("seed", [None, 7])
@pytest.mark.criterion(5, "k=3 counter: noise-free H_i excludes exactly the state of value i")
def test_counter_range_shape(seed):
    spec = CounterSpec(3, 7, seed)
    aig = counter_aig(spec)
    ts = from_aig(aig)
    ex = Explicit(aig, ts)
    (init,) = ts.initial_states()
    C = make_clause([-v if b else v for v, b in zip(ts.latches, init)] + [-ts.inputs[0]])
    if seed is None:
        s1, s2, s3 = ts.latches
        assert C == make_clause([s1, s2, s3, -ts.inputs[0]])
    u = Unrolling(ts)
    H = noise_free_chain(ts, C, 2 ** 3 - 2, u=u)
    E = ex.excluded([init], [], C, 2 ** 3 - 2)
    for i in range(1, 2 ** 3 - 1):
        falsified = ex.falsified_states(H[i - 1], u.state_vars(i))
        assert falsified == E[i - 1] == {spec.state_of(i)}


def _expansion_instance(seed: int):
    rng = random.Random(seed)
    pool = VariablePool()
    circ, ins, internals, outs = random_circuit(rng, pool, rng.randint(2, 5), rng.randint(2, 6),
                                                rng.randint(1, 4))
    T = tseitin_encode(circ, pool)
    vs = rng.sample(ins, rng.randint(1, len(ins)))
    C = make_clause(v if rng.random() < 0.5 else -v for v in vs)
    return pool, T, C, ins + internals, outs


@pytest.mark.criterion(6, "clause expansion keeps the brute-force PQE solution")
def test_clause_expansion_equivalence():
    grew = 0
    for seed in range(100):
        pool, T, C, W, outs = _expansion_instance(seed)
        C2 = expand_clause(C, T)
        assert set(C) <= set(C2)
        grew += len(C2) > len(C)
        H1 = brute_force_pqe(PqeProblem(CnfFormula(pool, [C]), T, W, outs)).H
        H2 = brute_force_pqe(PqeProblem(CnfFormula(pool, [C2]), T, W, outs)).H
        assert (table(H1, outs) == table(H2, outs)).all()
        order = sorted(T.variables() | {abs(l) for l in C2})
        tT = table(T, order)
        for lit in set(C2) - set(C):
            side = [l for l in C2 if l != lit] + [-lit]
            # T implies the side clause: no model of T falsifies it
            assert not (tT & ~table([side], order)).any()
    assert grew > 0


@pytest.mark.criterion(7, "brute-force clauses certified noise-free; a noisy take_out clause rejected")
def test_noise_certification(pqe_instances):
    for p, free, W in pqe_instances[:100]:
        for c in brute_force_pqe(p).H:
            assert is_noise_free_clause(c, p.G, p.W, p.free)
    rejected = None
    for seed, (p, free, W) in enumerate(pqe_instances):
        for c in take_out(p).H:
            if not is_noise_free_clause(c, p.G, p.W, p.free):
                rejected = (seed, c, p, free, W)
                break
        if rejected:
            break
    assert rejected is not None
    _, c, p, free, W = rejected
    # confirm by truth table: c falsifies some point outside the range of G
    exG = project(table(p.G, free + W), len(free), len(W))
    assert (~table([c], free) & ~exG).any()


def _containment_events():
    ev = Events()
    cfg = CheckConfig(recorder=ev)
    systems = {}
    for seed in (None, 7):
        spec = CounterSpec(3, 7, seed)
        aig = counter_aig(spec)
        ts = from_aig(aig, spec.name)
        systems[ts.name] = Explicit(aig, ts)
        mc_crr(ts, 5, cfg)
    for seed in range(100, 125):
        aig = random_aig(seed)
        ts = from_aig(aig, f"random_{seed}")
        systems[ts.name] = Explicit(aig, ts)
        mc_crr(ts, 5, cfg)
    return ev, systems


@pytest.mark.criterion(8, "engine H*_i falsifies every state the noise-free H_i falsifies")
def test_noisy_contains_noise_free():
    ev, systems = _containment_events()
    assert ev.ranges
    frames = set()
    for root, G, C, j, Hb in ev.ranges:
        ex = systems[root.name]
        E = ex.excluded(_root_states(root), G, C, j)[j - 1]
        assert E <= ex.falsified_states(Hb, ex.ts.latches)
        frames.add(j)
    assert frames == {1, 2, 3, 4, 5}


@pytest.mark.criterion(9, "every nil from comp_rr_form satisfies the equivalence condition")
def test_nil_certificates(runs):
    assert runs.events.nils
    for root, G, C, bound, _ in runs.events.nils:
        ex = runs.systems[root.name]
        assert ex.collapse_preserves_bad_traces(_root_states(root), G, C, bound), (root.name, C, bound)


@pytest.mark.criterion(10, "every learned unreachability clause blocks only unreachable states")
def test_unreachability_clauses(runs):
    assert runs.events.unreach
    for root, j, clause in runs.events.unreach:
        ex = runs.systems[root.name]
        blocked = ex.falsified_states([clause], ex.ts.latches)
        assert not blocked & ex.reach_exact(_root_states(root), j), (root.name, j, clause)


@pytest.mark.criterion(11, "bundled suite: table-shaped CSV, PQE solves more rows than QE")
def test_harness_shape():
    manifest = resources.files("crrcheck") / "data" / "manifest.txt"
    entries = read_manifest(manifest)
    assert len(entries) >= 20
    rows, summary = run_experiment(entries, ExperimentConfig())
    assert len(rows) == sum(len(s) for _, s in entries)
    for r in rows:
        assert len(r.csv_row()) == len(CSV_HEADER)
        assert r.pqe_s != "error" and r.qe_s != "error"
    assert CSV_HEADER == ["model", "x_inputs", "latches", "gates", "pqe_s", "qe_s",
                          "h_empty", "h_implied", "log2_range_lb"]
    solved = summary["solved"]
    print(f"\nsolved counts: {solved}")
    assert solved["pqe_expanded"] > solved["qe_full_range"]
