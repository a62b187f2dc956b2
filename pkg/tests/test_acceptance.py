"""The nine acceptance criteria, each at its stated tolerance and time limit."""
import json
import shutil
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from helpers import random_joint, random_mac, random_mac_decision, random_sdrc, random_sdrc_decision, simplex, \
    toy_decision, toy_sdrc
from binfwd import cli
from binfwd.channels import SdRcDecision, assemble_mac, assemble_sdrc, example_channel
from binfwd.fme import atom_facts, equivalent, is_atom, load_preset, parse_ineq, project
from binfwd.optimize import maximize
from binfwd.prob import entropy, mutual_information
from binfwd.rates import (closed_form_example, mac_bounds, ptp_se_causal, ptp_se_causal_bruteforce,
                          sdrc_causal_value, sdrc_objective, sdrc_value)
from binfwd.sim import SchemeRates, covering_experiment, simulate_sdrc

DATA = Path(__file__).resolve().parent.parent / "data"


class Timer:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t


@pytest.mark.acceptance("A1", "closed-form table at p=0.2 within 5e-4, < 1 s")
def test_a1_table():
    want = {0.0: (1.0, 1.0, 1.0), 0.5: (0.8623, 0.8633, 0.8644), 1.0: (0.8, 0.8, 0.8)}
    with Timer() as t:
        got = {a: closed_form_example(a, 0.2) for a in want}
    assert t.elapsed < 1.0
    for a, (nocsi, causal, noncausal) in want.items():
        np.testing.assert_allclose([got[a]["c_nocsi"], got[a]["c_c"], got[a]["c_nc"]],
                                   [nocsi, causal, noncausal], atol=5e-4)


@pytest.mark.acceptance("A2", "optimizer reaches the non-causal value with I(U;S) <= 1, < 60 s")
def test_a2_optimizer(capsys):
    with Timer() as t:
        code = cli.main(["capacity", "--model", "ptp-se", "--channel", str(DATA / "example_channel_a05.json"),
                         "--u-size", "3", "--restarts", "64"])
    out = capsys.readouterr().out
    assert code == 0
    assert t.elapsed < 60.0
    rep = json.loads(out)["report"]
    assert rep["best_value"] >= 0.8644 - 1e-3
    spec = example_channel(0.5, 0.2)
    p_us = np.asarray(rep["decision"]["p_u_s"])
    joint = {(s, u): spec.p_s[s] * p_us[s, u] for s in range(3) for u in range(3)}
    assert oracles.I((["S", "U"], joint), ["U"], ["S"]) <= 1.0 + 1e-9


@pytest.mark.acceptance("A3", "causal brute force over 8 maps and a grid gives 0.8633, < 10 s")
def test_a3_causal_bruteforce():
    spec = example_channel(0.5, 0.2)
    with Timer() as t:
        value, f, rows = ptp_se_causal_bruteforce(spec)
    assert t.elapsed < 10.0
    assert len(oracles.all_maps(3, 2)) == 8
    assert value == pytest.approx(0.8633, abs=5e-4)
    assert ptp_se_causal(spec, f, rows) == pytest.approx(value, abs=1e-12)
    # the same point evaluated with the dictionary oracle: I(X2;Y|S) with X2 ~ rows[f(s)]
    joint = {(s, x, y): spec.p_s[s] * rows[f[s]][x] * spec.kernel[x, s, y]
             for s in range(3) for x in range(2) for y in range(2)}
    assert oracles.I((["S", "X2", "Y"], joint), ["X2"], ["Y"], ["S"]) == pytest.approx(value, abs=1e-12)


def _facts(*systems, extra=()):
    atoms = set()
    for rows in systems:
        for q in rows:
            atoms |= {s for s in q.expr.symbols() if is_atom(s)}
    return atom_facts(atoms) + [parse_ineq(r) for r in extra]


def _check_projection(name, want, nonneg):
    with Timer() as t:
        sys_ = load_preset(name)
        out = project(sys_, sys_.keep)
    assert t.elapsed < 1.0
    want = [parse_ineq(r) for r in want]
    facts = _facts(out.ineqs, want, extra=[f"{v} >= 0" for v in nonneg]) + list(sys_.assumes)
    assert equivalent(out.ineqs, want, facts)


@pytest.mark.acceptance("A4", "exact projections reproduce the relay and both MAC regions, < 1 s each")
class TestA4Projection:
    def test_relay(self):
        _check_projection("eq17", ["R <= I(X,X_r;Y|S)",
                                   "R <= I(X;Y|X_r,Z,S,U) + H(Z|X_r,S,U) - I(U;S)",
                                   "I(U;S) <= H(Z|X_r,S,U)"], ["R"])

    def test_one_state_mac(self):
        _check_projection("eq21", ["R1 <= I(X1;Y|X2,Z,S,U) + H(Z|S,U) - I(U;S)",
                                   "R2 <= I(X2;Y|X1,S,U)",
                                   "R1 + R2 <= I(X1,X2;Y|Z,S,U) + H(Z|S,U) - I(U;S)",
                                   "R1 + R2 <= I(X1,X2;Y|S)",
                                   "I(U;S) <= H(Z|S,U)"], ["R1", "R2"])

    def test_two_state_mac(self):
        _check_projection("eq41", ["R1 <= I(X1;Y|X2,Z,S1,S2,U) + H(Z|S1,U) - I(U;S1|S2)",
                                   "R2 <= I(X2;Y|X1,S1,S2,U)",
                                   "R1 + R2 <= I(X1,X2;Y|Z,S1,S2,U) + H(Z|S1,U) - I(U;S1|S2)",
                                   "R1 + R2 <= I(X1,X2;Y|S1,S2)",
                                   "I(U;S1|S2) <= H(Z|S1,U)"], ["R1", "R2"])


@pytest.mark.acceptance("A5", "covering pass fraction >= 0.99 at n=14 and non-decreasing, < 120 s")
def test_a5_covering():
    frac = []
    with Timer() as t:
        for n in (8, 10, 12, 14):
            r = covering_experiment([[0.5, 0.5]], [1.0], n, 0.6, 0.8, 0.1, 200, seed=0)
            frac.append(r.pass_fraction)
    assert t.elapsed < 120.0
    assert frac[-1] >= 0.99
    assert all(b >= a for a, b in zip(frac, frac[1:]))


@pytest.mark.acceptance("A6", "scheme block error decreases in n at 80% of capacity and fails above it, < 10 min")
def test_a6_scheme():
    spec, d = toy_sdrc(0.1), toy_decision()
    with Timer() as t:
        value = maximize(sdrc_objective(spec, 2), restarts=8, seed=0).best_value
        assert sdrc_value(spec, d).value == pytest.approx(value, abs=1e-6)
        rates = SchemeRates(0.8 * value, 0.0, 0.0, 1.0)
        err = [simulate_sdrc(spec, d, n, 6, rates, eps=10.0, trials=500, seed=1).block_error_rate
               for n in (8, 10, 12, 14)]
        joint = assemble_sdrc(spec, d)
        i_priv = mutual_information(joint, "X", "Y", ("X_r", "Z", "S", "U"))
        bad = simulate_sdrc(spec, d, 14, 6, SchemeRates(0.8 * value, i_priv + 0.2, 0.0, 1.0),
                            eps=10.0, trials=500, seed=1)
    assert t.elapsed < 600.0
    assert all(b < a for a, b in zip(err, err[1:])), err
    assert bad.block_error_rate > 0.5


@pytest.mark.acceptance("A7", "degeneration suite within 1e-9")
class TestA7Degeneration:
    def test_constant_z_is_mac_with_states(self):
        rng = np.random.default_rng(70)
        for _ in range(20):
            spec = random_mac(rng, ns2=1, z_const=True)
            d = random_mac_decision(rng, spec, u_indep=True)
            b = mac_bounds(spec, d)
            t = oracles.table(*_names_probs(assemble_mac(spec, d)))
            s = ["S1", "S2"]
            want = (oracles.I(t, ["X1"], ["Y"], s + ["U", "X2"]),
                    oracles.I(t, ["X2"], ["Y"], s + ["U", "X1"]),
                    oracles.I(t, ["X1", "X2"], ["Y"], s + ["U"]),
                    oracles.I(t, ["X1", "X2"], ["Y"], s))
            np.testing.assert_allclose(b.as_tuple(), want, atol=1e-9)
            assert abs(b.slack) <= 1e-9

    def test_degenerate_s2_is_one_state(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            spec = random_mac(rng, ns2=1)
            d = random_mac_decision(rng, spec)
            b = mac_bounds(spec, d)
            names, probs = _names_probs(assemble_mac(spec, d))
            k = names.index("S2")
            t = oracles.table([n if n != "S1" else "S" for n in names if n != "S2"], np.take(probs, 0, axis=k))
            slack = oracles.H(t, ["Z"], ["S", "U"]) - oracles.I(t, ["U"], ["S"])
            want = (oracles.I(t, ["X1"], ["Y"], ["X2", "Z", "S", "U"]) + slack,
                    oracles.I(t, ["X2"], ["Y"], ["X1", "S", "U"]),
                    oracles.I(t, ["X1", "X2"], ["Y"], ["Z", "S", "U"]) + slack,
                    oracles.I(t, ["X1", "X2"], ["Y"], ["S"]))
            np.testing.assert_allclose(b.as_tuple(), want, atol=1e-9)

    def test_singleton_u_noncausal_is_causal(self):
        rng = np.random.default_rng(72)
        for _ in range(20):
            spec = random_sdrc(rng, ns=3)
            causal = SdRcDecision.causal(simplex(rng, (2,)), simplex(rng, (2, 3, 2)))
            a = sdrc_causal_value(spec, causal)
            b = sdrc_value(spec, causal.as_noncausal(3))          # singleton U
            assert a.rate_bound_1 == pytest.approx(b.rate_bound_1, abs=1e-9)
            assert a.rate_bound_2 == pytest.approx(b.rate_bound_2, abs=1e-9)

    def test_decomposition_identity(self):
        rng = np.random.default_rng(73)
        for _ in range(100):
            spec = random_sdrc(rng, ns=int(rng.integers(1, 4)), nx=int(rng.integers(2, 4)))
            j = assemble_sdrc(spec, random_sdrc_decision(rng, spec, nu=int(rng.integers(1, 4))))
            lhs = (mutual_information(j, ("Z", "X"), "Y", ("X_r", "U", "S"))
                   + mutual_information(j, ("X_r", "U"), "Y", "S"))
            assert lhs == pytest.approx(mutual_information(j, ("X", "X_r"), "Y", "S"), abs=1e-9)


def _names_probs(j):
    return list(j.names), np.asarray(j.probs)


@pytest.mark.acceptance("A8", "information identities on 1000 random joints within 1e-9")
def test_a8_prob_properties():
    rng = np.random.default_rng(80)
    for _ in range(1000):
        sizes = tuple(int(x) for x in rng.integers(1, 4, size=3))
        j = random_joint(rng, sizes, zeros=float(rng.choice([0.0, 0.3])))
        assert entropy(j, ("A0", "A1")) == pytest.approx(entropy(j, "A0") + entropy(j, "A1", "A0"), abs=1e-9)
        assert entropy(j, "A0", "A1") <= entropy(j, "A0") + 1e-9
        a = mutual_information(j, "A0", "A1", "A2")
        assert a == pytest.approx(mutual_information(j, "A1", "A0", "A2"), abs=1e-9)
        assert a >= -1e-9
        assert mutual_information(j, "A0", "A1") >= -1e-9


def _cli_bytes(argv, path):
    assert cli.main(argv + ["--out", str(path)]) == 0
    return path.read_bytes()


@pytest.mark.acceptance("A9", "CLI reruns are bit-identical, also with --threads > 1")
def test_a9_determinism(tmp_path):
    for name in ("toy_sdrc.json", "toy_decision.json"):
        shutil.copy(DATA / name, tmp_path / name)
    cfg = json.loads((DATA / "toy_sim.json").read_text())
    cfg["trials"] = 20
    (tmp_path / "sim.json").write_text(json.dumps(cfg))
    runs = [
        ["table1", "--alphas", "0,0.25,0.5,1", "--optimizer", "--restarts", "4"],
        ["capacity", "--model", "sdrc", "--channel", str(tmp_path / "toy_sdrc.json"), "--restarts", "6",
         "--seed", "5"],
        ["region", "--channel", str(DATA / "toy_mac.json"), "--grid", "3", "--restarts", "3"],
        ["fme", "--preset", "eq41"],
        ["sim", "--config", str(tmp_path / "sim.json")],
        ["covering", "--kernel-file", str(DATA / "covering_uniform.json"), "--n", "10", "--r", "0.6",
         "--rb", "0.8", "--trials", "20"],
    ]
    for k, argv in enumerate(runs):
        for threads in ("1", "3"):
            args = argv + ["--threads", threads]
            first = _cli_bytes(args, tmp_path / f"a{k}.out")
            second = _cli_bytes(args, tmp_path / f"b{k}.out")
            assert first == second, argv[0]
        if argv[0] in ("capacity", "sim", "covering"):
            one = json.loads(_cli_bytes(argv + ["--threads", "1"], tmp_path / "c.out"))
            many = json.loads(_cli_bytes(argv + ["--threads", "3"], tmp_path / "d.out"))
            assert one["report"] == many["report"], argv[0]
