import json
import math
from importlib import resources

import numpy as np
import pytest
from scipy.stats import binom

from volbench.clv import (
    DESTABILIZER,
    STABILIZER,
    ClvConfig,
    average_sigma,
    estimate_clifford,
    estimates_from_table,
    evaluate_average,
    evaluate_worst_case,
    make_instance,
    replay_verdict,
    run_clv_level,
    run_clv_search,
    select_observables,
)
from volbench.estimates import TAU_D, TAU_S, ExpectationEstimate, NoiseParams, sample_shots
from volbench.search import search_score
from volbench.tableau import noiseless_expectation, sample_random_clifford

L = 512


def fixture(name):
    return json.loads(resources.files("volbench").joinpath(f"data/published_runs/{name}.json").read_text())


def est(mean, kind=STABILIZER, shots=L):
    return ExpectationEstimate(mean, shots, "", kind)


def test_thresholds():
    assert TAU_S == 1 / math.e
    assert TAU_D == 1 / (2 * math.e)
    assert ClvConfig().tau_s == TAU_S


def test_config_validation():
    with pytest.raises(ValueError):
        ClvConfig(shots=100)
    ClvConfig(shots=100, allow_few_shots=True)
    with pytest.raises(ValueError):
        ClvConfig(tau_s=0.1, tau_d=0.2)
    with pytest.raises(ValueError):
        ClvConfig(K=0)
    with pytest.raises(ValueError):
        ClvConfig(sigma_avg="median")


def test_sigma_closed_form_and_count_parity():
    rng = np.random.default_rng(0)
    for v in (-0.9, 0.0, 0.3, 1.0):
        e = sample_shots(v, L, rng)
        assert e.sigma == pytest.approx(math.sqrt((1 - e.mean**2) / L), abs=1e-15)
        assert round(e.mean * L) % 2 == L % 2


@pytest.mark.parametrize("name", ["n30", "n34", "n35", "n36"])
def test_published_two_sigma_reproduced(name):
    table = fixture(name)
    for cliff in table["cliffords"]:
        for row in cliff["rows"]:
            sigma = math.sqrt((1 - row["mean"] ** 2) / table["shots"])
            assert 2 * sigma == pytest.approx(row["reported_two_sigma"], abs=1e-3)


def test_worst_case_examples():
    cfg = ClvConfig()
    assert evaluate_worst_case(est(0.448), cfg)
    assert not evaluate_worst_case(est(0.3711), cfg)
    assert evaluate_worst_case(est(0.0234, DESTABILIZER), cfg)
    assert not evaluate_worst_case(est(0.2, DESTABILIZER), cfg)
    with pytest.raises(ValueError):
        evaluate_worst_case(est(0.5, "majorana"), cfg)


def test_average_examples():
    cfg = ClvConfig()
    es = [est(m) for m in (0.448, 0.480, 0.516, 0.500)]
    sbar = average_sigma([e.sigma for e in es], "sem")
    assert sbar == pytest.approx(0.0193, abs=2e-4)
    assert evaluate_average(es, cfg)
    # the root-mean-square form rejects the same published round
    assert not evaluate_average(es, ClvConfig(sigma_avg="rms"))
    assert evaluate_average([est(1.0)] * 4, cfg)
    zeros = [est(0.0, DESTABILIZER)] * 4
    assert average_sigma([e.sigma for e in zeros]) == pytest.approx(0.25 * math.sqrt(4 / L))
    assert evaluate_average(zeros, cfg)
    with pytest.raises(ValueError):
        evaluate_average([], cfg)
    with pytest.raises(ValueError):
        evaluate_average([est(0.5), est(0.0, DESTABILIZER)], cfg)


def test_threshold_ties_are_inclusive():
    e = est(0.5)
    assert evaluate_worst_case(e, ClvConfig(tau_s=e.mean - 2 * e.sigma, tau_d=0.1))
    d = est(0.05, DESTABILIZER)
    assert evaluate_worst_case(d, ClvConfig(tau_d=abs(d.mean) + 2 * d.sigma))


@pytest.mark.parametrize("name,expected", [("n30", False), ("n34", True), ("n35", False), ("n36", False)])
def test_replay_published_verdicts(name, expected):
    verdict, record = replay_verdict(fixture(name))
    assert verdict.passed is expected
    assert record["pass"] is expected
    assert verdict.n == fixture(name)["n"]


def test_replay_failure_reasons():
    v35, _ = replay_verdict(fixture("n35"))
    assert not all(v35.stabilizer_flags[0])
    v36, _ = replay_verdict(fixture("n36"))
    assert not all(v36.stabilizer_flags[0])


def test_replay_rejects_bad_tables():
    with pytest.raises(ValueError):
        estimates_from_table({"n": 3, "shots": 512, "cliffords": []})
    with pytest.raises(ValueError):
        estimates_from_table({"n": 3, "shots": 512, "cliffords": [{"rows": [{"kind": "stabilizer", "mean": 0.9}]}]})
    with pytest.raises(ValueError):
        estimates_from_table({"cliffords": []})


def test_select_observables():
    rng = np.random.default_rng(1)
    t = sample_random_clifford(4, rng)
    s, d = select_observables(t, 4, rng)
    assert sorted(s) == [0, 1, 2, 3] and sorted(d) == [0, 1, 2, 3]
    with pytest.raises(ValueError):
        select_observables(t, 5, rng)
    t = sample_random_clifford(9, rng)
    s, d = select_observables(t, 4, rng)
    assert len(set(s)) == 4 and len(set(d)) == 4


def test_instance_observables_have_ideal_values():
    inst = make_instance(3, 6, 0, 4)
    obs, kinds = inst.observables()
    for p, kind in zip(obs, kinds):
        assert noiseless_expectation(inst.tableau, p) == (1 if kind == STABILIZER else 0)


def test_small_levels_use_every_generator():
    inst = make_instance(0, 2, 1, 4)
    assert len(inst.stabilizer_index) == 2


def test_destabilizer_false_alarm_rate_matches_binomial():
    # A zero-mean destabilizer at L = 512 fails the worst-case bound when the
    # plus count lands far enough from L/2; the rate follows from the
    # binomial law, so noiseless levels fail now and then at this budget.
    cfg = ClvConfig()
    counts = np.arange(L + 1)
    fails = np.array([not evaluate_worst_case(ExpectationEstimate.from_plus_count(int(c), L, "", DESTABILIZER), cfg) for c in counts])
    rate = float(binom.pmf(counts, L, 0.5)[fails].sum())
    assert 0.025 < rate < 0.04
    rng = np.random.default_rng(3)
    draws = [not evaluate_worst_case(sample_shots(0.0, L, rng, "", DESTABILIZER), cfg) for _ in range(20000)]
    assert abs(np.mean(draws) - rate) < 4 * math.sqrt(rate * (1 - rate) / 20000)
    # at 4096 shots the same margin is about 6 standard deviations
    big = np.arange(4097)
    fails4k = np.array([not evaluate_worst_case(ExpectationEstimate.from_plus_count(int(c), 4096, "", DESTABILIZER), cfg) for c in big])
    assert binom.pmf(big, 4096, 0.5)[fails4k].sum() < 1e-6


def test_noiseless_levels_pass_at_sweep_budget():
    cfg = ClvConfig(shots=4096, seed=7)
    score, _ = run_clv_search(cfg, 20)
    assert score == 20


def test_levels_with_and_without_noise():
    ok, _ = run_clv_level(12, ClvConfig(shots=4096, seed=1))
    assert ok.passed
    bad, record = run_clv_level(12, ClvConfig(noise=NoiseParams(p2q=0.05), seed=1))
    assert not bad.passed
    assert len(record["cliffords"]) == 4
    assert all(r["operator"][0] in "+-" for c in record["cliffords"] for r in c["stabilizers"])


def test_engines_agree_in_distribution():
    noise = NoiseParams(p2q=0.01, pm=0.02)
    fast = estimate_clifford(3, 0, ClvConfig(noise=noise, seed=5))
    slow = estimate_clifford(3, 0, ClvConfig(noise=noise, seed=5, engine="tableau"))
    for f, s in zip(fast, slow):
        assert f.operator == s.operator
        assert abs(f.mean - s.mean) < 5 * math.sqrt(f.sigma**2 + s.sigma**2) + 1e-9


def test_paired_seed_monotonicity():
    lo = run_clv_search(ClvConfig(shots=4096, noise=NoiseParams(1e-3, 1e-2), seed=2), 40)[0]
    hi = run_clv_search(ClvConfig(shots=4096, noise=NoiseParams(1e-2, 1e-2), seed=2), 40)[0]
    assert hi <= lo


def test_more_shots_only_help_above_threshold():
    cfg = ClvConfig()
    for mean in (0.40, 0.45, 0.6):
        assert evaluate_worst_case(est(mean, shots=4 * L), cfg) >= evaluate_worst_case(est(mean), cfg)


@pytest.mark.parametrize("mode", ["linear", "binary"])
def test_search_modes(mode):
    truth = {n: n <= 13 or n == 20 for n in range(1, 31)}
    score, order = search_score(lambda n: truth[n], 30, mode)
    assert score == 13
    assert len(order) == len(set(order))


def test_binary_confirms_lower_levels():
    truth = {n: n != 4 for n in range(1, 17)}
    score, order = search_score(lambda n: truth[n], 16, "binary")
    assert score == 3
    assert 4 in order


def test_search_edge_cases():
    assert search_score(lambda n: False, 5)[0] == 0
    assert search_score(lambda n: True, 5, "binary")[0] == 5
    with pytest.raises(ValueError):
        search_score(lambda n: True, 0)
