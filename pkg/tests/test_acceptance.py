"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``verdict`` fixture before
asserting, so the summary at the end of a pytest run lists every criterion.
"""

import json
import math
from collections import Counter
from dataclasses import replace
from importlib import resources

import numpy as np
import pytest
from scipy.stats import chisquare

from oracles import expectation, jw_dense, parse_qasm, pauli_dense, qasm_state
from volbench.circuit import Circuit, export_qasm, freefermion_circuit, lower_givens
from volbench.cli import main, sweep_scores
from volbench.clv import ClvConfig, replay_verdict, run_clv_search
from volbench.estimates import TAU_D, TAU_S, NoiseParams
from volbench.ffv import FfvConfig, run_ffv_level, run_ffv_search
from volbench.majorana import effective_column, readout_damped, readout_weights, trajectory_column
from volbench.orthogonal import givens_decompose, inv_norm_cdf, norm_pdf, sample_haar_so, truncated_mass
from volbench.report import validate_report
from volbench.tableau import (
    destabilizer_of,
    noiseless_expectation,
    replay,
    sample_random_clifford,
    stabilizer_of,
    synthesize,
)

FIXTURES = ("n30", "n34", "n35", "n36")
EXPECTED = {"n30": False, "n34": True, "n35": False, "n36": False}
GRID = (5e-5, 2.9e-4, 1.7e-3, 1e-2)


def fixture(name):
    return json.loads(resources.files("volbench").joinpath(f"data/published_runs/{name}.json").read_text())


@pytest.fixture
def quiet_env(monkeypatch):
    monkeypatch.delenv("CI", raising=False)
    monkeypatch.delenv("VOLBENCH_WORKERS", raising=False)


def test_criterion_01_thresholds(tmp_path, quiet_env, verdict):
    out = tmp_path / "r.json"
    assert main(["clv", "run", "--n-max", "2", "--seed", "0", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    validate_report(report)
    th = report["thresholds"]
    ok = th["tau_s"] == 1 / math.e == TAU_S and th["tau_d"] == 1 / (2 * math.e) == TAU_D
    assert verdict(1, ok, f"tau_s={th['tau_s']!r} tau_d={th['tau_d']!r}")


def test_criterion_02_sigma_reproduction(verdict):
    worst, rows = 0.0, 0
    for name in FIXTURES:
        table = fixture(name)
        for cliff in table["cliffords"]:
            for row in cliff["rows"]:
                two_sigma = 2 * math.sqrt((1 - row["mean"] ** 2) / 512)
                worst = max(worst, abs(two_sigma - row["reported_two_sigma"]))
                rows += 1
    ok = worst <= 1e-3 + 1e-12
    assert verdict(2, ok, f"{rows} rows, max |2sigma - published| = {worst:.5f}")


def test_criterion_03_replay(verdict):
    got = {name: replay_verdict(fixture(name))[0].passed for name in FIXTURES}
    ok = got == EXPECTED
    detail = " ".join(f"{k}={'PASS' if v else 'FAIL'}" for k, v in got.items())
    assert verdict(3, ok, detail)


def test_criterion_04_clv_transition(verdict):
    noise = NoiseParams(1e-3, 1e-2)
    scores = [run_clv_search(ClvConfig(shots=4096, noise=noise, seed=s), 48)[0] for s in range(10)]
    ok = all(30 <= s <= 36 for s in scores)
    # diagnostic: the same sweep when the readout flip acts once per observable
    alt = [
        run_clv_search(ClvConfig(shots=4096, noise=replace(noise, readout="observable"), seed=s), 48)[0]
        for s in range(10)
    ]
    detail = f"per-qubit readout scores over 10 seeds {scores}, window [30, 36]; per-observable readout {alt}"
    assert verdict(4, ok, detail)


def _monotone_violations(scores, tol=1):
    # rows run over pm ascending, columns over p2q ascending
    a = np.asarray(scores)
    along_p2q = int(np.sum(np.diff(a, axis=1) > tol))
    along_pm = int(np.sum(np.diff(a, axis=0) > tol))
    return along_p2q + along_pm


@pytest.mark.parametrize("bench,n_max", [("clv", 48), ("ffv", 64)])
def test_criterion_05_heatmap_shape(bench, n_max, verdict):
    base = ClvConfig(shots=4096, seed=0) if bench == "clv" else FfvConfig(shots=4096, seed=0)
    scores = sweep_scores(bench, GRID, GRID, n_max, base)
    bad = _monotone_violations(scores)
    assert verdict(5, bad == 0, f"{bench} 4x4 grid rows(pm asc)={scores}, violations={bad}")


def test_criterion_06_ffv_extremes(verdict):
    strong = NoiseParams(1e-2, 2e-2)
    low = [run_ffv_search(FfvConfig(noise=strong, seed=s), 64)[0] for s in range(10)]
    diag = [run_ffv_search(FfvConfig(shots=4096, noise=strong, seed=s), 64)[0] for s in range(10)]
    weak = NoiseParams(1e-5, 5e-3)
    high = [run_ffv_level(100, FfvConfig(noise=weak, seed=s))[0] for s in range(3)]
    ok = all(s < 10 for s in low) and all(high)
    detail = f"strong noise at 512 shots {low} (4096 shots: {diag}); n=100 passes under weak noise {high}"
    assert verdict(6, ok, detail)


def test_criterion_07_truncated_mass(verdict):
    rng = np.random.default_rng(2026)
    mc = np.mean([np.sort(sample_haar_so(100, rng)[:, 0] ** 2)[-10:].sum() for _ in range(400)])
    analytic = truncated_mass(0.1, 100).expected_sum
    q, phi = inv_norm_cdf(0.95), norm_pdf(1.645)
    ok = abs(mc - 0.439) <= 0.02 and round(analytic, 3) == 0.439 and abs(q - 1.645) <= 1e-3 and abs(phi - 0.103) <= 1e-3
    assert verdict(7, ok, f"MC={mc:.4f} analytic={analytic:.5f} inv_cdf(0.95)={q:.5f} pdf(1.645)={phi:.5f}")


def test_criterion_08_oracle_equivalence(verdict):
    rng = np.random.default_rng(8)
    tab_err = 0.0
    for n in range(1, 7):
        for _ in range(3):
            t = sample_random_clifford(n, rng)
            psi = qasm_state(export_qasm(synthesize(t)))
            probes = [stabilizer_of(t, i) for i in range(n)] + [destabilizer_of(t, i) for i in range(n)]
            for p in probes:
                tab_err = max(tab_err, abs(noiseless_expectation(t, p) - expectation(psi, pauli_dense(str(p)))))

    ff_err = 0.0
    for n in (1, 2, 3):
        for _ in range(3):
            O = sample_haar_so(2 * n, rng)
            prog = givens_decompose(O)
            for i in range(2 * n):
                psi = qasm_state(export_qasm(freefermion_circuit(prog, i)))
                got = np.array([expectation(psi, jw_dense(n, j)) for j in range(2 * n)])
                ff_err = max(ff_err, float(np.max(np.abs(got - O[:, i]))))

    z_max = 0.0
    prog = givens_decompose(sample_haar_so(8, rng))
    for p in (0.01, 0.1):
        exact = effective_column(prog, p, 2)
        mean, se = trajectory_column(prog, p, 2, 100_000, np.random.default_rng(int(1e4 * p)))
        nz = se > 0
        z_max = max(z_max, float(np.max(np.abs(mean - exact)[nz] / se[nz])))

    ro_max = 0.0
    ideal = np.array([0.9, -0.6, 0.4, 0.2, -0.1, 0.7])
    damped = readout_damped(ideal, 0.05)
    w = readout_weights(6)
    shots = 40_000
    for j in range(6):
        outcome = np.where(rng.random(shots) < (1 + ideal[j]) / 2, 1, -1)
        flips = (rng.random((shots, w[j])) < 0.05).sum(axis=1) % 2
        sampled = (outcome * np.where(flips, -1, 1)).mean()
        ro_max = max(ro_max, abs(sampled - damped[j]) / math.sqrt((1 - damped[j] ** 2) / shots))

    ok = tab_err <= 1e-9 and ff_err <= 1e-9 and z_max < 4 and ro_max < 3
    detail = f"tableau err={tab_err:.1e} ff err={ff_err:.1e} O_eff max z={z_max:.2f} readout max z={ro_max:.2f}"
    assert verdict(8, ok, detail)


def _chi2_pvalue(n, classes, samples, seed):
    rng = np.random.default_rng(seed)
    counts = Counter()
    for _ in range(samples):
        t = sample_random_clifford(n, rng)
        counts[t.x.tobytes() + t.z.tobytes() + t.r.tobytes()] += 1
    observed = list(counts.values()) + [0] * (classes - len(counts))
    return len(counts) <= classes, chisquare(observed).pvalue


def test_criterion_09_structural(verdict):
    ok1, p1 = _chi2_pvalue(1, 24, 24 * 400, 91)
    ok2, p2 = _chi2_pvalue(2, 11520, 11520 * 6, 92)

    rng = np.random.default_rng(9)
    worst = 0.0
    for k in range(500):
        O = sample_haar_so(2 * (1 + k % 10), rng)
        worst = max(worst, float(np.linalg.norm(givens_decompose(O).matrix() - O)))

    synth_ok = True
    qasm_ok = True
    for k in range(200):
        t = sample_random_clifford(1 + k % 8, rng)
        c = synthesize(t)
        synth_ok &= replay(c) == t
        n, gates = parse_qasm(export_qasm(c))
        rebuilt = Circuit(n)
        for name, qs, _ in gates:
            rebuilt.append(name, *qs)
        qasm_ok &= replay(rebuilt) == t
    ff = lower_givens(givens_decompose(sample_haar_so(10, rng)))
    _, gates = parse_qasm(export_qasm(ff))
    qasm_ok &= [(g[0], g[1], g[2]) for g in gates] == [(g.name, g.qubits, g.angle) for g in ff.gates]

    ok = ok1 and ok2 and p1 > 1e-3 and p2 > 1e-3 and worst <= 1e-10 and synth_ok and qasm_ok
    detail = f"chi2 p(n=1)={p1:.3f} p(n=2)={p2:.3f} givens max err={worst:.1e} synthesis={synth_ok} qasm={qasm_ok}"
    assert verdict(9, ok, detail)


def test_criterion_10_determinism(tmp_path, quiet_env, verdict):
    same = []
    for bench in ("clv", "ffv"):
        blobs = []
        for workers in (1, 2, 4):
            out = tmp_path / f"{bench}-{workers}.json"
            args = [bench, "run", "--n-max", "8", "--p2q", "2e-3", "--pm", "1e-2", "--seed", "11", "--shots", "4096"]
            assert main(args + ["--workers", str(workers), "--no-timing", "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        same.append(len(set(blobs)) == 1)
    assert verdict(10, all(same), f"byte-identical reports across 1/2/4 workers: clv={same[0]} ffv={same[1]}")

