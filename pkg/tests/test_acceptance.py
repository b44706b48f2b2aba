"""Acceptance suite: one test (or parametrized family) per release criterion.

Each criterion prints a PASS line with its measured numbers and wall time;
run with `pytest tests/test_acceptance.py -v -s` to see them.
"""
import time

import numpy as np
import pytest

from bayeslimit import bayes
from bayeslimit import geometry as geo
from bayeslimit import measurements as ms
from bayeslimit import signals as sg
from bayeslimit import subspace as sub
from bayeslimit import whitening as wh
from tests_helpers import BINS, DT, T, snr_to_amplitude, table_ii_problem

TWO_PI = 2 * np.pi
SNR_SWEEP = (0.5, 1.0, 2.0, 3.0, 4.5, 6.0, 8.0, 12.0, 16.0, 20.0)


def report(name, detail):
    print(f"PASS {name}: {detail}")


# --------------------------------------------------------------- criterion 1

def displacement_pipeline(sigma):
    prior = bayes.gaussian_prior(0.0, sigma, 401, span=6.0)
    alphas = (1j * prior.grid / np.sqrt(2.0))[:, None]
    cfg = sub.FockOracleConfig(bins=1, levels=30)
    states, defects = sub.fock_oracle_states(alphas, cfg)
    gram = geo.GramMatrix(states.conj().T @ states, prior.grid,
                          sg.Encoding.COHERENT, geo.Exactness.EXACT)
    sol = bayes.solve(sub.truncated_basis(gram), prior, with_outcome_bmse=False)
    return sol.mbmse, prior


def displacement_bath(prior):
    tmpl = sg.SignalFamily(sg.SignalKind.SCALED_TEMPLATE,
                           template_times=np.array([0.0, 1.0]),
                           template_values=np.array([1.0, 1.0]))
    problem = sg.EstimationProblem(tmpl, sg.Parameter.DISPLACEMENT,
                                   sg.Encoding.COHERENT, prior.grid, prior)
    return ms.DiscretizedBath(problem, (1j * prior.grid / np.sqrt(2))[:, None],
                              np.array([0.0]), 1.0)


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_a1_displacement_pipeline_exactness(sigma):
    t0 = time.time()
    mbmse, _ = displacement_pipeline(sigma)
    exact = sigma**2 / (1 + 2 * sigma**2)
    rel = abs(mbmse - exact) / exact
    assert rel <= 1e-3, f"sigma={sigma}: pipeline {mbmse:.6f} vs {exact:.6f} " \
                        f"(relative {rel:.2e})"
    report("A1-pipeline", f"sigma={sigma} mbmse={mbmse:.6f} exact={exact:.6f} "
                          f"rel={rel:.1e} [{time.time() - t0:.1f}s]")


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_a1_displacement_quadrature_monte_carlo(sigma):
    t0 = time.time()
    prior = bayes.gaussian_prior(0.0, sigma, 401, span=6.0)
    bath = displacement_bath(prior)
    scheme = ms.MeasurementScheme(ms.SchemeKind.TIME_QUADRATURE)
    res = ms.bmse_monte_carlo(bath, scheme, prior, 100_000, seed=101)
    exact = sigma**2 / (1 + 2 * sigma**2)
    # the Gaussian posterior has outcome-independent variance, so that
    # estimator is deterministic up to grid quantization; the squared-error
    # estimator carries the Monte-Carlo noise the 3-sigma band refers to
    assert abs(res.bmse_sq - exact) <= 3 * res.se_sq
    assert abs(res.bmse - exact) <= 3 * res.se + 1e-6 * exact
    report("A1-quadrature", f"sigma={sigma} bmse={res.bmse:.6f} "
                            f"sq={res.bmse_sq:.6f} exact={exact:.6f} "
                            f"se={res.se_sq:.1e} [{time.time() - t0:.1f}s]")


@pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
def test_a1_displacement_counting_monte_carlo(sigma):
    t0 = time.time()
    prior = bayes.gaussian_prior(0.0, sigma, 401, span=6.0)
    bath = displacement_bath(prior)
    scheme = ms.MeasurementScheme(ms.SchemeKind.TIME_COUNTING)
    res = ms.bmse_monte_carlo(bath, scheme, prior, 20_000, seed=103)
    assert abs(res.bmse - sigma**2) <= 3 * res.se
    report("A1-counting", f"sigma={sigma} bmse={res.bmse:.6f} prior_var={sigma**2} "
                          f"se={res.se:.1e} [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 2

def test_a2_gaussian_three_route_consistency():
    t0 = time.time()
    worst = 0.0
    for varsigma in (0.5, 1.0, 2.0, 4.0):
        sym = geo.ToeplitzSymbol(
            lambda d, v=varsigma: np.exp(-0.5 * v**2 * d**2), 0.0, None,
            16.0 / varsigma, 0.004 / varsigma, None, "gauss")
        exact = 1.0 / (4.0 * varsigma**2)
        flat = wh.mbmse_flat_prior(sym)
        meas = geo.spectral_measure(sym, np.linspace(-10 * varsigma, 10 * varsigma,
                                                     4001))
        var, div = wh.whitening_posterior_variance(wh.whitening_likelihood(meas))
        assert not flat.divergent and not div
        for value in (flat.value, var):
            rel = abs(value - exact) / exact
            worst = max(worst, rel)
            assert rel <= 5e-3, f"varsigma={varsigma}: {value} vs {exact}"
    report("A2", f"three routes agree, worst relative {worst:.1e} "
                 f"[{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 3

QFI_CASES = [
    # (label, problem builder, expected)
    ("sinusoid (0,T)", lambda: (_freq_symbol(sg.SignalKind.WINDOWED_SINUSOID,
                                             sg.Window.ZERO_TO_T, A=1.0)),
     1000.0 / 3.0),
    ("complex (0,T)", lambda: (_freq_symbol(sg.SignalKind.COMPLEX_EXPONENTIAL,
                                            sg.Window.ZERO_TO_T, A=1.0)),
     2000.0 / 3.0),
    ("sinusoid centered", lambda: (_freq_symbol(sg.SignalKind.WINDOWED_SINUSOID,
                                                sg.Window.CENTERED, A=1.0)),
     1000.0 / 12.0),
    ("complex centered", lambda: (_freq_symbol(sg.SignalKind.COMPLEX_EXPONENTIAL,
                                               sg.Window.CENTERED, A=1.0)),
     1000.0 / 6.0),
    ("amplitude", lambda: _amplitude_symbol(), 10.0),                    # 4 nbar_1
    ("phase sinusoid", lambda: _phase_symbol(sg.SignalKind.WINDOWED_SINUSOID,
                                             A=1.3), 1.3**2 * 10.0),
    ("phase complex", lambda: _phase_symbol(sg.SignalKind.PHASE_ROTATED,
                                            A=1.3), 2 * 1.3**2 * 10.0),
    ("sine-gaussian", lambda: _sine_gaussian_symbol(0.9, 1.4),
     np.sqrt(np.pi) * 0.81 * 1.4**3),
    ("lorentzian", lambda: _lorentzian_symbol(1.1, 0.8), 1.21 / 0.8**3),
]


def _freq_symbol(kind, window, A):
    fam = sg.SignalFamily(kind, amplitude=A, duration=10.0, window=window)
    p = sg.EstimationProblem(fam, sg.Parameter.FREQUENCY, sg.Encoding.COHERENT,
                             np.linspace(4, 6, 8))
    return geo.symbol_from_problem(p)


def _amplitude_symbol():
    fam = sg.SignalFamily(sg.SignalKind.WINDOWED_SINUSOID, duration=10.0)
    p = sg.EstimationProblem(fam, sg.Parameter.AMPLITUDE, sg.Encoding.COHERENT,
                             np.linspace(0.5, 1.5, 8))
    return geo.symbol_from_problem(p)


def _phase_symbol(kind, A):
    fam = sg.SignalFamily(kind, amplitude=A, duration=10.0)
    p = sg.EstimationProblem(fam, sg.Parameter.PHASE, sg.Encoding.COHERENT,
                             np.linspace(0, 1, 8))
    return geo.symbol_from_problem(p)


def _sine_gaussian_symbol(A, sigma):
    fam = sg.SignalFamily(sg.SignalKind.SINE_GAUSSIAN, amplitude=A, sigma=sigma)
    p = sg.EstimationProblem(fam, sg.Parameter.FREQUENCY, sg.Encoding.COHERENT,
                             np.linspace(4, 6, 8))
    return geo.symbol_from_problem(p)


def _lorentzian_symbol(A, gamma):
    fam = sg.SignalFamily(sg.SignalKind.LORENTZIAN_DECAY, amplitude=A, gamma=gamma)
    p = sg.EstimationProblem(fam, sg.Parameter.FREQUENCY, sg.Encoding.COHERENT,
                             np.linspace(4, 6, 8))
    return geo.symbol_from_problem(p)


def test_a3_qfi_closed_forms():
    t0 = time.time()
    worst = ("", 0.0)
    for label, build, expected in QFI_CASES:
        sym = build()
        step = 0.05 / np.sqrt(expected)
        got = geo.qfi_from_fidelity(sym, 0.0, step)
        rel = abs(got - expected) / expected
        if rel > worst[1]:
            worst = (label, rel)
        assert rel <= 5e-3, f"{label}: fidelity {got:.6g} vs closed form {expected:.6g}"
    report("A3", f"9 closed forms reproduced, worst {worst[0]} rel={worst[1]:.1e} "
                 f"[{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 4

def _side_extrapolated_jump(measure, k0):
    k, g = measure.k, measure.density
    fits = []
    for lo, hi in ((k0 - 1.2, k0 - 0.12), (k0 + 0.12, k0 + 1.2)):
        mask = (k >= lo) & (k <= hi)
        fits.append(np.polyval(np.polyfit(k[mask], g[mask], 1), k0))
    return fits[0] - fits[1]


def test_a4_spectral_structure_reproduction():
    t0 = time.time()
    problem, _ = table_ii_problem(np.sqrt(20.0))   # A = 1 exactly
    sym = geo.symbol_from_problem(problem, many_cycles=True)
    k = np.linspace(-45.0, 45.0, 9001)
    meas = geo.spectral_measure(sym, k)
    atom_expected = np.exp(-2.5)
    assert abs(meas.atom_weight - atom_expected) <= 0.05 * atom_expected

    res = wh.mbmse_flat_prior(meas)
    assert res.divergent
    cell = k[1] - k[0]
    jump_locs = sorted(res.jump_locations)
    assert abs(jump_locs[0] + 10.0) <= cell + 1e-12
    assert abs(jump_locs[-1] - 10.0) <= cell + 1e-12

    rect_expected = np.exp(-2.5) / 8.0
    jumps = [_side_extrapolated_jump(meas, 10.0),
             -_side_extrapolated_jump(meas, -10.0)]
    for j in jumps:
        assert abs(j - rect_expected) <= 0.15 * rect_expected
    report("A4", f"atom={meas.atom_weight:.5f} jumps at {jump_locs[0]:.2f},"
                 f"{jump_locs[-1]:.2f} heights {jumps[0]:.5f},{jumps[1]:.5f} "
                 f"(rectangle {rect_expected:.5f}) [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 5

@pytest.fixture(scope="module")
def mbmse_sweep():
    rows = {}
    for snr in SNR_SWEEP:
        problem, prior = table_ii_problem(snr)
        basis = sub.truncated_basis(geo.gram_coherent(problem))
        sol = bayes.solve(basis, prior, with_outcome_bmse=False)
        rows[snr] = (sol.mbmse, prior.variance, basis.rank)
    return rows


def test_a5_mbmse_monotone_in_snr(mbmse_sweep):
    t0 = time.time()
    vals = [mbmse_sweep[s][0] for s in SNR_SWEEP]
    for a, b in zip(vals, vals[1:]):
        assert b <= a + 1e-6
    report("A5-i", f"MBMSE nonincreasing over {len(vals)} SNR points "
                   f"[{time.time() - t0:.1f}s]")


@pytest.mark.parametrize("snr", [s for s in SNR_SWEEP if s <= 1.0])
def test_a5_mbmse_saturates_prior_at_low_snr(mbmse_sweep, snr):
    mbmse, prior_var, _ = mbmse_sweep[snr]
    rel = abs(mbmse - prior_var) / prior_var
    assert rel <= 0.05, (
        f"snr={snr}: MBMSE {mbmse:.4f} sits {100 * rel:.1f}% below the prior "
        f"variance {prior_var:.4f}; the 5% saturation band is exceeded")
    report("A5-ii", f"snr={snr} mbmse/prior_var={mbmse / prior_var:.4f}")


def test_a5_quadrature_reaches_cfi_only_at_high_snr(mbmse_sweep):
    t0 = time.time()
    msgs = []
    for snr in (12.0, 16.0, 20.0):
        problem, prior = table_ii_problem(snr)
        bath = ms.discretize(problem, BINS, DT)
        scheme = ms.MeasurementScheme(ms.SchemeKind.TIME_QUADRATURE)
        res = ms.bmse_monte_carlo(bath, scheme, prior, 20_000, seed=1234)
        A = snr_to_amplitude(snr)
        inv_cfi = 3.0 / (A**2 * T**3)
        assert abs(res.bmse - inv_cfi) <= 0.25 * inv_cfi
        msgs.append(f"snr={snr}: bmse/CCRB={res.bmse / inv_cfi:.3f}")
    problem, prior = table_ii_problem(4.5)
    bath = ms.discretize(problem, BINS, DT)
    scheme = ms.MeasurementScheme(ms.SchemeKind.TIME_QUADRATURE)
    res45 = ms.bmse_monte_carlo(bath, scheme, prior, 20_000, seed=1234)
    A = snr_to_amplitude(4.5)
    qcrb = 3.0 / (A**2 * T**3)
    assert res45.bmse > 3.0 * qcrb
    msgs.append(f"snr=4.5: bmse/QCRB={res45.bmse / qcrb:.1f}")
    report("A5-iii", "; ".join(msgs) + f" [{time.time() - t0:.1f}s]")


def test_a5_optimal_beats_quadrature_at_threshold(mbmse_sweep):
    t0 = time.time()
    problem, prior = table_ii_problem(4.5)
    bath = ms.discretize(problem, BINS, DT)
    scheme = ms.MeasurementScheme(ms.SchemeKind.TIME_QUADRATURE)
    res = ms.bmse_monte_carlo(bath, scheme, prior, 20_000, seed=77)
    mbmse = mbmse_sweep[4.5][0]
    assert mbmse < res.bmse - 3 * res.se
    report("A5-iv", f"snr=4.5 mbmse={mbmse:.4f} < quadrature "
                    f"{res.bmse:.4f} - 3*{res.se:.1e} [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 6

def test_a6_rank_stability_under_grid_doubling():
    t0 = time.time()
    lines = []
    prev_rank = 0
    for snr in SNR_SWEEP:
        ranks = {}
        for n in (300, 600):
            problem, _ = table_ii_problem(snr, n=n)
            ranks[n] = sub.truncated_basis(geo.gram_coherent(problem)).rank
        assert ranks[300] >= prev_rank, "rank must be nondecreasing in SNR"
        prev_rank = ranks[300]
        if ranks[300] < 300:
            assert abs(ranks[600] - ranks[300]) <= 2, \
                f"snr={snr}: rank moved {ranks[300]} -> {ranks[600]}"
            lines.append(f"{snr}:{ranks[300]}/{ranks[600]}")
        else:
            # rank capped by the waveform count: the subspace is saturated at
            # this resolution and the stability premise (rank << n) is void
            assert ranks[600] >= ranks[300]
            lines.append(f"{snr}:{ranks[300]}/{ranks[600]}(saturated)")
    report("A6", " ".join(lines) + f" [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 7

def test_a7_fock_oracle_equivalence():
    t0 = time.time()
    T_red, bins, levels, n = 1.0, 5, 8, 40
    dt = T_red / (bins - 1)
    details = []
    for snr in (1.0, 3.0):
        A = snr / np.sqrt(2 * T_red)
        prior = bayes.uniform_prior(TWO_PI * 0.8, TWO_PI * 0.9, n)
        fam = sg.SignalFamily(sg.SignalKind.WINDOWED_SINUSOID, amplitude=A,
                              duration=T_red)
        problem = sg.EstimationProblem(fam, sg.Parameter.FREQUENCY,
                                       sg.Encoding.COHERENT, prior.grid, prior)
        bath = ms.discretize(problem, bins, dt)
        gram_closed = geo.gram_coherent(problem, bath=bath)
        cfg = sub.FockOracleConfig(bins=bins, levels=levels, dt=dt)
        states, defects = sub.fock_oracle_states(bath.amplitudes, cfg)
        gram_oracle = geo.GramMatrix(states.conj().T @ states, prior.grid,
                                     sg.Encoding.COHERENT, geo.Exactness.EXACT)
        sol_c = bayes.solve(sub.truncated_basis(gram_closed), prior,
                            with_outcome_bmse=False)
        sol_o = bayes.solve(sub.truncated_basis(gram_oracle), prior,
                            with_outcome_bmse=False)
        rel = abs(sol_c.mbmse - sol_o.mbmse) / sol_o.mbmse
        assert rel <= 0.01, f"snr={snr}: {sol_c.mbmse} vs {sol_o.mbmse}"
        details.append(f"snr={snr}: rel={rel:.1e} defect={np.max(defects):.1e}")
    report("A7", "; ".join(details) + f" [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 8

def test_a8_finite_prior_whitening_ratios():
    t0 = time.time()
    problem, _ = table_ii_problem(np.sqrt(20.0))   # A = 1: SNR 4.47
    sym = geo.symbol_from_problem(problem, many_cycles=True)
    omega_min = TWO_PI * 0.05
    two_dec = omega_min * (10.0**2 - 1.0)
    four_dec = omega_min * (10.0**4 - 1.0)
    r2, method2, _ = wh.finite_prior_mbmse_ratio(sym, two_dec)
    r4, method4, _ = wh.finite_prior_mbmse_ratio(sym, four_dec)
    assert abs(r2 - 0.06) <= 0.02, f"two-decade ratio {r2:.4f}"
    assert abs(r4 - 0.08) <= 0.02, f"four-decade ratio {r4:.4f}"
    assert r4 > r2
    report("A8", f"two decades ({method2}): {r2:.4f}; four decades "
                 f"({method4}): {r4:.4f} [{time.time() - t0:.1f}s]")


# --------------------------------------------------------------- criterion 9

def test_a9_divergence_diagnosis_matrix():
    t0 = time.time()
    problem, _ = table_ii_problem(np.sqrt(20.0))
    cases = {
        "gaussian": (geo.ToeplitzSymbol(lambda d: np.exp(-0.5 * d**2), 0.0, None,
                                        16.0, 0.004, None, "gauss"),
                     frozenset()),
        "constant": (geo.ToeplitzSymbol(
            lambda d: np.ones_like(np.asarray(d, dtype=float)), 1.0, None,
            20.0, 0.01, None, "const"), frozenset({wh.Divergence.DC_ATOM})),
        "sinc": (geo.ToeplitzSymbol(lambda d: sg.sinc(d) + 0j, 0.0, None,
                                    600 * np.pi, 0.05, np.pi, "sinc"),
                 frozenset({wh.Divergence.EDGE_DISCONTINUITY})),
        "frequency": (geo.symbol_from_problem(problem, many_cycles=True),
                      frozenset({wh.Divergence.DC_ATOM,
                                 wh.Divergence.EDGE_DISCONTINUITY})),
    }
    seen = {}
    for name, (symbol, expected) in cases.items():
        res = wh.mbmse_flat_prior(symbol)
        assert res.diagnosis == expected, f"{name}: got {res.diagnosis}"
        assert res.divergent == bool(expected)
        seen[name] = sorted(d.value for d in res.diagnosis) or ["none"]
    report("A9", "; ".join(f"{k}->{'+'.join(v)}" for k, v in seen.items())
           + f" [{time.time() - t0:.1f}s]")
