"""Config-driven experiment runner emitting CSV/JSON artifacts with manifests."""
from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bayes, geometry, measurements, signals, subspace, whitening

TWO_PI = 2.0 * np.pi
OUTDIR_ENV = "BAYESLIMIT_OUTDIR"

EXPERIMENTS = ("fig2", "fig3", "displacement", "phase", "whitening-ratio",
               "rank-sweep", "oracle-check")

DEFAULTS = {
    "T": 10.0,                      # integration time, s
    "delta_omega": TWO_PI * 0.9,    # prior width, rad/s
    "omega0": TWO_PI * 0.5,         # prior centre, rad/s
    "phi": 0.0,
    "dt": 0.1,                      # time resolution, s
    "n": 300,                       # waveforms / grid points
    "snr": "0.5,1,2,3,4.5,6,8,12,16,20",
    "trials": 20000,
    "seed": 1234,
    "amplitude": 1.0,               # fig2 signal amplitude, sqrt(Hz)
    "sigma": 1.0,                   # displacement prior width
    "levels": 30,                   # Fock truncation for the oracles
    "mu": "0.25,1,4,16",            # phase-symbol Poisson rates
    "decades": "2,4",               # whitening-ratio prior spans
    "workers": 1,
}

FLOAT_KEYS = {"T", "delta_omega", "omega0", "phi", "dt", "amplitude", "sigma"}
INT_KEYS = {"n", "trials", "seed", "levels", "workers"}
LIST_KEYS = {"snr", "mu", "decades"}


def _parse_list(raw):
    if isinstance(raw, (list, tuple)):
        vals = [float(x) for x in raw]
    else:
        cleaned = str(raw).replace(",", " ").strip("[] ")
        vals = [float(x) for x in cleaned.split()]
    if not vals:
        raise ValueError("empty list value")
    return vals


def load_config(path):
    """Read `key = value` sections (INI) or a manifest/params JSON."""
    p = Path(path)
    if p.suffix == ".json":
        payload = json.loads(p.read_text())
        return dict(payload.get("params", payload))
    cp = configparser.ConfigParser()
    with p.open() as fh:
        cp.read_file(fh)
    merged = {}
    for section in cp.sections():
        merged.update(dict(cp[section]))
    return merged


def resolve_params(args):
    params = dict(DEFAULTS)
    if args.config:
        params.update(load_config(args.config))
    for key in params:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            params[key] = flag
    for k in FLOAT_KEYS:
        params[k] = float(params[k])
    for k in INT_KEYS:
        params[k] = int(params[k])
    for k in LIST_KEYS:
        params[k] = _parse_list(params[k])
    if params["T"] <= 0 or params["dt"] <= 0 or params["sigma"] <= 0:
        raise ValueError("physical parameters must be positive")
    if any(s <= 0 for s in params["snr"]):
        raise ValueError("SNR values must be positive")
    # discretization sanity (enforced again inside discretize)
    if params["omega0"] + 0.5 * params["delta_omega"] >= np.pi / params["dt"]:
        raise ValueError("frequency grid reaches the Nyquist bound pi/dt")
    return params


def table_problem(params, amplitude, n=None):
    prior = bayes.uniform_prior(params["omega0"], params["delta_omega"],
                                params["n"] if n is None else n)
    fam = signals.SignalFamily(signals.SignalKind.WINDOWED_SINUSOID,
                               amplitude=amplitude, phase=params["phi"],
                               duration=params["T"])
    problem = signals.EstimationProblem(fam, signals.Parameter.FREQUENCY,
                                        signals.Encoding.COHERENT, prior.grid, prior)
    return problem, prior


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------- experiments

def _mbmse_point(params, snr):
    A = snr / np.sqrt(2.0 * params["T"])
    problem, prior = table_problem(params, A)
    gram = geometry.gram_coherent(problem)
    basis = subspace.truncated_basis(gram)
    sol = bayes.solve(basis, prior, with_outcome_bmse=False)
    qcrb = 3.0 / (A**2 * params["T"] ** 3)
    return sol.mbmse, prior.variance, qcrb, basis.rank


def _fig3_point(args):
    params, snr = args
    A = snr / np.sqrt(2.0 * params["T"])
    problem, prior = table_problem(params, A)
    bins = int(np.ceil(params["T"] / params["dt"])) + 1
    bath = measurements.discretize(problem, bins, params["dt"])
    mbmse, prior_var, qcrb, rank = _mbmse_point(params, snr)
    rows = []
    schemes = [("time_quadrature", measurements.SchemeKind.TIME_QUADRATURE),
               ("time_counting", measurements.SchemeKind.TIME_COUNTING),
               ("fourier_counting", measurements.SchemeKind.FOURIER_COUNTING)]
    for name, kind in schemes:
        scheme = measurements.MeasurementScheme(kind, seed=params["seed"])
        res = measurements.bmse_monte_carlo(bath, scheme, prior, params["trials"],
                                            seed=params["seed"])
        rows.append((snr, name, res.bmse, res.se, mbmse, qcrb, prior_var, rank))
    sym = geometry.symbol_from_problem(problem, many_cycles=True)
    res = measurements.whitening_projection_bmse(sym, prior, params["trials"],
                                                 seed=params["seed"])
    rows.append((snr, "whitening_projection", res.bmse, res.se, mbmse, qcrb,
                 prior_var, rank))
    return rows


def run_fig3(params, outdir):
    points = [(params, snr) for snr in params["snr"]]
    if params["workers"] > 1:
        with ProcessPoolExecutor(max_workers=params["workers"]) as pool:
            chunks = list(pool.map(_fig3_point, points))
    else:
        chunks = [_fig3_point(p) for p in points]
    rows = [row for chunk in chunks for row in chunk]
    path = outdir / "fig3_sweep.csv"
    write_csv(path, ["snr", "scheme", "bmse", "se", "mbmse", "qcrb",
                     "prior_var", "rank"], rows)
    return [path]


def run_fig2(params, outdir):
    A, T = params["amplitude"], params["T"]
    problem, _ = table_problem(params, A)
    sym = geometry.symbol_from_problem(problem, many_cycles=True)
    lags = np.linspace(-4 * T, 4 * T, 2001)
    sym_rows = list(zip(lags, np.real(sym(lags))))
    k = np.linspace(-4.5 * T, 4.5 * T, 9001)
    meas = geometry.spectral_measure(sym, k)
    p1 = outdir / "fig2_symbol.csv"
    p2 = outdir / "fig2_measure.csv"
    write_csv(p1, ["lag_rad_per_s", "overlap"], sym_rows)
    write_csv(p2, ["k_s", "density"], list(zip(meas.k, meas.density)))
    write_json(outdir / "fig2_meta.json",
               {"atom_weight": meas.atom_weight, "norm_defect": meas.norm_defect,
                "amplitude": A, "T": T})
    return [p1, p2]


def run_displacement(params, outdir):
    sigma = params["sigma"]
    prior = bayes.gaussian_prior(0.0, sigma, 401, span=6.0)
    alphas = (1j * prior.grid / np.sqrt(2.0))[:, None]
    config = subspace.FockOracleConfig(bins=1, levels=params["levels"])
    states, defects = subspace.fock_oracle_states(alphas, config)
    gram = geometry.GramMatrix(states.conj().T @ states, prior.grid,
                               signals.Encoding.COHERENT, geometry.Exactness.EXACT)
    basis = subspace.truncated_basis(gram)
    sol = bayes.solve(basis, prior)
    toy_q = bayes.displacement_toy(sigma, bayes.DisplacementScheme.QUADRATURE)
    toy_n = bayes.displacement_toy(sigma, bayes.DisplacementScheme.NUMBER_RESOLVING)
    payload = {
        "sigma": sigma,
        "mbmse_exact": toy_q.mbmse,
        "mbmse_pipeline": sol.mbmse,
        "quadrature": toy_q.bmse,
        "counting": toy_n.bmse,
        "estimator_gain": toy_q.estimator_gain,
        "max_truncation_defect": float(np.max(defects)),
        "rank": basis.rank,
        "solution": bayes.solution_to_dict(sol),
    }
    path = outdir / "displacement.json"
    write_json(path, payload)
    return [path]


def run_phase(params, outdir):
    rows = []
    for mu in params["mu"]:
        idx = np.arange(0, max(40, int(mu + 12 * np.sqrt(mu) + 20)))
        w = np.exp(idx * np.log(mu) - mu - np.cumsum(np.log(np.maximum(idx, 1))))
        meas = geometry.DiscreteSpectralMeasure(idx, w, abs(w.sum() - 1.0))
        res = whitening.circulant_whitening(meas, whitening.CovariantCost.HOLEVO_VARIANCE)
        rows.append((mu, res.cost, res.norm_defect))
    path = outdir / "phase_holevo.csv"
    write_csv(path, ["mu", "holevo_cost", "kernel_norm_defect"], rows)
    return [path]


def run_whitening_ratio(params, outdir):
    A, T = params["amplitude"], params["T"]
    problem, _ = table_problem(params, A)
    sym = geometry.symbol_from_problem(problem, many_cycles=True)
    omega_min = params["omega0"] - 0.5 * params["delta_omega"]
    widths = [omega_min * (10.0**d - 1.0) for d in params["decades"]]
    rows = whitening.finite_prior_ratio(sym, widths)
    path = outdir / "whitening_ratio.csv"
    write_csv(path, ["decades", "width", "ratio", "method", "n"],
              [(d, r["width"], r["ratio"], r["method"], r["n"])
               for d, r in zip(params["decades"], rows)])
    # covariant-likelihood kernel and divergence diagnosis for this symbol
    kern = whitening.projection_kernel(sym, params["delta_omega"])
    kpath = outdir / "whitening_kernel.csv"
    write_csv(kpath, ["lag_rad_per_s", "density"],
              list(zip(kern.lags, kern.values)))
    diag = whitening.mbmse_flat_prior(sym)
    dpath = outdir / "whitening_diagnosis.json"
    write_json(dpath, {
        "divergent": bool(diag.divergent),
        "diagnosis": sorted(d.value for d in diag.diagnosis),
        "jump_locations": [float(x) for x in diag.jump_locations],
        "flat_prior_mbmse": None if diag.divergent else diag.value,
    })
    return [path, kpath, dpath]


def run_rank_sweep(params, outdir):
    rows = []
    outputs = []
    for snr in params["snr"]:
        A = snr / np.sqrt(2.0 * params["T"])
        for n in (params["n"], 2 * params["n"]):
            problem, prior = table_problem(params, A, n=n)
            gram = geometry.gram_coherent(problem)
            basis = subspace.truncated_basis(gram)
            rows.append((snr, n, basis.rank))
            if n == params["n"]:
                tag = f"snr{snr:g}".replace(".", "p")
                csv_p = outdir / f"basis_{tag}.csv"
                json_p = outdir / f"basis_{tag}.json"
                subspace.dump_basis(basis, csv_p, json_p,
                                    {"snr": snr, "T": params["T"], "n": n,
                                     "omega0": params["omega0"],
                                     "delta_omega": params["delta_omega"]})
                outputs += [csv_p, json_p]
    path = outdir / "rank_sweep.csv"
    write_csv(path, ["snr", "n", "rank"], rows)
    return [path] + outputs


def run_oracle_check(params, outdir):
    T, bins, levels, n = 1.0, 5, 8, 40
    dt = T / (bins - 1)
    out = {}
    for snr in (1.0, 3.0):
        A = snr / np.sqrt(2.0 * T)
        prior = bayes.uniform_prior(TWO_PI * 0.8, TWO_PI * 0.9, n)
        fam = signals.SignalFamily(signals.SignalKind.WINDOWED_SINUSOID,
                                   amplitude=A, duration=T)
        problem = signals.EstimationProblem(fam, signals.Parameter.FREQUENCY,
                                            signals.Encoding.COHERENT,
                                            prior.grid, prior)
        bath = measurements.discretize(problem, bins, dt)
        gram_cf = geometry.gram_coherent(problem, bath=bath)
        config = subspace.FockOracleConfig(bins=bins, levels=levels, dt=dt)
        states, defects = subspace.fock_oracle_states(bath.amplitudes, config)
        gram_or = geometry.GramMatrix(states.conj().T @ states, prior.grid,
                                      signals.Encoding.COHERENT,
                                      geometry.Exactness.EXACT)
        sol_cf = bayes.solve(subspace.truncated_basis(gram_cf), prior,
                             with_outcome_bmse=False)
        sol_or = bayes.solve(subspace.truncated_basis(gram_or), prior,
                             with_outcome_bmse=False)
        out[f"snr_{snr:g}"] = {
            "mbmse_subspace": sol_cf.mbmse,
            "mbmse_oracle": sol_or.mbmse,
            "relative_gap": abs(sol_cf.mbmse - sol_or.mbmse) / sol_or.mbmse,
            "max_overlap_deviation": float(np.max(np.abs(gram_cf.entries - gram_or.entries))),
            "max_truncation_defect": float(np.max(defects)),
        }
    path = outdir / "oracle_check.json"
    write_json(path, out)
    return [path]


RUNNERS = {
    "fig2": run_fig2,
    "fig3": run_fig3,
    "displacement": run_displacement,
    "phase": run_phase,
    "whitening-ratio": run_whitening_ratio,
    "rank-sweep": run_rank_sweep,
    "oracle-check": run_oracle_check,
}


def run(experiment, params, outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    outputs = RUNNERS[experiment](params, outdir)
    manifest = {
        "experiment": experiment,
        "params": params,
        "version": __version__,
        "outputs": [p.name for p in outputs],
        "wall_time_s": round(time.time() - t0, 3),
    }
    write_json(outdir / f"{experiment.replace('-', '_')}_manifest.json", manifest)
    return outputs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bayeslimit",
        description="Bayesian quantum-limit experiments: fundamental bounds and "
                    "measurement-scheme comparisons for waveform parameter estimation.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file or manifest JSON")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--snr", default=None, help="comma-separated SNR sweep")
        p.add_argument("--sigma", type=float, default=None)
        p.add_argument("--amplitude", type=float, default=None)
        p.add_argument("--T", type=float, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--levels", type=int, default=None)
        p.add_argument("--mu", default=None)
        p.add_argument("--decades", default=None)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    outdir = args.out or os.environ.get(OUTDIR_ENV, "out")
    try:
        params = resolve_params(args)
        outputs = run(args.experiment, params, outdir)
    except Exception as exc:  # noqa: BLE001 - reported as machine-readable JSON
        payload = {"error": type(exc).__name__, "message": str(exc)}
        try:
            Path(outdir).mkdir(parents=True, exist_ok=True)
            write_json(Path(outdir) / "error.json", payload)
        except OSError:
            pass
        print(json.dumps(payload), file=sys.stderr)
        return 1
    for p in outputs:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
