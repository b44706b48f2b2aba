"""Render bayeslimit sweep/spectrum CSVs into static charts.

Two chart kinds are supported:

* ``fig3``: BMSE versus SNR on log-log axes, one series per measurement
  scheme, reference lines for the quantum Cramér–Rao bound and the prior
  variance, and a shaded band below the QCRB marking the inaccessible
  region.
* ``fig2``: overlay of the lag symbol and its spectral measure, with
  vertical markers at the detected density discontinuities.

Every plotted artist carries an SVG group id (``series-<name>``,
``ref-qcrb``, ``ref-prior``, ``band-infeasible``, ``marker-edge-*``) so the
vector output can be checked mechanically.
"""
from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIG3_COLUMNS = ("snr", "scheme", "bmse", "se", "mbmse", "qcrb", "prior_var")


class RenderError(Exception):
    pass


@dataclass
class PlotSpec:
    inputs: list
    kind: str
    output: Path
    log_x: bool = True
    log_y: bool = True
    extra_raster: bool = field(default=True)


def read_csv(path):
    path = Path(path)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise RenderError(f"{path}: no data rows")
    header = [h.strip() for h in rows[0]]
    return header, rows[1:]


def columns(path, required):
    header, rows = read_csv(path)
    missing = [c for c in required if c not in header]
    if missing:
        raise RenderError(f"{path}: missing column(s) {', '.join(missing)}")
    idx = {c: header.index(c) for c in header}
    out = {c: [] for c in header}
    for row in rows:
        for c in header:
            out[c].append(row[idx[c]])
    return out


def render_fig3(spec):
    data = columns(spec.inputs[0], FIG3_COLUMNS)
    snr = np.array([float(x) for x in data["snr"]])
    bmse = np.array([float(x) for x in data["bmse"]])
    se = np.array([float(x) for x in data["se"]])
    mbmse = np.array([float(x) for x in data["mbmse"]])
    qcrb = np.array([float(x) for x in data["qcrb"]])
    prior = np.array([float(x) for x in data["prior_var"]])
    schemes = data["scheme"]

    fig, ax = plt.subplots(figsize=(7, 5))
    order = np.argsort(snr)
    for name in sorted(set(schemes)):
        mask = np.array([s == name for s in schemes])
        s_ord = np.argsort(snr[mask])
        line = ax.errorbar(snr[mask][s_ord], bmse[mask][s_ord],
                           yerr=3 * se[mask][s_ord], marker="o", ms=4,
                           capsize=2, label=name.replace("_", " "))
        line.lines[0].set_gid(f"series-{name}")
    uniq = {}
    for i in order:
        uniq[snr[i]] = (mbmse[i], qcrb[i], prior[i])
    s_axis = np.array(sorted(uniq))
    mb, qc, pv = (np.array([uniq[s][j] for s in s_axis]) for j in range(3))
    opt, = ax.plot(s_axis, mb, "k-", lw=2, label="optimal (MBMSE)")
    opt.set_gid("series-optimal")
    ref_q, = ax.plot(s_axis, qc, "--", color="gray", label="QCRB")
    ref_q.set_gid("ref-qcrb")
    ref_p, = ax.plot(s_axis, pv, ":", color="gray", label="prior variance")
    ref_p.set_gid("ref-prior")
    floor = min(qc.min(), bmse.min()) * 1e-2
    band = ax.fill_between(s_axis, floor, qc, color="0.85", zorder=0,
                           label="inaccessible")
    band.set_gid("band-infeasible")
    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")
    ax.set_xlabel(r"SNR $A\sqrt{2T}$")
    ax.set_ylabel(r"BMSE  [(rad/s)$^2$]")
    ax.legend(fontsize=8, loc="lower left")
    ax.set_title("Bayesian MSE of measurement schemes vs SNR")
    return fig


def detect_edges(k, density):
    """Locations of the two strongest interior discontinuities, one per sign."""
    inc = np.abs(np.diff(density))
    marks = []
    for sign in (-1.0, 1.0):
        mask = (np.sign(0.5 * (k[1:] + k[:-1])) == sign) & \
               (np.abs(0.5 * (k[1:] + k[:-1])) > 0.05 * np.max(np.abs(k)))
        if not np.any(mask):
            continue
        i = np.argmax(np.where(mask, inc, -1.0))
        marks.append(0.5 * (k[i] + k[i + 1]))
    return marks


def render_fig2(spec):
    if len(spec.inputs) < 2:
        raise RenderError("fig2 needs the symbol CSV and the measure CSV")
    sym = columns(spec.inputs[0], ("lag_rad_per_s", "overlap"))
    meas = columns(spec.inputs[1], ("k_s", "density"))
    lag = np.array([float(x) for x in sym["lag_rad_per_s"]])
    overlap = np.array([float(x) for x in sym["overlap"]])
    k = np.array([float(x) for x in meas["k_s"]])
    dens = np.array([float(x) for x in meas["density"]])

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6))
    l1, = ax1.plot(lag, overlap, label="overlap symbol")
    l1.set_gid("series-symbol")
    ax1.set_xlabel("parameter lag  [rad/s]")
    ax1.set_ylabel("overlap")
    ax1.legend(fontsize=8)
    l2, = ax2.plot(k, dens, label="spectral measure")
    l2.set_gid("series-measure")
    for j, edge in enumerate(detect_edges(k, dens)):
        ln = ax2.axvline(edge, color="crimson", ls="--", lw=1)
        ln.set_gid(f"marker-edge-{j}")
        ax2.annotate(f"k = {edge:.2f}", (edge, 0.9 * dens.max()), fontsize=7,
                     rotation=90, ha="right")
    ax2.set_xlabel("k  [s]")
    ax2.set_ylabel("density")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    return fig


def render(spec):
    if spec.kind == "fig3":
        fig = render_fig3(spec)
    elif spec.kind == "fig2":
        fig = render_fig2(spec)
    else:
        raise RenderError(f"unknown chart kind {spec.kind!r}")
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    written = [out]
    if spec.extra_raster:
        twin = out.with_suffix(".png" if out.suffix == ".svg" else ".svg")
        fig.savefig(twin, dpi=150)
        written.append(twin)
    plt.close(fig)
    return written


def main(argv=None):
    parser = argparse.ArgumentParser(prog="bayeslimit-plots",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--input", action="append", required=True,
                        help="input CSV (repeat for fig2: symbol, then measure)")
    parser.add_argument("--kind", choices=("fig2", "fig3"), required=True)
    parser.add_argument("--output", required=True)
    parser.add_argument("--linear-x", action="store_true")
    parser.add_argument("--linear-y", action="store_true")
    parser.add_argument("--no-raster", action="store_true",
                        help="write only the requested file")
    args = parser.parse_args(argv)
    spec = PlotSpec(inputs=[Path(p) for p in args.input], kind=args.kind,
                    output=Path(args.output), log_x=not args.linear_x,
                    log_y=not args.linear_y, extra_raster=not args.no_raster)
    try:
        written = render(spec)
    except (RenderError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
