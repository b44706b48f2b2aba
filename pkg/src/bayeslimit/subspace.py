"""Low-rank waveform-subspace pipeline and the brute-force Fock-space oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MemoryCap, RankZero, TruncationInadequate

DEFAULT_TAU_RELATIVE = 1e-8
DEFAULT_MEMORY_CAP = 2**20  # amplitudes per state vector


@dataclass(frozen=True)
class WaveformBasis:
    """Truncated eigenbasis of a Gram matrix spanning the waveform subspace."""

    vectors: np.ndarray      # (n, r), semi-unitary columns
    eigenvalues: np.ndarray  # (r,), descending, all > threshold
    threshold: float
    gram: object             # source GramMatrix

    @property
    def rank(self):
        return int(self.eigenvalues.size)

    def coefficients(self):
        return state_coefficients(self)


def _fix_phases(vectors):
    """Make the largest-magnitude entry of each eigenvector real positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    lead = vectors[idx, np.arange(vectors.shape[1])]
    phase = np.where(np.abs(lead) > 0, lead / np.abs(lead), 1.0)
    return vectors / phase[None, :]


def truncated_basis(gram, tau=None):
    """Eigendecomposition of the Gram matrix, discarding eigenvalues <= tau.

    tau defaults to 1e-8 times the largest eigenvalue.  Ordering is
    deterministic: descending eigenvalue, eigenvector phase fixed by the
    leading component.
    """
    vals, vecs = np.linalg.eigh(gram.entries)
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    if tau is None:
        tau = DEFAULT_TAU_RELATIVE * float(vals[0])
    keep = vals > tau
    if not np.any(keep):
        raise RankZero(f"no eigenvalue above tau = {tau:g}")
    return WaveformBasis(_fix_phases(vecs[:, keep]), vals[keep].copy(), float(tau), gram)


def state_coefficients(basis):
    """Rows are the states' coefficients in the orthonormal basis.

    Row j reconstructs state j as sum_l conj(U[j, l]) sqrt(S[l]) |phi_l>;
    the conjugate-bilinear Gram of the rows reproduces the input Gram up
    to the truncation residual.
    """
    return basis.vectors.conj() * np.sqrt(basis.eigenvalues)[None, :]


def reconstruction_error(basis):
    """Max-entry error of the truncated reconstruction of the Gram matrix."""
    c = state_coefficients(basis)
    rec = np.einsum("jl,kl->jk", c.conj(), c)
    return float(np.max(np.abs(rec - basis.gram.entries)))


def dump_basis(basis, csv_path, json_path, problem_desc=None):
    """Write the retained spectrum as CSV plus reproducibility metadata."""
    import json
    from pathlib import Path

    lines = ["index,eigenvalue"]
    lines += [f"{i},{repr(float(v))}" for i, v in enumerate(basis.eigenvalues)]
    Path(csv_path).write_text("\n".join(lines) + "\n")
    meta = {
        "n": int(basis.gram.entries.shape[0]),
        "rank": basis.rank,
        "tau": basis.threshold,
        "problem": problem_desc or {},
    }
    Path(json_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class FockOracleConfig:
    """Explicit tensor-product simulation: M time bins, d Fock levels each."""

    bins: int
    levels: int
    dt: float = 1.0
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if self.levels ** self.bins > self.memory_cap:
            raise MemoryCap(
                f"d^M = {self.levels}^{self.bins} exceeds the cap of "
                f"{self.memory_cap} amplitudes")

    def adequacy(self, amplitudes):
        """Heuristic: per-bin |alpha|^2 should stay below 0.2 * d."""
        worst = float(np.max(np.abs(amplitudes) ** 2))
        return worst <= 0.2 * self.levels, worst


def _coherent_column(alpha, levels):
    n = np.arange(levels)
    logfact = np.cumsum(np.log(np.maximum(n, 1)))
    aa = np.abs(alpha)
    if aa == 0.0:
        v = np.zeros(levels, dtype=complex)
        v[0] = 1.0
        return v
    logmag = n * np.log(aa) - 0.5 * logfact - 0.5 * aa**2
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def fock_oracle_states(amplitudes, config, max_defect=None):
    """Explicit truncated coherent product states, one per amplitude row.

    amplitudes: (n, M) per-bin coherent amplitudes.  Each bin is expanded
    to `config.levels` Fock levels; the product state is renormalized.
    Returns (states, defects) where states is (d^M, n) and defects holds
    the per-state norm loss 1 - ||pre-normalization||^2.  With max_defect
    set, a defect above it raises TruncationInadequate.
    """
    amplitudes = np.atleast_2d(np.asarray(amplitudes, dtype=complex))
    n, bins = amplitudes.shape
    if bins != config.bins:
        raise ValueError(f"amplitude table has {bins} bins, config says {config.bins}")
    dim = config.levels ** config.bins
    states = np.empty((dim, n), dtype=complex)
    defects = np.empty(n)
    for j in range(n):
        psi = np.ones(1, dtype=complex)
        for b in range(bins):
            psi = np.kron(psi, _coherent_column(amplitudes[j, b], config.levels))
        norm2 = float(np.real(np.vdot(psi, psi)))
        defects[j] = 1.0 - norm2
        if max_defect is not None and defects[j] > max_defect:
            raise TruncationInadequate(
                f"state {j}: truncation defect {defects[j]:.3e} > {max_defect:g}")
        states[:, j] = psi / np.sqrt(norm2)
    return states, defects
