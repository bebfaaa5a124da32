"""Linear ion-crystal structure: equilibrium positions, longitudinal normal
modes, and per-ion sideband coupling strengths.

Everything is dimensionless: lengths in the Coulomb-harmonic length scale,
frequencies in units of the single-ion axial frequency (so the lowest mode
sits exactly at 1), times in the inverse of that frequency.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

__all__ = [
    "ChainGeometry",
    "ModeTable",
    "LambDickeTable",
    "potential_gradient",
    "equilibrium_positions",
    "normal_modes",
    "lamb_dicke",
]

_GRAD_TOL = 1e-10


def potential_gradient(positions) -> np.ndarray:
    """Gradient of V(u) = sum u_i^2/2 + sum_{i<j} 1/|u_i - u_j|."""
    u = np.asarray(positions, dtype=float)
    g = u.copy()
    if u.size > 1:
        d = u[:, None] - u[None, :]
        np.fill_diagonal(d, np.inf)
        g -= np.sum(np.sign(d) / d**2, axis=1)
    return g


def _hessian(u: np.ndarray) -> np.ndarray:
    n = u.size
    if n == 1:
        return np.array([[1.0]])
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    inv3 = 1.0 / d**3
    h = -2.0 * inv3
    np.fill_diagonal(h, 1.0 + 2.0 * inv3.sum(axis=1))
    return h


@dataclass(frozen=True)
class ChainGeometry:
    """Equilibrium coordinates of the crystal, ascending along the trap axis."""

    positions: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.positions, dtype=float)
        if u.ndim != 1 or u.size < 1:
            raise ValueError("positions must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(u)):
            raise ValueError("positions must be finite")
        if u.size > 1 and not np.all(np.diff(u) > 0):
            raise ValueError("positions must be strictly ascending")
        if np.max(np.abs(u + u[::-1])) > 1e-10:
            raise ValueError("positions must be antisymmetric about the trap centre")
        if np.max(np.abs(potential_gradient(u))) > _GRAD_TOL:
            raise ValueError("positions are not an equilibrium of the chain potential")
        u = u.copy()
        u.flags.writeable = False
        object.__setattr__(self, "positions", u)

    @property
    def n_ions(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class ModeTable:
    """Longitudinal normal modes: frequencies (ascending, units of the axial
    frequency) and orthonormal mode vectors, column l = mode l.

    The lowest mode is the in-phase (centre-of-mass) mode; its frequency is
    exactly 1 and its vector exactly uniform, which this table stores exactly.
    """

    frequencies: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.frequencies, dtype=float)
        b = np.asarray(self.vectors, dtype=float)
        n = mu.size
        if b.shape != (n, n):
            raise ValueError("vectors must be an N x N table matching frequencies")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(b))):
            raise ValueError("mode data must be finite")
        if np.any(np.diff(mu) < 0):
            raise ValueError("frequencies must be ascending")
        if abs(mu[0] - 1.0) > 1e-8:
            raise ValueError("lowest mode frequency must equal 1 (in-phase mode)")
        if np.max(np.abs(b.T @ b - np.eye(n))) > 1e-10:
            raise ValueError("mode vectors must be orthonormal")
        if np.max(np.abs(b[:, 0] - 1.0 / np.sqrt(n))) > 1e-8:
            raise ValueError("lowest mode vector must be uniform")
        mu = mu.copy()
        b = b.copy()
        mu.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "frequencies", mu)
        object.__setattr__(self, "vectors", b)

    @property
    def n_ions(self) -> int:
        return self.frequencies.size


@dataclass(frozen=True)
class LambDickeTable:
    """Per-ion, per-mode recoil coupling: entries[i, l] = eta sqrt(N) b[i, l] / sqrt(mu_l)."""

    eta_com: float
    entries: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.eta_com) and self.eta_com > 0):
            raise ValueError("eta_com must be positive and finite")
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("entries must be an N x N table")
        e = e.copy()
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)


def equilibrium_positions(n_ions: int) -> ChainGeometry:
    """Minimise the chain potential with a damped Newton iteration.

    Initial guess: uniform spacing over a span 2 N^0.56.  Steps are halved
    until they preserve the ion ordering and do not increase the gradient
    norm.  Converges to max|gradient| <= 1e-10 for the supported 1 <= N <= 64.
    """
    if not 1 <= n_ions <= 64:
        raise ValueError("n_ions must lie in 1..64")
    if n_ions == 1:
        return ChainGeometry(np.zeros(1))
    u = np.linspace(-1.0, 1.0, n_ions) * n_ions**0.56
    gmax = np.inf
    for _ in range(200):
        g = potential_gradient(u)
        gmax = np.max(np.abs(g))
        if gmax <= 1e-13:
            break
        step = np.linalg.solve(_hessian(u), -g)
        lam = 1.0
        for _ in range(60):
            trial = u + lam * step
            if np.all(np.diff(trial) > 0) and np.max(
                np.abs(potential_gradient(trial))
            ) < gmax:
                u = trial
                break
            lam *= 0.5
        else:
            raise SolverError(
                f"equilibrium line search stalled at max|gradient| = {gmax:.3e}"
            )
    else:
        raise SolverError(
            f"equilibrium iteration budget exhausted, max|gradient| = {gmax:.3e}"
        )
    # The potential is reflection symmetric; remove the solver's rounding skew.
    u = 0.5 * (u - u[::-1])
    return ChainGeometry(u)


def normal_modes(geometry: ChainGeometry) -> ModeTable:
    """Diagonalise the Hessian of the chain potential at equilibrium.

    Frequencies are square roots of the eigenvalues.  Mode vectors carry the
    sign convention that the first entry above 1e-10 in magnitude is
    positive, so downstream coupling signs are reproducible across platforms.
    The uniform vector is an exact eigenvector of the Hessian with eigenvalue
    1 (the trap term is the identity and the Coulomb rows sum to zero), so
    the lowest mode is stored with its exact values rather than the solver's
    rounding of them.
    """
    n = geometry.n_ions
    h = _hessian(geometry.positions)
    evals, evecs = np.linalg.eigh(h)
    if evals[0] <= 0:
        raise RuntimeError("non-positive mode eigenvalue: geometry is not a minimum")
    if n > 1 and np.min(np.diff(evals)) < 1e-6:
        raise RuntimeError("near-degenerate mode spectrum; refusing to pick vectors")
    if abs(np.sqrt(evals[0]) - 1.0) > 1e-8:
        raise RuntimeError("lowest mode is not the in-phase mode; bad geometry")
    mu = np.sqrt(evals)
    for l in range(n):
        col = evecs[:, l]
        lead = np.flatnonzero(np.abs(col) > 1e-10)[0]
        if col[lead] < 0:
            evecs[:, l] = -col
    mu[0] = 1.0
    evecs[:, 0] = 1.0 / np.sqrt(n)
    return ModeTable(frequencies=mu, vectors=evecs)


def lamb_dicke(modes: ModeTable, eta: float) -> LambDickeTable:
    """Recoil coupling of every ion to every mode characterised by the
    in-phase-mode parameter ``eta``; entries scale linearly with ``eta``.

    The in-phase column is identically ``eta`` for every ion.
    """
    if not (np.isfinite(eta) and eta > 0):
        raise ValueError("eta must be positive and finite")
    n = modes.n_ions
    entries = eta * np.sqrt(n) * modes.vectors / np.sqrt(modes.frequencies)[None, :]
    return LambDickeTable(eta_com=float(eta), entries=entries)
