"""Truncated Fock-space numerics for a single bosonic mode.

Coherent amplitudes, displacement matrices, overlaps and fidelities.  The
only approximation anywhere in this module is the number-basis cutoff, and
every object that can suffer from it exposes an explicit tail-weight
diagnostic instead of hiding the truncation.

States are stored unnormalized; norms are computed on demand.  All values
are immutable after construction and safe to share between threads.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncationWarning",
    "FockVector",
    "DisplacementMatrix",
    "recommended_cutoff",
    "coherent_fock",
    "displacement_matrix",
    "apply_displacement",
    "coherent_overlap",
    "inner",
    "norm",
    "fidelity_pure",
]


class TruncationWarning(UserWarning):
    """A truncated-basis result carries non-negligible tail weight."""


def _finite_complex(z: complex, name: str) -> complex:
    z = complex(z)
    if not np.isfinite(z):
        raise ValueError(f"{name} must be finite, got {z!r}")
    return z


def recommended_cutoff(gamma_max: float) -> int:
    """Cutoff that keeps the Poisson tail of every coherent component below ~1e-10.

    ``gamma_max`` is the largest coherent amplitude magnitude reachable in the
    computation (initial amplitude plus all accumulated displacements).
    """
    g = abs(float(gamma_max))
    return int(np.ceil(g * g + 6.0 * g + 10.0))


@dataclass(frozen=True)
class FockVector:
    """Pure state of one mode on the number basis ``|0..M>``, unnormalized.

    ``amps[n]`` is the amplitude on phonon number ``n``; the cutoff is
    ``len(amps) - 1``.  ``tail_weight`` reports the probability weight on the
    top three levels, the standard proxy for truncation damage.
    """

    amps: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.amps, dtype=np.complex128)
        if arr.ndim != 1:
            raise ValueError("amplitudes must form a one-dimensional sequence")
        if arr.size < 2:
            raise ValueError("cutoff must be at least 1")
        if not np.all(np.isfinite(arr)):
            raise ValueError("amplitudes must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "amps", arr)

    @property
    def cutoff(self) -> int:
        return self.amps.size - 1

    @property
    def tail_weight(self) -> float:
        """Weight |amps[n]|^2 summed over the levels n >= cutoff - 2."""
        return float(np.sum(np.abs(self.amps[-3:]) ** 2))

    def to_json(self) -> list[list[float]]:
        """Serialize as a JSON-ready list of [re, im] pairs."""
        return [[float(a.real), float(a.imag)] for a in self.amps]

    @classmethod
    def from_json(cls, pairs) -> "FockVector":
        return cls(np.array([complex(re, im) for re, im in pairs]))


@dataclass(frozen=True)
class DisplacementMatrix:
    """Number-basis matrix of D(beta) = exp(beta a^+ - beta* a), truncated.

    ``entries[m, n]`` holds <m|D(beta)|n>.  The matrix is unitary up to
    truncation; the error is confined to columns within a few |beta|^2 of
    the cutoff.
    """

    beta: complex
    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
            raise ValueError("entries must be a square matrix of size >= 2")
        if not np.all(np.isfinite(arr)):
            raise ValueError("entries must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)
        object.__setattr__(self, "beta", _finite_complex(self.beta, "beta"))

    @property
    def cutoff(self) -> int:
        return self.entries.shape[0] - 1


def coherent_fock(alpha: complex, cutoff: int) -> FockVector:
    """Coherent state |alpha> truncated at ``cutoff`` phonons.

    amplitude(n) = exp(-|alpha|^2/2) alpha^n / sqrt(n!) via the ratio
    recurrence, which stays stable far beyond where explicit factorials
    overflow.  When |alpha|^2 > cutoff/2 the Poisson peak crowds the cutoff
    and a :class:`TruncationWarning` is issued; the state is still returned,
    with ``tail_weight`` quantifying the damage.
    """
    alpha = _finite_complex(alpha, "alpha")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    if abs(alpha) ** 2 > cutoff / 2:
        warnings.warn(
            f"|alpha|^2 = {abs(alpha) ** 2:.3g} exceeds cutoff/2 = {cutoff / 2:.3g}; "
            "truncation is unreliable",
            TruncationWarning,
            stacklevel=2,
        )
    amps = np.zeros(cutoff + 1, dtype=np.complex128)
    amps[0] = np.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, cutoff + 1):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    return FockVector(amps)


def displacement_matrix(beta: complex, cutoff: int) -> DisplacementMatrix:
    """Displacement operator on the truncated number basis.

    The first row <0|D|n> = (-beta*)^n exp(-|beta|^2/2)/sqrt(n!) seeds a
    two-term ladder recurrence,

        sqrt(m+1) <m+1|D|n> = beta <m|D|n> + sqrt(n) <m|D|n-1>,

    equivalent to the associated-Laguerre closed form but free of the
    factorial-ratio cancellation that corrupts the naive formula past
    n ~ 20.  Column 0 reproduces :func:`coherent_fock` by construction.
    """
    beta = _finite_complex(beta, "beta")
    if cutoff < 1:
        raise ValueError("cutoff must be at least 1")
    size = cutoff + 1
    if beta == 0:
        return DisplacementMatrix(beta=beta, entries=np.eye(size, dtype=np.complex128))
    d = np.zeros((size, size), dtype=np.complex128)
    d[0, 0] = np.exp(-0.5 * abs(beta) ** 2)
    minus_conj = -np.conj(beta)
    for n in range(1, size):
        d[0, n] = d[0, n - 1] * minus_conj / np.sqrt(n)
    root = np.sqrt(np.arange(size))
    for m in range(1, size):
        d[m, 0] = d[m - 1, 0] * beta / np.sqrt(m)
        d[m, 1:] = (beta * d[m - 1, 1:] + root[1:] * d[m - 1, :-1]) / root[m]
    return DisplacementMatrix(beta=beta, entries=d)


def apply_displacement(state: FockVector, beta) -> FockVector:
    """Apply D(beta) to ``state``.

    ``beta`` may be a complex amplitude (the matrix is built at the state's
    cutoff) or a prebuilt :class:`DisplacementMatrix`, in which case the
    cutoffs must match.
    """
    if isinstance(beta, DisplacementMatrix):
        op = beta
        if op.cutoff != state.cutoff:
            raise ValueError(
                f"cutoff mismatch: operator has {op.cutoff}, state has {state.cutoff}"
            )
    else:
        op = displacement_matrix(beta, state.cutoff)
    return FockVector(op.entries @ state.amps)


def coherent_overlap(g1: complex, g2: complex) -> complex:
    """Analytic overlap <g1|g2> of two coherent states.

    exp(-|g1|^2/2 - |g2|^2/2 + conj(g1) g2); the truncation-free twin of the
    Fock inner product, used as an independent cross-check throughout.
    """
    g1 = _finite_complex(g1, "g1")
    g2 = _finite_complex(g2, "g2")
    return complex(np.exp(-0.5 * (abs(g1) ** 2 + abs(g2) ** 2) + np.conj(g1) * g2))


def inner(a: FockVector, b: FockVector) -> complex:
    """Hermitian inner product <a|b> (conjugate-linear in the first slot)."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff} vs {b.cutoff}")
    return complex(np.vdot(a.amps, b.amps))


def norm(a: FockVector) -> float:
    return float(np.linalg.norm(a.amps))


def fidelity_pure(a: FockVector, b: FockVector) -> float:
    """|<a|b>|^2 / (|a|^2 |b|^2); the inputs may be unnormalized."""
    na = norm(a)
    nb = norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("fidelity undefined for a zero-norm state")
    val = abs(inner(a, b)) ** 2 / (na * na * nb * nb)
    return float(min(val, 1.0))
