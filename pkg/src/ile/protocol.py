"""The conditional-measurement protocol on the centre-of-mass mode alone.

Each cycle prepares every ion's internal state as (|1> + i p |0>), drives all
ions with the bichromatic pair for a common window t, and post-selects on
seeing no fluorescence anywhere.  The surviving motional state is a
superposition of coherent components on a line,

    sum_k  C^k  D[(2k - n) beta] |alpha>,       n = (ions) x (cycles),

with C^k generated from the weights p_i by a two-term recurrence.  This
module builds that state, plus two success probabilities for the
post-selection record:

* ``p_nominal``, the closed-form product (1/4)^n prod 1/(1+|p_i|^2).  It
  ignores both the size of the surviving superposition and the overlaps of
  its displaced components, so it is reported but never treated as the
  physical probability.
* ``p_exact``, the true post-selection probability: the squared norm of each
  cycle's conditional state over the previous one, evaluated analytically
  with coherent overlaps (no truncation anywhere).

Phase bookkeeping: displacements generated within a run are collinear
(integer multiples of one beta), so their mutual composition phases vanish
identically and the product-to-sum step above is exact.  The only phases
that survive are those of D(gamma)|alpha> = exp((gamma conj(alpha) -
conj(gamma) alpha)/2) |alpha + gamma>, which ``to_fock`` and the norm
computations apply; the stored C^k themselves stay phase-free.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .fock import FockVector, TruncationWarning, coherent_fock, fidelity_pure

__all__ = [
    "RegimeWarning",
    "PhysicalParams",
    "Cycle",
    "ProtocolPlan",
    "LineSuperposition",
    "ProtocolResult",
    "beta_of",
    "forward_coeffs",
    "success_probability_nominal",
    "success_probability_exact",
    "run_ideal",
    "to_fock",
    "fidelity_to_target",
]


class RegimeWarning(UserWarning):
    """Parameters are legal but outside the regime the scheme was derived in."""


@dataclass(frozen=True)
class PhysicalParams:
    """Drive parameters, all in units of the COM frequency.

    eta     recoil (Lamb-Dicke) parameter of the COM mode
    omega   Rabi frequency of the bichromatic pair, identical for all ions
    delta   detuning of the pair from the internal transition
    n_ions  number of ions addressed simultaneously
    """

    eta: float
    omega: float
    delta: float
    n_ions: int

    def __post_init__(self):
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError("eta must be positive and finite")
        if self.eta > 0.25:
            raise ValueError(
                "eta > 0.25 breaks the first-order recoil expansion this model rests on"
            )
        if self.eta > 0.1:
            warnings.warn(
                f"eta = {self.eta} stretches the small-recoil expansion",
                RegimeWarning,
                stacklevel=2,
            )
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ValueError("omega must be positive and finite")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError("delta must be positive and finite")
        if self.omega >= self.delta:
            raise ValueError("omega must stay below the detuning delta")
        if self.omega > self.delta / 10:
            warnings.warn(
                f"omega = {self.omega} is not small against delta = {self.delta}; "
                "the weak-drive elimination is marginal",
                RegimeWarning,
                stacklevel=2,
            )
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError("n_ions must be a positive integer")


def beta_of(params: PhysicalParams, t: float) -> complex:
    """Displacement amplitude accumulated by the COM mode over a window t.

    beta = i eta omega t exp(i (1 - delta) t); at delta = 1 the phase factor
    freezes and |beta| grows linearly with t.
    """
    if not (np.isfinite(t) and t >= 0):
        raise ValueError("t must be non-negative and finite")
    return complex(
        1j * params.eta * params.omega * t * np.exp(1j * (1.0 - params.delta) * t)
    )


@dataclass(frozen=True)
class Cycle:
    """One drive-and-measure round: a window length and one weight per ion."""

    duration: float
    weights: np.ndarray

    def __post_init__(self):
        if not (np.isfinite(self.duration) and self.duration > 0):
            raise ValueError("cycle duration must be positive and finite")
        w = np.asarray(self.weights, dtype=np.complex128)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class ProtocolPlan:
    """Full experiment description: drive parameters, initial coherent
    amplitude of the COM mode, and the cycle list.

    All cycles must share one duration; the line structure of the result
    holds only for a single displacement step, so unequal windows are
    rejected rather than silently producing something else.
    """

    params: PhysicalParams
    alpha: complex
    cycles: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        if not np.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        cycles = tuple(self.cycles)
        if not cycles:
            raise ValueError("plan must contain at least one cycle")
        t0 = cycles[0].duration
        for c in cycles:
            if not isinstance(c, Cycle):
                raise ValueError("cycles must be Cycle instances")
            if abs(c.duration - t0) > 1e-12 * max(abs(t0), 1.0):
                raise ValueError("all cycle durations must be equal")
            if c.weights.size != self.params.n_ions:
                raise ValueError(
                    f"cycle carries {c.weights.size} weights for {self.params.n_ions} ions"
                )
        object.__setattr__(self, "cycles", cycles)

    @property
    def all_weights(self) -> np.ndarray:
        """Weights of every (cycle, ion) slot, cycle-major."""
        return np.concatenate([c.weights for c in self.cycles])


@dataclass(frozen=True)
class LineSuperposition:
    """Unnormalized sum_k coeffs[k] D[(2k - n) beta] |alpha> with n = len(coeffs) - 1."""

    alpha: complex
    beta: complex
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))
        object.__setattr__(self, "beta", complex(self.beta))
        if not (np.isfinite(self.alpha) and np.isfinite(self.beta)):
            raise ValueError("alpha and beta must be finite")
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        if not np.any(c != 0):
            raise ValueError("at least one coefficient must be nonzero")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.coeffs.size - 1

    def displacements(self) -> np.ndarray:
        """The component displacements (2k - n) beta."""
        k = np.arange(self.coeffs.size)
        return (2 * k - self.n) * self.beta

    def labels(self) -> np.ndarray:
        """Coherent amplitudes alpha + (2k - n) beta of the components."""
        return self.alpha + self.displacements()

    def phased_coeffs(self) -> np.ndarray:
        """Coefficients with the D(gamma)|alpha> phases folded in, so that the
        state is exactly sum_k phased[k] |labels()[k]> on plain coherent kets."""
        g = self.displacements()
        phase = np.exp(0.5 * (g * np.conj(self.alpha) - np.conj(g) * self.alpha))
        return self.coeffs * phase

    def norm_sq(self) -> float:
        """Squared norm from the coherent Gram matrix; exact, no truncation."""
        a = self.phased_coeffs()
        return float(np.real(np.conj(a) @ _coherent_gram(self.labels()) @ a))


@dataclass(frozen=True)
class ProtocolResult:
    state: LineSuperposition
    p_nominal: float
    p_exact: float
    per_cycle_p_exact: np.ndarray


def _coherent_gram(labels: np.ndarray) -> np.ndarray:
    """Gram matrix <labels[i]|labels[j]> of coherent states."""
    g = np.asarray(labels, dtype=np.complex128)
    h = np.abs(g) ** 2
    return np.exp(-0.5 * h[:, None] - 0.5 * h[None, :] + np.conj(g)[:, None] * g[None, :])


def forward_coeffs(weights) -> np.ndarray:
    """Line coefficients C^k generated by the weight sequence.

    Built by the two-term recurrence

        C_m^k = (1 + p_m) C_{m-1}^k + (1 - p_m) C_{m-1}^{k-1},

    starting from C_0^0 = 1; O(m^2) and exact for the all-zero row (binomial
    coefficients).  The result is symmetric under permutations of the weights.
    """
    w = np.asarray(weights, dtype=np.complex128)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    c = np.array([1.0 + 0.0j])
    for p in w:
        nxt = np.zeros(c.size + 1, dtype=np.complex128)
        nxt[:-1] += (1 + p) * c
        nxt[1:] += (1 - p) * c
        c = nxt
    return c


def success_probability_nominal(weights) -> float:
    """Closed-form probability estimate (1/4)^n prod 1/(1 + |p_i|^2).

    This is the squared prefactor of the unnormalized conditional state.  It
    neglects the norm of the surviving coefficient vector and all overlaps
    between displaced components, so it can sit far below the true
    post-selection probability; see ``success_probability_exact``.
    """
    w = np.asarray(weights, dtype=np.complex128)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weights must be a non-empty 1-D sequence")
    return float(0.25 ** w.size * np.prod(1.0 / (1.0 + np.abs(w) ** 2)))


def success_probability_exact(plan: ProtocolPlan) -> tuple[float, np.ndarray]:
    """True probability of the all-no-fluorescence record, cycle by cycle.

    Each cycle applies the conditional operator
    prod_i [(1 - p_i) D(beta) + (1 + p_i) D(-beta)] / (2 sqrt(1 + |p_i|^2));
    the cycle's probability is the squared-norm ratio before/after, computed
    from coherent Gram matrices.  Coinciding components (beta = 0) reduce to
    the scalar case automatically since the Gram entries are then all ones.

    Returns (total, per-cycle array); the total is the product of the
    per-cycle values.
    """
    beta = beta_of(plan.params, plan.cycles[0].duration)
    coeffs = np.array([1.0 + 0.0j])
    aleph_sq = 1.0
    prev = 1.0
    per_cycle = []
    for cyc in plan.cycles:
        for p in cyc.weights:
            nxt = np.zeros(coeffs.size + 1, dtype=np.complex128)
            nxt[:-1] += (1 + p) * coeffs
            nxt[1:] += (1 - p) * coeffs
            coeffs = nxt
            aleph_sq *= 0.25 / (1.0 + abs(p) ** 2)
        cur = aleph_sq * LineSuperposition(plan.alpha, beta, coeffs).norm_sq()
        per_cycle.append(float(np.clip(cur / prev, 0.0, 1.0)))
        prev = cur
    per_cycle = np.array(per_cycle)
    return float(np.prod(per_cycle)), per_cycle


def run_ideal(plan: ProtocolPlan) -> ProtocolResult:
    """Run the whole plan on the COM mode alone.

    The weights of all cycles concatenate into one sequence of length
    n = (ions) x (cycles); a plan with one ion and 2m cycles therefore
    produces exactly the same coefficients as two ions and m cycles carrying
    the same sequence.
    """
    weights = plan.all_weights
    state = LineSuperposition(
        alpha=plan.alpha,
        beta=beta_of(plan.params, plan.cycles[0].duration),
        coeffs=forward_coeffs(weights),
    )
    p_exact, per_cycle = success_probability_exact(plan)
    return ProtocolResult(
        state=state,
        p_nominal=success_probability_nominal(weights),
        p_exact=p_exact,
        per_cycle_p_exact=per_cycle,
    )


def to_fock(state: LineSuperposition, cutoff: int) -> FockVector:
    """Expand the line superposition on the truncated number basis.

    Each component enters as phased_coeffs()[k] |labels()[k]>.  If the
    resulting tail weight is not negligible against the norm, a
    TruncationWarning reports it; pick the cutoff with
    :func:`ile.fock.recommended_cutoff` for |alpha| + n |beta|.
    """
    amps = np.zeros(cutoff + 1, dtype=np.complex128)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for c, g in zip(state.phased_coeffs(), state.labels()):
            if c != 0:
                amps += c * coherent_fock(g, cutoff).amps
    out = FockVector(amps)
    nsq = float(np.real(np.vdot(amps, amps)))
    if out.tail_weight > 1e-8 * max(nsq, 1e-300):
        warnings.warn(
            f"cutoff {cutoff} leaves relative tail weight "
            f"{out.tail_weight / max(nsq, 1e-300):.3g}",
            TruncationWarning,
            stacklevel=2,
        )
    return out


def fidelity_to_target(state: LineSuperposition, target: FockVector) -> float:
    """Fidelity of the line superposition to a number-basis target.

    Evaluated at the target's own cutoff; both inputs may be unnormalized,
    and the value is invariant under a global phase or scale of either.
    """
    return fidelity_pure(to_fock(state, target.cutoff), target)
