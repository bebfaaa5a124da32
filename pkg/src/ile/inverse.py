"""Planner: recover internal-state weights from target line coefficients.

Peel-back procedure.  The coefficients C_n^k generated by weights p_i are,
up to scale, the coefficients of the polynomial prod_i [(1 + p_i) +
(1 - p_i) z]; writing x = (p - 1)/(p + 1), every weight shows up as a root
of

    sum_k  C_n^{n-k} x^k  =  0.

Peeling works one level at a time: pick a root x of that polynomial, map it
to p = (1 + x)/(1 - x), divide the weight's factor out with the two-term
recurrence run backwards, and repeat on the reduced coefficients.  Each
distinct root spawns a branch; because the coefficients are symmetric in the
weights, branches that accumulate the same weight multiset are duplicates
and get merged.

Degenerate edges are stripped first: a vanishing leading coefficient forces
a weight of -1, a vanishing trailing coefficient forces +1, and both peel by
simple halving with no division hazard.  A root at x = 1 corresponds to
p = infinity (an internal state that is pure |0>), which no finite weight
sequence produces; such branches are rejected explicitly.

Also here: ``fit_target``, the least-squares fit of an arbitrary number-basis
state by a line superposition over a fixed component grid, via the
regularized coherent Gram matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .fock import FockVector, coherent_fock, coherent_overlap, inner, norm
from .protocol import forward_coeffs, success_probability_nominal

__all__ = [
    "TargetCoefficients",
    "SolveOptions",
    "WeightSolution",
    "DegenerateReport",
    "handle_degenerate",
    "solve_weights",
    "best_realization",
    "fit_target",
]

_ZERO_TOL = 1e-14  # entry treated as an exact zero after max-normalization
_ROOT_CLUSTER_TOL = 1e-8
_POLE_GUARD_TOL = 1e-9  # rejection radius around the x = 1 pole of the weight map


@dataclass(frozen=True)
class TargetCoefficients:
    """Desired line coefficients, projective: only the ray matters."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        if not np.any(c != 0):
            raise ValueError("coefficients must not all vanish")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.coeffs.size - 1


@dataclass(frozen=True)
class SolveOptions:
    max_branches: int = 64
    root_tolerance: float = 1e-12
    enumerate_all: bool = False

    def __post_init__(self):
        if self.max_branches < 1:
            raise ValueError("max_branches must be at least 1")
        if not (np.isfinite(self.root_tolerance) and self.root_tolerance > 0):
            raise ValueError("root_tolerance must be positive")


@dataclass(frozen=True)
class WeightSolution:
    """One realization: weights, the root choices that produced it, its
    nominal success probability, and the relative forward-reconstruction
    error against the target."""

    weights: np.ndarray
    branch_id: tuple
    p_nominal: float
    residual: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.complex128)
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "branch_id", tuple(int(i) for i in self.branch_id))


@dataclass(frozen=True)
class DegenerateReport:
    """Forced weights stripped off a target with vanishing edge coefficients."""

    forced: tuple
    reduced: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "forced", tuple(complex(p) for p in self.forced))
        r = np.asarray(self.reduced, dtype=np.complex128).copy()
        r.flags.writeable = False
        object.__setattr__(self, "reduced", r)


def _projective_normalize(c: np.ndarray) -> np.ndarray:
    """Rescale so the largest coefficient magnitude is 1.

    Subnormal or near-overflow inputs are first shifted by an exact power of
    two; dividing directly by a subnormal maximum would overflow (and the
    complex-division denominator would underflow to zero).
    """
    scale = np.max(np.abs(c))
    if scale < 1e-250:
        c = c * 2.0**900
        scale = np.max(np.abs(c))
    elif not np.isfinite(scale) or scale > 1e250:
        c = c * 2.0**-900
        scale = np.max(np.abs(c))
    if not (np.isfinite(scale) and scale > 0):
        raise ValueError("coefficients cannot be normalized; magnitudes out of range")
    return c / scale


def handle_degenerate(target: TargetCoefficients) -> DegenerateReport:
    """Strip the forced weights implied by vanishing edge coefficients.

    A zero leading coefficient can only come from a factor with p = -1
    (every term of the leading product contains 1 + p); peeling it halves and
    shifts the remaining coefficients.  Symmetrically, a zero trailing
    coefficient forces p = +1.  The returned ``reduced`` coefficients have
    nonzero ends (possibly length one when everything was forced).
    """
    c = _projective_normalize(np.asarray(target.coeffs, dtype=np.complex128))
    forced = []
    while c.size > 1:
        if abs(c[0]) <= _ZERO_TOL:
            forced.append(-1.0 + 0.0j)
            c = c[1:] / 2.0
        elif abs(c[-1]) <= _ZERO_TOL:
            forced.append(1.0 + 0.0j)
            c = c[:-1] / 2.0
        else:
            break
    return DegenerateReport(forced=tuple(forced), reduced=c)


def _polished_roots(desc: np.ndarray, tol: float) -> np.ndarray:
    """Companion-matrix roots with one Newton step each."""
    r = np.roots(desc)
    if r.size == 0:
        return r
    deriv = np.polyder(desc)
    val = np.polyval(desc, r)
    der = np.polyval(deriv, r)
    safe = np.abs(der) > tol
    r = r - np.where(safe, val / np.where(safe, der, 1.0), 0.0)
    return r


def _distinct_roots(roots: np.ndarray) -> list[complex]:
    """Cluster numerically coincident roots; deterministic (re, im) order."""
    order = np.lexsort((roots.imag, roots.real))
    out: list[complex] = []
    for r in roots[order]:
        r = complex(r)
        if not out or abs(r - out[-1]) > _ROOT_CLUSTER_TOL * (1.0 + abs(r)):
            out.append(r)
    return out


def _peel(c: np.ndarray, p: complex) -> np.ndarray:
    """Run the coefficient recurrence backwards, removing the factor of p."""
    m = c.size - 1
    out = np.zeros(m, dtype=np.complex128)
    out[0] = c[0] / (1.0 + p)
    for k in range(1, m):
        out[k] = (c[k] - (1.0 - p) * out[k - 1]) / (1.0 + p)
    # The untouched last entry c[m] = (1 - p) out[m-1] is implied; any
    # mismatch shows up in the final forward residual.
    return out


def _multiset_key(weights) -> tuple:
    return tuple(sorted((round(w.real, 9), round(w.imag, 9)) for w in weights))


@dataclass
class _Branch:
    coeffs: np.ndarray
    peeled: list = field(default_factory=list)  # weights in peel order (outermost first)
    ids: tuple = ()
    nominal_factor: float = 1.0  # running prod 1/(1 + |p|^2)
    last_key: tuple | None = None  # rounded key of the last root chosen


def _root_key(x: complex) -> tuple:
    return (round(x.real, 6), round(x.imag, 6))


def _explore(
    reduced: np.ndarray,
    forced_factor: float,
    opts: SolveOptions,
    width: int,
    canonical: bool,
):
    """Breadth-first peel over root choices, frontier capped at ``width``
    branches scored by the running nominal probability.

    Because the coefficients are symmetric in the weights, every ordering of
    one root multiset lands on the same solution.  A width of 1 therefore
    already finds the (generically unique) realization; the census mode uses
    the full width with the ``canonical`` non-decreasing root order, which
    visits each multiset once instead of once per permutation.
    """
    frontier = [_Branch(coeffs=reduced, nominal_factor=forced_factor)]
    rejected_pole = 0
    while frontier and frontier[0].coeffs.size > 1:
        children: list[_Branch] = []
        seen: set = set()
        for br in frontier:
            roots = _distinct_roots(_polished_roots(br.coeffs, opts.root_tolerance))
            for idx, x in enumerate(roots):
                key = _root_key(x)
                if canonical and br.last_key is not None and key < br.last_key:
                    continue
                if abs(x - 1.0) <= _POLE_GUARD_TOL:
                    # p = (1 + x)/(1 - x) has a pole here: the component ratio
                    # asks for a pure-|0> preparation, unreachable by finite p.
                    rejected_pole += 1
                    continue
                p = (1.0 + x) / (1.0 - x)
                child = _Branch(
                    coeffs=_peel(br.coeffs, p),
                    peeled=br.peeled + [p],
                    ids=br.ids + (idx,),
                    nominal_factor=br.nominal_factor / (1.0 + abs(p) ** 2),
                    last_key=key,
                )
                mkey = _multiset_key(child.peeled)
                if mkey in seen:
                    continue
                seen.add(mkey)
                children.append(child)
        children.sort(key=lambda b: (-b.nominal_factor, b.ids))
        frontier = children[:width]
    return frontier, rejected_pole


def _repolish_weights(weights: np.ndarray, reduced: np.ndarray, n_forced: int) -> np.ndarray:
    """Newton-polish each peeled weight against the top-level polynomial.

    Every weight's root x = (p - 1)/(p + 1) belongs to the original (stripped)
    polynomial, so polishing there removes the drift the level-by-level peel
    accumulates.  Forced edge weights are exact and left alone.
    """
    if reduced.size < 2:
        return weights
    deriv = np.polyder(reduced)
    out = weights.copy()
    stop = weights.size - n_forced  # forced weights sit at the tail
    for i in range(stop):
        p = out[i]
        x = (p - 1.0) / (p + 1.0)
        for _ in range(2):
            d = np.polyval(deriv, x)
            if abs(d) < 1e-300:
                break
            x = x - np.polyval(reduced, x) / d
        if abs(1.0 - x) > _POLE_GUARD_TOL:
            out[i] = (1.0 + x) / (1.0 - x)
    return out


def solve_weights(target: TargetCoefficients, opts: SolveOptions | None = None) -> list[WeightSolution]:
    """All found weight realizations of the target, best first.

    Peel levels are explored breadth-first over root choices with
    weight-multiset deduplication and a ``max_branches`` cap scored by the
    running nominal probability.  Each surviving branch is checked by running
    the weights forward; solutions whose relative reconstruction error
    exceeds the acceptance tolerance are dropped, and if none survive a
    :class:`SolverError` reports the best failed residual.

    Sorted by descending nominal probability, ties broken by branch id.
    """
    opts = opts or SolveOptions()
    if target.n < 1:
        raise ValueError("need at least two coefficients (one weight to solve for)")
    normalized = _projective_normalize(np.asarray(target.coeffs, dtype=np.complex128))

    report = handle_degenerate(target)
    forced = report.forced
    forced_factor = float(np.prod([1.0 / (1.0 + abs(p) ** 2) for p in forced])) if forced else 1.0
    accept_tol = max(1e-9, 1e3 * opts.root_tolerance)
    norm_target = np.linalg.norm(normalized)

    def finish(frontier, rejected_pole):
        solutions = []
        best_failed = None
        for br in frontier:
            peel_order = list(forced) + br.peeled
            weights = np.array(list(reversed(peel_order)), dtype=np.complex128)
            weights = _repolish_weights(weights, report.reduced, len(forced))
            branch_id = (0,) * len(forced) + br.ids
            recon = forward_coeffs(weights)
            s = np.vdot(recon, normalized) / np.vdot(recon, recon)
            residual = float(np.linalg.norm(s * recon - normalized) / norm_target)
            sol = WeightSolution(
                weights=weights,
                branch_id=branch_id,
                p_nominal=success_probability_nominal(weights),
                residual=residual,
            )
            if residual <= accept_tol:
                solutions.append(sol)
            elif best_failed is None or residual < best_failed.residual:
                best_failed = sol
        return solutions, best_failed, rejected_pole

    if opts.enumerate_all:
        first = _explore(report.reduced, forced_factor, opts, opts.max_branches, True)
    else:
        first = _explore(report.reduced, forced_factor, opts, 1, False)
    solutions, best_failed, rejected_pole = finish(*first)
    if not solutions:
        # A narrow walk can commit to a poorly conditioned or pole-blocked
        # peel order; retry exploring every ordering before giving up.
        solutions, best_failed, rejected_pole = finish(
            *_explore(report.reduced, forced_factor, opts, opts.max_branches, False)
        )

    if not solutions:
        detail = (
            f"best residual {best_failed.residual:.3e} on branch {best_failed.branch_id}"
            if best_failed
            else "no branch survived"
        )
        if rejected_pole:
            detail += (
                f"; {rejected_pole} branch(es) rejected at the x = 1 pole "
                "(target needs a pure-|0> preparation, outside the finite-weight family)"
            )
        raise SolverError(f"no weight realization within tolerance: {detail}")

    solutions.sort(key=lambda s: (-s.p_nominal, s.branch_id))
    return solutions


def best_realization(solutions) -> WeightSolution:
    """Maximum nominal success probability; ties broken by branch id."""
    solutions = list(solutions)
    if not solutions:
        raise ValueError("no solutions to choose from")
    return min(solutions, key=lambda s: (-s.p_nominal, s.branch_id))


def fit_target(
    target: FockVector, n: int, alpha: complex, beta: complex
) -> tuple[TargetCoefficients, float]:
    """Best line-superposition approximation of a number-basis target.

    Components sit on the fixed grid alpha + (2k - n) beta, k = 0..n.  The
    optimal coefficients are c = S^+ v with S the analytic coherent Gram
    matrix of the components and v their overlaps with the target; S is
    regularized by flooring its eigenvalues at 1e-12 of the largest, which
    is what makes tightly spaced grids (|beta| small) usable at all.

    Returns the coefficients and the achieved fidelity, which is invariant
    under global phase and scale of the target and never decreases when the
    grid is enlarged from n to n + 2 (the component set then nests).
    """
    if int(n) != n or n < 0:
        raise ValueError("n must be a non-negative integer")
    beta = complex(beta)
    alpha = complex(alpha)
    if beta == 0:
        raise ValueError("beta must be nonzero; the component grid would collapse")
    tn = norm(target)
    if tn == 0.0:
        raise ValueError("target must be nonzero")

    k = np.arange(n + 1)
    disp = (2 * k - n) * beta
    labels = alpha + disp
    phases = np.exp(0.5 * (disp * np.conj(alpha) - np.conj(disp) * alpha))

    gram = np.array(
        [[coherent_overlap(gi, gj) for gj in labels] for gi in labels],
        dtype=np.complex128,
    )
    gram *= np.conj(phases)[:, None] * phases[None, :]
    v = np.array(
        [
            np.conj(ph) * inner(coherent_fock(g, target.cutoff), target)
            for ph, g in zip(phases, labels)
        ],
        dtype=np.complex128,
    )

    evals, evecs = np.linalg.eigh(gram)
    top = evals[-1]
    if not (np.isfinite(top) and top > 0):
        raise SolverError("component Gram matrix is numerically void; increase |beta|")
    floor = 1e-12 * top
    inv = np.where(evals > floor, 1.0 / np.maximum(evals, floor), 1.0 / floor)
    c = evecs @ (inv * (np.conj(evecs.T) @ v))
    if not np.all(np.isfinite(c)):
        raise SolverError("regularized Gram solve overflowed; increase |beta|")
    if not np.any(c != 0):
        raise SolverError("target is orthogonal to every grid component; move the grid")
    fidelity = float(np.clip(np.real(np.vdot(v, c)) / tn**2, 0.0, 1.0))
    return TargetCoefficients(c), fidelity
