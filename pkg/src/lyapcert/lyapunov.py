"""Quadratic Lyapunov candidates V(x) = <Px, x> and their coercivity data.

The constructors realize the square-function integrals

    V(x)   = int_0^inf ||(-A)^(1/2) T(t) x||^2 dt        (coercive route)
    W_q(x) = int_0^inf ||(-A)^q     T(t) x||^2 dt        (0 <= q <= 1/2)

which for a diagonal generator collapse to explicit per-mode weights
``lam^(2q-1) / 2``.  Dense systems go through a continuous Lyapunov solve
instead, cross-checked against direct quadrature of the defining integral.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.integrate
import scipy.linalg

from .systems import (
    MatrixSystem,
    SpectralSystem,
    as_state,
    matrix_neg_power,
    semigroup_apply,
)

__all__ = [
    "ContractionReport",
    "GainEnvelope",
    "IndefiniteFormError",
    "QuadraticForm",
    "build_half_norm",
    "build_v_half",
    "build_w_plain",
    "build_w_q",
    "coercivity_bounds",
    "contraction_similarity",
    "factorize",
]

_PSD_TOL = 1e-10


class IndefiniteFormError(ValueError):
    """A candidate form is numerically indefinite beyond tolerance."""


@dataclass(frozen=True)
class QuadraticForm:
    """A positive quadratic functional, stored as diagonal weights or a dense P.

    The coercivity envelope ``a1 ||x||^2 <= V(x) <= a2 ||x||^2`` holds
    exactly by construction with ``a1``/``a2`` the extremal weights or
    eigenvalues.  ``generator_power`` records the exponent q when the form
    came from a square-function integral; it is needed to decompose
    perturbed values along trajectories.
    """

    weights: np.ndarray | None = None
    p_matrix: np.ndarray | None = None
    provenance: str = "custom"
    generator_power: float | None = None
    a1: float = field(init=False, default=0.0)
    a2: float = field(init=False, default=0.0)

    def __post_init__(self):
        if (self.weights is None) == (self.p_matrix is None):
            raise ValueError("provide exactly one of weights or p_matrix")
        if self.weights is not None:
            w = np.array(self.weights, dtype=float).reshape(-1)
            if w.size < 1 or not np.all(np.isfinite(w)):
                raise ValueError("weights must be a non-empty finite sequence")
            if np.any(w <= 0.0):
                raise IndefiniteFormError("diagonal weights must be strictly positive")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)
            lo, hi = float(w.min()), float(w.max())
        else:
            p = np.array(self.p_matrix)
            if p.ndim != 2 or p.shape[0] != p.shape[1]:
                raise ValueError("p_matrix must be square")
            scale = max(float(np.abs(p).max()), 1.0)
            if np.abs(p - p.conj().T).max() > 1e-10 * scale:
                raise ValueError("p_matrix must be symmetric (Hermitian)")
            p = (p + p.conj().T) / 2.0
            eigs = np.linalg.eigvalsh(p)
            if eigs[0] < -_PSD_TOL * scale:
                raise IndefiniteFormError(
                    f"p_matrix has eigenvalue {eigs[0]:.3g} below tolerance"
                )
            p.setflags(write=False)
            object.__setattr__(self, "p_matrix", p)
            lo, hi = float(eigs[0]), float(eigs[-1])
        object.__setattr__(self, "a1", lo)
        object.__setattr__(self, "a2", hi)

    @property
    def kind(self) -> str:
        return "diagonal" if self.weights is not None else "dense"

    @property
    def dimension(self) -> int:
        if self.weights is not None:
            return int(self.weights.size)
        return int(self.p_matrix.shape[0])

    def value(self, x) -> float:
        """Evaluate V(x)."""
        x = np.asarray(x).reshape(-1)
        if x.size != self.dimension:
            raise ValueError("state length does not match the form")
        if self.weights is not None:
            return float(np.sum(self.weights * np.abs(x) ** 2))
        return float(np.real(np.vdot(x, self.p_matrix @ x)))

    def p_apply(self, x) -> np.ndarray:
        """Apply the representing operator P to a state."""
        x = np.asarray(x).reshape(-1)
        if self.weights is not None:
            return self.weights * x
        return self.p_matrix @ x

    @cached_property
    def factor_matrix(self) -> np.ndarray:
        """The symmetric square root F = P^(1/2) with V(x) = ||Fx||^2."""
        if self.weights is not None:
            return np.diag(np.sqrt(self.weights))
        eigs, vecs = np.linalg.eigh(self.p_matrix)
        scale = max(float(np.abs(eigs).max()), 1.0)
        if eigs[0] < -_PSD_TOL * scale:
            raise IndefiniteFormError("cannot factor an indefinite form")
        return (vecs * np.sqrt(np.clip(eigs, 0.0, None))) @ vecs.conj().T

    def factor_apply(self, x) -> np.ndarray:
        x = np.asarray(x).reshape(-1)
        if self.weights is not None:
            return np.sqrt(self.weights) * x
        return self.factor_matrix @ x

    def half_value(self, x) -> float:
        """||Fx|| = sqrt(V(x)), the norm-type companion of the form."""
        return float(np.linalg.norm(self.factor_apply(x)))

    def to_config(self) -> dict:
        if self.weights is not None:
            doc = {"kind": "diagonal", "weights": [float(v) for v in self.weights]}
        else:
            doc = {"kind": "dense", "p": self.p_matrix.real.tolist()}
        doc["provenance"] = self.provenance
        return doc


def coercivity_bounds(form: QuadraticForm) -> tuple[float, float]:
    """Extremal constants (a1, a2) of the sandwich a1||x||^2 <= V <= a2||x||^2."""
    return form.a1, form.a2


def factorize(form: QuadraticForm) -> np.ndarray:
    """Return F with V(x) = ||Fx||^2; raises IndefiniteFormError if P is not PSD."""
    return form.factor_matrix


def _wq_weights(eigenvalues, q):
    # int_0^inf lam^(2q) exp(-2 lam t) dt = lam^(2q-1) / 2, per mode.
    return eigenvalues ** (2.0 * q - 1.0) / 2.0


def _matrix_square_function(sys: MatrixSystem, q) -> np.ndarray:
    # P solves A^H P + P A = -S^H S with S = (-A)^q, so that
    # <P x, x> = int ||S exp(At) x||^2 dt.
    s = matrix_neg_power(sys, q)
    rhs = -(s.conj().T @ s)
    p = scipy.linalg.solve_continuous_lyapunov(sys.a_matrix.conj().T, rhs)
    return (p + p.conj().T) / 2.0


def _quadrature_square_function(sys, q, x, rtol=1e-11) -> float:
    # Direct quadrature of the defining integral, used as an internal
    # consistency probe for dense solves.
    x = as_state(sys, x)
    gap = sys.spectral_gap
    horizon = 25.0 / gap
    s = None if isinstance(sys, SpectralSystem) else matrix_neg_power(sys, q)

    def integrand(t):
        if s is None:
            lam = sys.eigenvalues
            return float(np.sum(lam ** (2.0 * q) * np.exp(-2.0 * lam * t) * np.abs(x) ** 2))
        vec = s @ semigroup_apply(sys, t, x)
        return float(np.real(np.vdot(vec, vec)))

    value, _ = scipy.integrate.quad(
        integrand, 0.0, horizon, epsabs=1e-13, epsrel=rtol, limit=500
    )
    if isinstance(sys, SpectralSystem):
        lam = sys.eigenvalues
        tail = float(
            np.sum(lam ** (2.0 * q - 1.0) / 2.0 * np.exp(-2.0 * lam * horizon) * np.abs(x) ** 2)
        )
        value += tail
    return value


def build_v_half(sys) -> QuadraticForm:
    """The coercive square-function form with exponent one half.

    Diagonal systems collapse to the constant weight 1/2 for every mode,
    i.e. half the squared norm.  Dense systems solve the Lyapunov equation
    A^H P + P A = -S^H S with S = (-A)^(1/2) and cross-check the solve
    against direct quadrature.
    """
    if isinstance(sys, SpectralSystem):
        return QuadraticForm(
            weights=_wq_weights(sys.eigenvalues, 0.5),
            provenance="square-function integral, exponent one half",
            generator_power=0.5,
        )
    p = _matrix_square_function(sys, 0.5)
    form = QuadraticForm(
        p_matrix=p,
        provenance="square-function integral, exponent one half (Lyapunov solve)",
        generator_power=0.5,
    )
    probe = np.ones(sys.dimension) / np.sqrt(sys.dimension)
    direct = _quadrature_square_function(sys, 0.5, probe)
    if abs(direct - form.value(probe)) > 1e-6 * max(1.0, abs(direct)):
        raise RuntimeError(
            f"Lyapunov solve disagrees with quadrature: {form.value(probe):.12g} "
            f"vs {direct:.12g}"
        )
    return form


def build_w_q(sys, q) -> QuadraticForm:
    """The square-function family W_q; non-coercive in the limit for q < 1/2.

    Diagonal weights are ``lam^(2q-1)/2``: the lower coercivity constant of
    an N-mode truncation is ``lam_N^(2q-1)/2`` and drifts to zero with
    growing N whenever q < 1/2 and the spectrum is unbounded.
    """
    if not 0.0 <= q <= 0.5 + 1e-12:
        raise ValueError("q must lie in [0, 1/2]")
    q = min(float(q), 0.5)
    provenance = f"square-function integral, exponent {q:g}"
    if isinstance(sys, SpectralSystem):
        return QuadraticForm(
            weights=_wq_weights(sys.eigenvalues, q),
            provenance=provenance,
            generator_power=q,
        )
    return QuadraticForm(
        p_matrix=_matrix_square_function(sys, q),
        provenance=provenance + " (Lyapunov solve)",
        generator_power=q,
    )


def build_w_plain(sys) -> QuadraticForm:
    """The plain orbit-energy form int ||T(t)x||^2 dt, alias of W_q at q = 0."""
    return dataclasses.replace(
        build_w_q(sys, 0.0), provenance="orbit energy integral (exponent zero)"
    )


def build_half_norm(sys) -> QuadraticForm:
    """Half the squared state norm, the canonical self-adjoint candidate."""
    provenance = "half squared norm"
    if isinstance(sys, SpectralSystem):
        return QuadraticForm(
            weights=np.full(sys.mode_count, 0.5),
            provenance=provenance,
            generator_power=0.5,
        )
    return QuadraticForm(
        p_matrix=np.eye(sys.dimension) * 0.5,
        provenance=provenance,
        generator_power=None,
    )


@dataclass(frozen=True)
class ContractionReport:
    """Diagnostics of the similarity scalar product <x,y>_new = <Px, y>."""

    epsilon: float
    condition_number: float
    dissipativity_margin: float
    decay_rate: float
    satisfied: bool


def contraction_similarity(sys, epsilon=1.0, probes=1000, seed=0, tol=1e-10):
    """Solve A^H P + P A = -eps*I and verify dissipativity in <Px, x>.

    Returns ``(P, report)``.  In the new scalar product the generator obeys
    Re <Ax, Px> = -eps/2 ||x||^2, so the margin over random probes must be
    nonpositive up to ``tol``.  ``condition_number`` of P measures how far
    the similarity transform P^(1/2) distorts the original norm; its growth
    across truncations is the quantity worth tracking.  ``decay_rate`` is
    the certified rate a = eps / (2 lam_max(P)) of the norm candidate
    W(x) = ||P^(1/2) x||.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if isinstance(sys, SpectralSystem):
        diag = epsilon / (2.0 * sys.eigenvalues)
        p = np.diag(diag)
        a_matrix = np.diag(-sys.eigenvalues)
    else:
        a_matrix = sys.a_matrix
        n = sys.dimension
        p = scipy.linalg.solve_continuous_lyapunov(
            a_matrix.conj().T, -epsilon * np.eye(n)
        )
        p = (p + p.conj().T) / 2.0
    eigs = np.linalg.eigvalsh(p)
    if eigs[0] <= 0:
        raise RuntimeError("Lyapunov solve returned a non-positive operator")
    rng = np.random.default_rng(seed)
    n = p.shape[0]
    margin = -np.inf
    for _ in range(int(probes)):
        x = rng.standard_normal(n)
        if np.iscomplexobj(a_matrix):
            x = x + 1j * rng.standard_normal(n)
        ax = a_matrix @ x
        value = float(np.real(np.vdot(p @ x, ax))) / float(np.real(np.vdot(x, x)))
        margin = max(margin, value)
    report = ContractionReport(
        epsilon=float(epsilon),
        condition_number=float(eigs[-1] / eigs[0]),
        dissipativity_margin=float(margin),
        decay_rate=float(epsilon / (2.0 * eigs[-1])),
        satisfied=bool(margin <= tol),
    )
    return p, report


@dataclass(frozen=True)
class GainEnvelope:
    """Exponential transient bound M e^(-omega t) r plus linear input gain g r."""

    overshoot: float
    rate: float
    gain: float

    def __post_init__(self):
        if self.overshoot < 1.0:
            raise ValueError("overshoot must be at least 1")
        if self.rate <= 0.0:
            raise ValueError("rate must be positive")
        if self.gain < 0.0:
            raise ValueError("gain must be nonnegative")

    def transient(self, r, t):
        return self.overshoot * np.exp(-self.rate * np.asarray(t)) * r

    def bound(self, r, t, input_norm):
        return self.transient(r, t) + self.gain * input_norm
