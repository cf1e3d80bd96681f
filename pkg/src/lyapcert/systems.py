"""Generators, semigroups, fractional powers, and extrapolation norms.

Two realizations of an exponentially stable linear system ``x' = Ax + Bu``
are supported: :class:`SpectralSystem` (diagonal generator, the workhorse)
and :class:`MatrixSystem` (dense Hurwitz matrix).  States are plain 1-D
numpy arrays; helpers here validate their length against the owning
system.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .rules import evaluate_rule

__all__ = [
    "ConditioningError",
    "DecayBound",
    "DimensionMismatchError",
    "MatrixSystem",
    "SpectralSystem",
    "as_state",
    "decay_bound_estimate",
    "extrapolation_norm",
    "fractional_power_apply",
    "semigroup_apply",
    "system_from_config",
    "system_to_config",
]

# Eigendecompositions with a worse-conditioned eigenvector basis than this
# are not trusted for generic fractional powers.
EIGENVECTOR_COND_LIMIT = 1e8


class DimensionMismatchError(ValueError):
    """State or input dimensions inconsistent with the owning system."""


class ConditioningError(RuntimeError):
    """A matrix-function result would be numerically untrustworthy."""


def _readonly(array):
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class SpectralSystem:
    """Diagonal generator A = -diag(lam_n) with a rank-one input column.

    ``T(t)`` acts per mode as ``exp(-lam_n * t)``.  All ``lam_n`` are
    strictly positive and sorted ascending, so every truncation is
    exponentially stable by construction.  The input operator maps a
    scalar ``u`` to the vector ``b * u``.
    """

    eigenvalues: np.ndarray
    input_coeffs: np.ndarray
    label: str = "spectral"

    def __post_init__(self):
        lam = np.array(self.eigenvalues, dtype=float).reshape(-1)
        b = np.array(self.input_coeffs, dtype=float).reshape(-1)
        if lam.size < 1:
            raise ValueError("at least one mode is required")
        if lam.size != b.size:
            raise DimensionMismatchError(
                f"{lam.size} eigenvalues but {b.size} input coefficients"
            )
        if not np.all(np.isfinite(lam)) or not np.all(np.isfinite(b)):
            raise ValueError("eigenvalues and input coefficients must be finite")
        if not np.all(lam > 0.0):
            raise ValueError("all eigenvalues must be strictly positive")
        if np.any(np.diff(lam) < 0.0):
            raise ValueError("eigenvalues must be sorted ascending")
        object.__setattr__(self, "eigenvalues", _readonly(lam))
        object.__setattr__(self, "input_coeffs", _readonly(b))

    @property
    def mode_count(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def dimension(self) -> int:
        return self.mode_count

    @property
    def spectral_gap(self) -> float:
        """Smallest eigenvalue; ||T(t)x|| <= exp(-gap*t)||x|| holds exactly."""
        return float(self.eigenvalues[0])

    def input_vector(self, u=1.0) -> np.ndarray:
        """The state-space column B*u."""
        return self.input_coeffs * float(u)


@dataclass(frozen=True)
class MatrixSystem:
    """Dense system with Hurwitz ``a_matrix`` and input matrix ``b_matrix``.

    Every eigenvalue of ``a_matrix`` must have strictly negative real part
    (checked at construction); invertibility follows.
    """

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    label: str = "matrix"

    def __post_init__(self):
        a = np.array(self.a_matrix)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("a_matrix must be square")
        b = np.array(self.b_matrix)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        if b.ndim != 2 or b.shape[0] != a.shape[0]:
            raise DimensionMismatchError(
                f"b_matrix rows {b.shape[0]} do not match state dimension {a.shape[0]}"
            )
        if not (np.all(np.isfinite(a.real)) and np.all(np.isfinite(b.real))):
            raise ValueError("matrices must be finite")
        spectrum = np.linalg.eigvals(a)
        if spectrum.real.max() >= 0.0:
            raise ValueError(
                f"a_matrix is not Hurwitz (spectral abscissa {spectrum.real.max():.6g})"
            )
        object.__setattr__(self, "a_matrix", _readonly(a))
        object.__setattr__(self, "b_matrix", _readonly(b))
        object.__setattr__(self, "_abscissa", float(spectrum.real.max()))

    @property
    def dimension(self) -> int:
        return int(self.a_matrix.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.b_matrix.shape[1])

    @property
    def spectral_gap(self) -> float:
        """Distance of the spectrum from the imaginary axis."""
        return -self._abscissa

    def input_vector(self, u=1.0) -> np.ndarray:
        if self.input_dim != 1:
            raise DimensionMismatchError("scalar input requested for multi-input system")
        return self.b_matrix[:, 0] * u


def as_state(sys, x) -> np.ndarray:
    """Validate and return ``x`` as a 1-D state array of the right length."""
    arr = np.asarray(x)
    if np.iscomplexobj(arr):
        arr = arr.astype(complex)
    else:
        arr = arr.astype(float)
    arr = arr.reshape(-1)
    if arr.size != sys.dimension:
        raise DimensionMismatchError(
            f"state length {arr.size} does not match system dimension {sys.dimension}"
        )
    return arr


def semigroup_apply(sys, t, x) -> np.ndarray:
    """Apply the semigroup operator T(t) = exp(tA) to a state.

    Diagonal systems multiply per mode by ``exp(-lam_n t)``; matrix systems
    use the scaling-and-squaring matrix exponential.  ``t = 0`` returns the
    state unchanged.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    x = as_state(sys, x)
    if t == 0:
        return x.copy()
    if isinstance(sys, SpectralSystem):
        return np.exp(-sys.eigenvalues * t) * x
    return scipy.linalg.expm(sys.a_matrix * t) @ x


def _half_integer_matrix_power(matrix, k):
    # (matrix)^(k/2) for integer k through exact Schur square roots; valid
    # for defective spectra as long as the spectrum avoids (-inf, 0].
    n = matrix.shape[0]
    if k == 0:
        return np.eye(n, dtype=matrix.dtype)
    base = matrix if k > 0 else np.linalg.inv(matrix)
    j = abs(k)
    out = np.linalg.matrix_power(base, j // 2)
    if j % 2:
        root = scipy.linalg.sqrtm(base)
        if np.isrealobj(matrix) and np.iscomplexobj(root):
            if np.abs(root.imag).max() > 1e-10 * max(np.abs(root.real).max(), 1.0):
                raise ConditioningError("matrix square root is not real")
            root = root.real
        out = out @ root
    if not np.all(np.isfinite(out.real)):
        raise ConditioningError("half-integer matrix power produced non-finite entries")
    return out


def matrix_neg_power(sys: MatrixSystem, alpha, cond_limit=EIGENVECTOR_COND_LIMIT):
    """The operator (-A)^alpha for a matrix system.

    Half-integer powers go through Schur-based square roots, which stay
    exact for defective spectra.  Generic powers use the eigendecomposition
    and refuse when the eigenvector basis is conditioned worse than
    ``cond_limit``.
    """
    neg_a = -sys.a_matrix
    doubled = 2.0 * alpha
    k = round(doubled)
    if abs(doubled - k) <= 1e-12:
        return _half_integer_matrix_power(neg_a, int(k))
    w, v = np.linalg.eig(neg_a)
    cond = np.linalg.cond(v)
    if not np.isfinite(cond) or cond > cond_limit:
        raise ConditioningError(
            f"eigenvector basis condition {cond:.3g} exceeds {cond_limit:.1e}; "
            f"power {alpha} refused"
        )
    powered = (v * w.astype(complex) ** alpha) @ np.linalg.inv(v)
    if np.isrealobj(sys.a_matrix) and np.abs(powered.imag).max() <= 1e-12 * max(
        np.abs(powered.real).max(), 1.0
    ):
        powered = powered.real
    return powered


def fractional_power_apply(sys, alpha, x) -> np.ndarray:
    """Apply (-A)^alpha to a state; exact per mode for diagonal systems."""
    x = as_state(sys, x)
    if isinstance(sys, SpectralSystem):
        return sys.eigenvalues**float(alpha) * x
    return matrix_neg_power(sys, alpha) @ x


def extrapolation_norm(sys, gamma, v) -> float:
    """The weakened norm ||(-A)^{-gamma} v|| indexing the spaces X_{-gamma}.

    ``gamma = 0`` recovers the state norm; larger ``gamma`` discounts fast
    modes more strongly and hosts rougher input columns.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    return float(np.linalg.norm(fractional_power_apply(sys, -gamma, v)))


def _operator_norm_power_semigroup(sys, r, t):
    # ||(-A)^r T(t)|| in the Euclidean operator norm.
    if isinstance(sys, SpectralSystem):
        lam = sys.eigenvalues
        if t == 0:
            return float(lam[-1] ** r) if r > 0 else 1.0
        return float(np.max(lam**r * np.exp(-lam * t)))
    power = matrix_neg_power(sys, r)
    return float(np.linalg.norm(power @ scipy.linalg.expm(sys.a_matrix * t), 2))


@dataclass(frozen=True)
class DecayBound:
    """Records ||(-A)^r T(t)|| <= prefactor * t^(-power) * exp(-rate*t)."""

    prefactor: float
    rate: float
    power: float

    def __post_init__(self):
        if self.prefactor <= 0 or self.rate <= 0:
            raise ValueError("prefactor and rate must be positive")
        if self.power < 0:
            raise ValueError("power must be nonnegative")

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        return self.prefactor * t ** (-self.power) * np.exp(-self.rate * t)


def decay_bound_estimate(sys, r, delta=None, grid=None) -> DecayBound:
    """Fit the smallest prefactor M with ||(-A)^r T(t)|| <= M t^-r e^(-delta t).

    ``delta`` defaults to half the spectral gap, strictly inside it, which
    keeps M finite for every power r < 1.  M is the maximum of
    ``||(-A)^r T(t)|| * t^r * exp(delta*t)`` over a logarithmic grid.
    """
    if r < 0:
        raise ValueError("power r must be nonnegative")
    gap = sys.spectral_gap
    if delta is None:
        delta = gap / 2.0
    if not 0 < delta <= gap:
        raise ValueError(f"delta must lie in (0, {gap:.6g}]")
    if grid is None:
        if isinstance(sys, SpectralSystem):
            fastest = float(sys.eigenvalues[-1])
        else:
            fastest = float(np.abs(np.linalg.eigvals(sys.a_matrix)).max())
        grid = np.geomspace(1e-4 / fastest, 60.0 / delta, 600)
        if r == 0:
            grid = np.concatenate([[0.0], grid])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("time grid must not be empty")
    values = np.array(
        [_operator_norm_power_semigroup(sys, r, t) * t**r * np.exp(delta * t) for t in grid]
    )
    return DecayBound(prefactor=float(values.max()), rate=float(delta), power=float(r))


def system_from_config(doc: dict):
    """Build a system from its JSON configuration document.

    Spectral documents carry either explicit ``eigenvalues``/``input_coeffs``
    lists or ``eigenvalue_rule``/``coeff_rule`` strings plus ``modes``;
    matrix documents carry dense ``a`` and ``b`` arrays.
    """
    if not isinstance(doc, dict):
        raise ValueError("system config must be a JSON object")
    kind = doc.get("type")
    if kind == "spectral":
        modes = doc.get("modes")
        if "eigenvalues" in doc:
            eigenvalues = [float(v) for v in doc["eigenvalues"]]
        elif "eigenvalue_rule" in doc:
            if modes is None:
                raise ValueError("eigenvalue_rule requires 'modes'")
            eigenvalues = evaluate_rule(doc["eigenvalue_rule"], int(modes))
        else:
            raise ValueError("spectral config needs 'eigenvalues' or 'eigenvalue_rule'")
        if "input_coeffs" in doc:
            coeffs = [float(v) for v in doc["input_coeffs"]]
        elif "coeff_rule" in doc:
            if modes is None:
                raise ValueError("coeff_rule requires 'modes'")
            coeffs = evaluate_rule(doc["coeff_rule"], int(modes))
        else:
            raise ValueError("spectral config needs 'input_coeffs' or 'coeff_rule'")
        if modes is not None and (len(eigenvalues) != int(modes) or len(coeffs) != int(modes)):
            raise ValueError("'modes' disagrees with the sequence lengths")
        return SpectralSystem(
            np.array(eigenvalues), np.array(coeffs), label=doc.get("label", "spectral")
        )
    if kind == "matrix":
        if "a" not in doc or "b" not in doc:
            raise ValueError("matrix config needs 'a' and 'b'")
        return MatrixSystem(
            np.array(doc["a"], dtype=float),
            np.array(doc["b"], dtype=float),
            label=doc.get("label", "matrix"),
        )
    raise ValueError(f"unknown system type {kind!r}")


def system_to_config(sys) -> dict:
    """Serialize a system back to its JSON configuration document."""
    if isinstance(sys, SpectralSystem):
        return {
            "type": "spectral",
            "eigenvalues": [float(v) for v in sys.eigenvalues],
            "input_coeffs": [float(v) for v in sys.input_coeffs],
            "modes": sys.mode_count,
            "label": sys.label,
        }
    if isinstance(sys, MatrixSystem):
        if np.iscomplexobj(sys.a_matrix) or np.iscomplexobj(sys.b_matrix):
            raise ValueError("complex matrix systems have no JSON representation")
        return {
            "type": "matrix",
            "a": sys.a_matrix.tolist(),
            "b": sys.b_matrix.tolist(),
            "label": sys.label,
        }
    raise TypeError(f"unsupported system {type(sys).__name__}")
