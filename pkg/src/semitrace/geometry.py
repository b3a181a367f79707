"""Moebius maps, reproducing kernels and the weighted measure on the unit ball.

Points are complex arrays whose last axis has length ``n``.  Most functions
accept a single base point ``z`` of shape ``(n,)`` and a batch of points ``w``
of shape ``(..., n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

# Points this close to the sphere make kernel powers overflow.
BOUNDARY_TOL = 1e-14


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class UnsupportedOperation(TypeError):
    """Raised when a symbol lacks the derivatives an operation needs."""


@dataclass(frozen=True)
class SpaceParams:
    """Complex dimension ``n`` and weight ``t`` of the space L^2_{a,t}(B_n)."""

    n: int
    t: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n}")
        if not self.t > -1:
            raise DomainError(f"weight must satisfy t > -1, got {self.t}")

    @property
    def log_norm_const(self) -> float:
        """log of (n-1)! / (pi^n B(n, t+1))."""
        return math.lgamma(self.n) - self.n * math.log(math.pi) - betaln(self.n, self.t + 1)

    @property
    def norm_const(self) -> float:
        return math.exp(self.log_norm_const)

    @property
    def sphere_area(self) -> float:
        """Surface area 2 pi^n / (n-1)! of the unit sphere in C^n."""
        return sphere_area(self.n)


def sphere_area(n: int) -> float:
    return 2.0 * math.pi**n / math.factorial(n - 1)


def as_point(z, n: int | None = None) -> np.ndarray:
    """Coerce ``z`` to a complex array with a trailing coordinate axis."""
    arr = np.asarray(z, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if n is not None and arr.shape[-1] != n:
        raise DomainError(f"expected {n} coordinates, got shape {arr.shape}")
    return arr


def inner(z, w) -> np.ndarray:
    """Hermitian product <z, w> = sum z_i conj(w_i) over the last axis."""
    return np.sum(np.asarray(z) * np.conj(w), axis=-1)


def norm_sq(z) -> np.ndarray:
    z = np.asarray(z)
    return np.sum(z.real**2 + z.imag**2, axis=-1)


def _require_interior(z: np.ndarray, what: str = "point") -> None:
    if np.any(1.0 - norm_sq(z) < BOUNDARY_TOL):
        raise DomainError(f"{what} must lie in the open unit ball")


def _require_closed(z: np.ndarray, what: str = "point") -> None:
    if np.any(norm_sq(z) > 1.0 + 1e-12):
        raise DomainError(f"{what} must lie in the closed unit ball")


@dataclass(frozen=True)
class MobiusFrame:
    """Orthogonal split C^n = span(z) + z^perp and the matrix A_z.

    ``P`` projects onto the line through the base point, ``Q = I - P``, and
    ``a_matrix`` is ``(1-|z|^2) P + sqrt(1-|z|^2) Q`` so that
    ``z - phi_z(w) = A_z w / (1 - <w, z>)``.
    """

    base: np.ndarray
    a_matrix: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def apply_a(self, w) -> np.ndarray:
        return np.asarray(w) @ self.a_matrix.T


def frame(z) -> MobiusFrame:
    z = as_point(z)
    _require_interior(z, "base point")
    n = z.shape[-1]
    r2 = float(norm_sq(z))
    if r2 == 0.0:
        P = np.zeros((n, n), dtype=complex)
    else:
        P = np.outer(z, np.conj(z)) / r2
    Q = np.eye(n, dtype=complex) - P
    A = (1.0 - r2) * P + math.sqrt(1.0 - r2) * Q
    return MobiusFrame(base=z, a_matrix=A, P=P, Q=Q)


def mobius(z, w) -> np.ndarray:
    """The involutive automorphism phi_z exchanging ``z`` and 0."""
    z = as_point(z)
    w = as_point(w, z.shape[-1])
    _require_interior(z, "base point")
    _require_closed(w)
    r2 = float(norm_sq(z))
    if r2 == 0.0:
        return -w
    wz = inner(w, z)[..., None]
    Pw = wz * z / r2
    Qw = w - Pw
    return (z - Pw - math.sqrt(1.0 - r2) * Qw) / (1.0 - wz)


def pseudo_hyperbolic(z, w) -> np.ndarray:
    """|phi_z(w)|, computed from the identity for 1 - |phi_z(w)|^2."""
    z = as_point(z)
    w = as_point(w, z.shape[-1])
    _require_interior(z)
    _require_interior(w)
    return np.sqrt(np.maximum(norm_sq(mobius(z, w)), 0.0))


def one_minus_phi_sq(z, w) -> np.ndarray:
    """(1-|z|^2)(1-|w|^2)/|1-<z,w>|^2, free of cancellation near the diagonal."""
    z = as_point(z)
    w = as_point(w, z.shape[-1])
    return (1.0 - norm_sq(z)) * (1.0 - norm_sq(w)) / np.abs(1.0 - inner(z, w)) ** 2


def kernel(params: SpaceParams, z, w) -> np.ndarray:
    """Reproducing kernel K_w(z) = (1 - <z,w>)^{-(n+1+t)}, principal branch."""
    z = as_point(z, params.n)
    w = as_point(w, params.n)
    base = 1.0 - inner(z, w)
    if np.any(np.abs(base) < BOUNDARY_TOL):
        raise DomainError("kernel is singular when <z, w> = 1")
    return np.exp(-(params.n + 1 + params.t) * np.log(base))


def measure_density(params: SpaceParams, z) -> np.ndarray:
    """Density of the probability measure d lambda_t against Lebesgue measure."""
    z = as_point(z, params.n)
    _require_closed(z)
    one_minus = np.maximum(1.0 - norm_sq(z), 0.0)
    return params.norm_const * one_minus**params.t


def levi_form(f, z, xi) -> complex:
    """sum_ij d_i dbar_j f(z) xi_i conj(xi_j)."""
    hess = getattr(f, "mixed_hessian", None)
    if hess is None:
        raise UnsupportedOperation("symbol does not provide mixed second partials")
    z = as_point(z)
    xi = as_point(xi, z.shape[-1])
    H = np.asarray(hess(z))
    return complex(np.einsum("...ij,...i,...j->...", H, xi, np.conj(xi)))


def quasi_metric(z, w) -> np.ndarray:
    """d(z, w) = |1 - <z,w>|^{1/2}, a metric on the closed ball."""
    return np.sqrt(np.abs(1.0 - inner(as_point(z), as_point(w))))


def mobius_jacobian(z, w) -> np.ndarray:
    """Real Jacobian of w -> phi_z(w): (1-|z|^2)^{n+1} / |1-<w,z>|^{2n+2}."""
    z = as_point(z)
    w = as_point(w, z.shape[-1])
    n = z.shape[-1]
    return (1.0 - norm_sq(z)) ** (n + 1) / np.abs(1.0 - inner(w, z)) ** (2 * n + 2)
