"""Integration rules on the disk, the ball B_2, spheres and product domains.

Every rule is deterministic.  Weights either integrate against Lebesgue
measure or have the normalized Bergman density folded in, so that
``rule.integrate(f)`` approximates the corresponding integral directly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hyp2f1, roots_jacobi, roots_legendre
from scipy.stats import qmc

from .geometry import SpaceParams, sphere_area

DEFAULT_NODE_CAP = 50_000_000


class ResourceError(RuntimeError):
    """Raised when a rule would exceed its node budget."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights on a tagged domain.

    For product domains ``nodes`` has shape ``(N, 2, n)``: the pair (z, w).
    """

    nodes: np.ndarray
    weights: np.ndarray
    domain: str
    t: float | None = None
    folded: bool = False
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.weights)

    def integrate(self, f, chunk: int = 1 << 20):
        """Weighted sum of ``f(nodes)``, reduced chunkwise in a fixed order."""
        total = 0.0
        for lo in range(0, len(self.weights), chunk):
            vals = np.asarray(f(self.nodes[lo:lo + chunk]))
            total = total + np.sum(vals * self.weights[lo:lo + chunk])
        return total

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def gauss_jacobi01(m: int, a: float, b: float = 0.0):
    """Nodes and weights on [0,1] for the weight (1-s)^a s^b."""
    x, w = roots_jacobi(m, a, b)
    s = 0.5 * (x + 1.0)
    return s, w * 2.0 ** (-(a + b + 1.0))


def gauss_legendre01(m: int):
    x, w = roots_legendre(m)
    return 0.5 * (x + 1.0), 0.5 * w


def disk_rule(t: float, n_radial: int = 64, n_angular: int = 128,
              measure: str = "lambda") -> QuadratureRule:
    """Gauss rule in s = |z|^2 times a uniform angular grid.

    ``measure="lambda"`` folds in the probability density of d lambda_t;
    ``measure="lebesgue"`` integrates against area measure (``t`` unused).
    """
    if n_radial < 1 or n_angular < 1:
        raise ValueError("node counts must be positive")
    if measure == "lambda":
        if not t > -1:
            raise ValueError("weight must satisfy t > -1")
        s, ws = gauss_jacobi01(n_radial, t)
        # dλ_t = (t+1)/π (1-s)^t (1/2) ds dθ
        ws = ws * (t + 1.0) / n_angular
        folded = True
    elif measure == "lebesgue":
        s, ws = gauss_legendre01(n_radial)
        ws = ws * math.pi / n_angular
        folded = False
    else:
        raise ValueError(f"unknown measure {measure!r}")
    theta = 2.0 * math.pi * np.arange(n_angular) / n_angular
    r = np.sqrt(s)
    z = (r[:, None] * np.exp(1j * theta)[None, :]).reshape(-1, 1)
    w = np.repeat(ws, n_angular)
    return QuadratureRule(z, w, "disk", t=t, folded=folded,
                          meta={"n_radial": n_radial, "n_angular": n_angular})


def sphere_rule(n: int, resolution: int = 16, normalized: bool = True) -> QuadratureRule:
    """Product rule on the unit sphere of C^n for n in {1, 2}.

    For n = 2 the sphere is parameterized by u = |zeta_1|^2 and two phases,
    under which the surface measure is (1/2) du d(phi_1) d(phi_2).
    Polynomials z^a conj(z)^b with |a|, |b| < resolution are integrated exactly.
    """
    if n == 1:
        m = 2 * resolution
        th = 2.0 * math.pi * np.arange(m) / m
        nodes = np.exp(1j * th)[:, None]
        w = np.full(m, 2.0 * math.pi / m)
    elif n == 2:
        u, wu = gauss_legendre01(resolution)
        m = 2 * resolution
        ph = 2.0 * math.pi * np.arange(m) / m
        U, P1, P2 = np.meshgrid(u, ph, ph, indexing="ij")
        nodes = np.stack([np.sqrt(U) * np.exp(1j * P1),
                          np.sqrt(1.0 - U) * np.exp(1j * P2)], axis=-1).reshape(-1, 2)
        w = (wu[:, None, None] * np.full((1, m, m), 0.5 * (2.0 * math.pi / m) ** 2)).reshape(-1)
    else:
        raise NotImplementedError("sphere rules are provided for n = 1 and n = 2 only")
    if normalized:
        w = w / sphere_area(n)
    return QuadratureRule(nodes, w, "sphere", folded=normalized,
                          meta={"n": n, "resolution": resolution})


def ball_rule(params: SpaceParams, n_radial: int = 32, resolution: int = 12,
              measure: str = "lambda") -> QuadratureRule:
    """Radial Gauss-Jacobi in s = |z|^2 times a sphere rule, for n in {1, 2}.

    Uses  int_{B_n} f dm = (1/2) int_0^1 s^{n-1} int_S f(sqrt(s) zeta) d sigma ds.
    """
    n, t = params.n, params.t
    sph = sphere_rule(n, resolution, normalized=False)
    if measure == "lambda":
        s, ws = gauss_jacobi01(n_radial, t, n - 1)
        ws = 0.5 * ws * params.norm_const
        folded = True
    elif measure == "lebesgue":
        s, ws = gauss_jacobi01(n_radial, 0.0, n - 1)
        ws = 0.5 * ws
        folded = False
    else:
        raise ValueError(f"unknown measure {measure!r}")
    nodes = (np.sqrt(s)[:, None, None] * sph.nodes[None, :, :]).reshape(-1, n)
    w = (ws[:, None] * sph.weights[None, :]).reshape(-1)
    return QuadratureRule(nodes, w, "ball" if n > 1 else "disk", t=t, folded=folded,
                          meta={"n_radial": n_radial, "resolution": resolution})


def product_rule(base: QuadratureRule, node_cap: int = DEFAULT_NODE_CAP) -> QuadratureRule:
    """Tensor square of a disk or ball rule, ordered with the first factor slowest."""
    if base.domain not in ("disk", "ball"):
        raise ValueError("product rules are built from disk or ball rules")
    m = len(base)
    if m * m > node_cap:
        raise ResourceError(
            f"product rule needs {m * m} nodes, over the cap of {node_cap}; "
            "use the Monte Carlo pair rule instead")
    z = np.repeat(base.nodes, m, axis=0)
    w = np.tile(base.nodes, (m, 1))
    nodes = np.stack([z, w], axis=1)
    weights = np.outer(base.weights, base.weights).reshape(-1)
    return QuadratureRule(nodes, weights, base.domain + "^2", t=base.t,
                          folded=base.folded, meta=dict(base.meta, product=True))


def _sobol(dim: int, samples: int, seed: int) -> np.ndarray:
    eng = qmc.Sobol(d=dim, scramble=True, seed=seed)
    with warnings.catch_warnings():
        # balance warnings for non power-of-two sample counts are expected
        warnings.simplefilter("ignore", UserWarning)
        return eng.random(samples)


def uniform_to_ball2(u: np.ndarray) -> np.ndarray:
    """Map four uniforms to a uniformly distributed point of B_2.

    |z| = u0^{1/4} preserves volume; |zeta_1|^2 is uniform on the sphere of C^2.
    """
    r = u[:, 0] ** 0.25
    a = np.sqrt(u[:, 1])
    b = np.sqrt(1.0 - u[:, 1])
    z1 = r * a * np.exp(2j * math.pi * u[:, 2])
    z2 = r * b * np.exp(2j * math.pi * u[:, 3])
    return np.stack([z1, z2], axis=-1)


@dataclass(frozen=True)
class MonteCarloRule:
    """Quasi-Monte Carlo rule on B_2 x B_2 against Lebesgue measure."""

    samples: int
    seed: int
    chunk: int = 1 << 18

    @property
    def volume(self) -> float:
        return (math.pi**2 / 2.0) ** 2

    def points(self):
        """Yield (z, w) chunks; the full sequence is drawn once for determinism."""
        eng = qmc.Sobol(d=8, scramble=True, seed=self.seed)
        left = self.samples
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)
            while left > 0:
                m = min(self.chunk, left)
                u = eng.random(m)
                left -= m
                yield uniform_to_ball2(u[:, :4]), uniform_to_ball2(u[:, 4:])

    def estimate(self, f) -> tuple[complex, float]:
        """Return (integral estimate, standard error) of f(z, w) dm(z) dm(w)."""
        total = 0.0
        total_sq = 0.0
        for z, w in self.points():
            v = np.asarray(f(z, w))
            total = total + np.sum(v)
            total_sq += float(np.sum(np.abs(v) ** 2))
        mean = total / self.samples
        var = max(total_sq / self.samples - abs(mean) ** 2, 0.0)
        stderr = self.volume * math.sqrt(var / self.samples)
        return self.volume * mean, stderr


def mc_rule_ball2_pair(samples: int, seed: int = 0) -> MonteCarloRule:
    if samples < 1:
        raise ValueError("samples must be positive")
    return MonteCarloRule(int(samples), int(seed))


def rudin_forelli_integral(n: int, t: float, c: float, depth: float) -> float:
    """int (1-|w|^2)^t / |1-<z,w>|^{n+1+t+c} dm(w) at a point with 1-|z|^2 = depth.

    By unitary invariance z is placed on the first axis.  The sphere average
    at each radius has a closed form; the radial variable s = |w|^2 uses
    Gauss-Legendre panels graded geometrically toward s = 1, where the
    integrand concentrates.
    """
    if n not in (1, 2):
        raise NotImplementedError("kernel-power integrals are provided for n = 1 and n = 2 only")
    r0 = math.sqrt(1.0 - depth)
    p = n + 1 + t + c
    edges = [0.0] + [1.0 - 2.0**-k for k in range(1, 60)] + [1.0]
    xs, ws = gauss_legendre01(16)
    s_nodes, s_w = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        s_nodes.append(a + (b - a) * xs)
        s_w.append((b - a) * ws)
    s = np.concatenate(s_nodes)
    sw = np.concatenate(s_w)
    # normalized sphere average of |1 - r0 sqrt(s) zeta_1|^{-p}
    avg = _sphere_average(n, r0 * np.sqrt(s), p)
    radial = 0.5 * sphere_area(n) * sw * s ** (n - 1) * (1.0 - s) ** t * avg
    return float(np.sum(radial))


def rudin_forelli_envelope(c: float, depth: float) -> float:
    """Growth model of the kernel-power integral as 1-|z|^2 = depth -> 0."""
    if c > 0:
        return depth ** (-c)
    if c == 0:
        return math.log(1.0 / depth)
    return 1.0


def rudin_forelli_ratios(n: int, t: float, c: float, depths=(1e-1, 1e-2, 1e-3, 1e-4, 1e-5)):
    """Integral over envelope at each depth."""
    return np.array([rudin_forelli_integral(n, t, c, d) / rudin_forelli_envelope(c, d)
                     for d in depths])


def _sphere_average(n: int, a: np.ndarray, p: float) -> np.ndarray:
    """Normalized int_S |1 - a zeta_1|^{-p} d sigma for 0 <= a < 1.

    Expanding both powers and using the sphere moments of zeta_1 gives the
    Gauss series 2F1(p/2, p/2; n; a^2), evaluated by scipy.
    """
    return hyp2f1(p / 2.0, p / 2.0, float(n), np.asarray(a) ** 2)
