"""Nonconvex bond potential, critical strain and elastic/fracture calibration.

The pair potential per unit length between two points a distance ``xi`` apart
is

    W(S, xi) = J(xi / eps) / (eps * xi) * Psi(xi * S**2)

where ``Psi`` is a bounded, increasing profile with ``Psi(0) = 0`` and
``Psi'(0) > 0`` and ``J`` is a positive influence profile on ``[0, 1)``.
Everything in this module is a pure function of immutable data.
"""

from dataclasses import dataclass, field
from math import gamma, pi, sqrt

import numpy as np

from pdfrac.errors import ConfigurationError, DomainError

# composite Gauss-Legendre rule used for influence moments: 16 panels x 4 nodes
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)
_MOMENT_PANELS = 16


def unit_ball_volume(d):
    """Volume of the unit ball in ``d`` dimensions (omega_1 = 2, omega_2 = pi, ...)."""
    return pi ** (d / 2.0) / gamma(d / 2.0 + 1.0)


def composite_gauss_legendre(func, a, b, panels, order=4):
    """Integrate ``func`` over ``[a, b]`` with a composite Gauss-Legendre rule."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    w = (half[:, None] * weights[None, :]).ravel()
    return float(np.dot(w, func(x)))


class PairPotential:
    """Base class for the bond profile ``Psi(p)``.

    Subclasses implement ``__call__``, ``d1`` and ``d2`` (value, first and
    second derivative in ``p``), ``plateau`` (the limit at infinity) and
    ``scale`` (a characteristic argument used to bracket the critical root).
    """

    plateau: float
    scale: float

    def __call__(self, p):
        raise NotImplementedError

    def d1(self, p):
        raise NotImplementedError

    def d2(self, p):
        raise NotImplementedError

    def critical_argument(self):
        """Root ``r_c`` of ``Psi'(r) + 2 r Psi''(r) = 0``."""
        return solve_critical_argument(self)

    def validate(self):
        if not self.d1(0.0) > 0.0:
            raise ConfigurationError("potential must satisfy Psi'(0) > 0")
        if abs(float(self(0.0))) > 0.0:
            raise ConfigurationError("potential must satisfy Psi(0) = 0")
        if not np.isfinite(self.plateau) or self.plateau <= 0.0:
            raise ConfigurationError("potential must have a finite positive plateau")


@dataclass(frozen=True)
class ExponentialPotential(PairPotential):
    """``Psi(p) = c * (1 - exp(-beta * p))``.

    Parameters
    ----------
    c : float
        Plateau value ``Psi(inf)``.
    beta : float
        Steepness in 1/m; the critical root is ``1 / (2 beta)``.
    """

    c: float
    beta: float

    def __post_init__(self):
        if not (self.c > 0.0 and self.beta > 0.0):
            raise DomainError("c and beta must be positive")

    @property
    def plateau(self):
        return self.c

    @property
    def scale(self):
        return 1.0 / self.beta

    def __call__(self, p):
        return self.c * -np.expm1(-self.beta * np.asarray(p, dtype=float))

    def d1(self, p):
        return self.c * self.beta * np.exp(-self.beta * np.asarray(p, dtype=float))

    def d2(self, p):
        return -self.c * self.beta**2 * np.exp(-self.beta * np.asarray(p, dtype=float))

    def critical_argument(self):
        return 0.5 / self.beta


def solve_critical_argument(potential, r_max=None, rtol=1e-14, max_iter=400):
    """Bisection for the root of ``Psi'(r) + 2 r Psi''(r)``.

    The bracket is ``[0, r_max]`` with ``r_max = 10 * potential.scale`` unless
    given. Any closed form the potential may know is ignored.
    """
    def g(r):
        return float(potential.d1(r) + 2.0 * r * potential.d2(r))

    lo = 0.0
    hi = 10.0 * potential.scale if r_max is None else float(r_max)
    g_lo, g_hi = g(lo), g(hi)
    if not (g_lo > 0.0 and g_hi < 0.0):
        raise ConfigurationError(
            f"critical root not bracketed in [0, {hi:g}]; profile is not admissible")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if g_mid == 0.0:
            return mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 0.5 * (lo + hi)


class InfluenceProfile:
    """Influence ``J(q)`` on ``q`` in ``[0, 1]``, positive on ``[0, 1)``."""

    def __call__(self, q):
        raise NotImplementedError

    def moment(self, d):
        """``M_d = int_0^1 r^d J(r) dr`` by the fixed 64-point composite rule."""
        return composite_gauss_legendre(lambda r: r**d * self(r), 0.0, 1.0, _MOMENT_PANELS)


@dataclass(frozen=True)
class LinearInfluence(InfluenceProfile):
    """``J(q) = 1 - q``."""

    def __call__(self, q):
        return 1.0 - np.asarray(q, dtype=float)


@dataclass(frozen=True)
class CallableInfluence(InfluenceProfile):
    """Wraps an arbitrary vectorised callable as an influence profile."""

    func: object

    def __call__(self, q):
        return self.func(np.asarray(q, dtype=float))


@dataclass(frozen=True)
class MaterialModel:
    """Calibrated nonconvex bond-based material.

    Parameters
    ----------
    potential : PairPotential
    influence : InfluenceProfile
    horizon : float
        Interaction radius in m.
    density : float
        Mass density; per unit thickness when ``dim == 2``.
    dim : int
        Spatial dimension, 2 or 3.
    """

    potential: PairPotential
    influence: InfluenceProfile = field(default_factory=LinearInfluence)
    horizon: float = 1.0
    density: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ConfigurationError("dimension must be 2 or 3")
        if not (self.horizon > 0.0 and self.density > 0.0):
            raise DomainError("horizon and density must be positive")
        self.potential.validate()

    @property
    def moment(self):
        return self.influence.moment(self.dim)

    @property
    def horizon_measure(self):
        """Analytic neighbourhood measure ``V_eps`` (area in 2D, volume in 3D)."""
        return unit_ball_volume(self.dim) * self.horizon**self.dim

    @property
    def critical_argument(self):
        return self.potential.critical_argument()

    @property
    def mu(self):
        return moduli_from_profile(self)[0]

    @property
    def lam(self):
        return moduli_from_profile(self)[1]

    @property
    def bulk_modulus(self):
        return bulk_modulus(self)

    @property
    def G(self):
        return energy_release_rate(self)

    @property
    def shear_wave_speed(self):
        return sqrt(self.mu / self.density)

    @property
    def dilatational_wave_speed(self):
        return sqrt((self.lam + 2.0 * self.mu) / self.density)


def _check_length(xi, model):
    xi = np.asarray(xi, dtype=float)
    eps = model.horizon
    if np.any(xi <= 0.0) or np.any(xi > eps * (1.0 + 1e-12)):
        raise DomainError(f"bond length must lie in (0, {eps:g}]")
    return xi


def bond_potential(S, xi, model):
    """Pair potential per unit length ``J(xi/eps) / (eps xi) * Psi(xi S^2)``."""
    xi = _check_length(xi, model)
    S = np.asarray(S, dtype=float)
    eps = model.horizon
    return model.influence(xi / eps) / (eps * xi) * model.potential(xi * S * S)


def pairwise_force_density(S, xi, model):
    """Derivative of :func:`bond_potential` in ``S``: ``2 J/eps * Psi'(xi S^2) * S``."""
    xi = _check_length(xi, model)
    S = np.asarray(S, dtype=float)
    eps = model.horizon
    return 2.0 * model.influence(xi / eps) / eps * model.potential.d1(xi * S * S) * S


def force_derivative(S, xi, model):
    """Second strain derivative ``2 J/eps * (Psi'(p) + 2 p Psi''(p))`` with ``p = xi S^2``."""
    xi = _check_length(xi, model)
    S = np.asarray(S, dtype=float)
    p = xi * S * S
    pot = model.potential
    return 2.0 * model.influence(xi / model.horizon) / model.horizon * (pot.d1(p) + 2.0 * p * pot.d2(p))


def critical_strain(xi, model):
    """Strain at the peak of the bond force curve, ``sqrt(r_c / xi)``."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0.0):
        raise DomainError("bond length must be positive")
    return np.sqrt(model.critical_argument / xi)


def moduli_from_profile(model):
    """Return ``(mu, lam)``; both equal ``M_d Psi'(0) / (d + 2)``."""
    mu = model.moment * float(model.potential.d1(0.0)) / (model.dim + 2)
    return mu, mu


def bulk_modulus(model):
    """``lam + mu`` in 2D and ``lam + 2 mu / 3`` in 3D."""
    mu, lam = moduli_from_profile(model)
    if model.dim == 2:
        return lam + mu
    return lam + 2.0 * mu / 3.0


def energy_release_rate(model):
    """Critical energy release rate ``M_d * 2 omega_{d-1} / omega_d * Psi_inf``."""
    d = model.dim
    return model.moment * 2.0 * unit_ball_volume(d - 1) / unit_ball_volume(d) * model.potential.plateau


def shear_modulus_from_bulk(k, d):
    """Invert :func:`bulk_modulus` for materials with ``lam == mu``."""
    return k / 2.0 if d == 2 else 0.6 * k


def calibrate(k, G, dim=2, density=1.0, horizon=1.0, influence=None):
    """Build the exponential-profile material with bulk modulus ``k`` and release rate ``G``.

    Examples
    --------
    >>> m = calibrate(25e9, 500.0, dim=2, density=1200.0, horizon=7.5e-4)
    >>> round(m.potential.c, 1)
    4712.4
    """
    if not (k > 0.0 and G > 0.0):
        raise DomainError("bulk modulus and energy release rate must be positive")
    if dim not in (2, 3):
        raise ConfigurationError("dimension must be 2 or 3")
    influence = LinearInfluence() if influence is None else influence
    M = influence.moment(dim)
    c = G * unit_ball_volume(dim) / (2.0 * M * unit_ball_volume(dim - 1))
    mu = shear_modulus_from_bulk(k, dim)
    beta = mu * (dim + 2) / (M * c)
    return MaterialModel(ExponentialPotential(c, beta), influence, horizon, density, dim)
