"""Nonlocal internal force assembly and velocity-Verlet time stepping.

The acceleration of node ``i`` is

    a_i = ( 2 / V_eps * sum_j f(S_ij, xi_ij) e_ij w_ij V_j + b_i ) / rho

with ``f`` the pairwise force density. Each node sums its own bond row in
index order, so the result does not depend on how nodes are split across
threads.
"""

from dataclasses import dataclass, field

import numba
import numpy as np

from pdfrac.errors import SimulationFault
from pdfrac.material import ExponentialPotential


@dataclass
class State:
    """Nodal kinematics at time ``t``; arrays are ``(n, 2)``."""

    u: np.ndarray
    v: np.ndarray
    a: np.ndarray
    t: float = 0.0
    step: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n, 2)), np.zeros((n, 2)), np.zeros((n, 2)))

    def copy(self):
        return State(self.u.copy(), self.v.copy(), self.a.copy(), self.t, self.step)


@dataclass
class BodyForce:
    """Force density per node, either fixed or a function of time."""

    values: np.ndarray = None
    rule: object = field(default=None, repr=False)

    def __call__(self, t):
        if self.rule is not None:
            return np.asarray(self.rule(t), dtype=float)
        return self.values


def bond_strain(u, x, i, j):
    """Linearised strain ``(u_j - u_i) . e / |x_j - x_i|`` of a single bond."""
    d = np.asarray(x[j], dtype=float) - np.asarray(x[i], dtype=float)
    xi = np.hypot(d[0], d[1])
    return float(np.dot(u[j] - u[i], d / xi) / xi)


def bond_strains(u, nb):
    """Strain of every bond row in ``nb``."""
    du = u[nb.neighbors] - u[_owner(nb)]
    return np.einsum("ij,ij->i", du, nb.direction) / nb.length


def _owner(nb):
    owner = nb.cache.get("owner")
    if owner is None:
        owner = nb.owner
        nb.cache["owner"] = owner
    return owner


def _force_coefficients(model, nb):
    """Per-bond prefactor ``(2 / V_eps) (2 J / eps) w V_j`` (cached on ``nb``)."""
    key = ("coef", id(model.influence), model.horizon)
    coef = nb.cache.get(key)
    if coef is None:
        eps = model.horizon
        J = model.influence(nb.length / eps)
        coef = 2.0 / model.horizon_measure * 2.0 * J / eps * nb.weight * nb.volume[nb.neighbors]
        nb.cache[key] = coef
    return coef


@numba.njit(parallel=True, cache=True)
def _exponential_kernel(u, b, offsets, neighbors, length, direction, coef, active, beta,
                        inv_rho, out):
    n = len(offsets) - 1
    for i in numba.prange(n):
        fx = 0.0
        fy = 0.0
        for k in range(offsets[i], offsets[i + 1]):
            if active[k]:
                j = neighbors[k]
                ex = direction[k, 0]
                ey = direction[k, 1]
                s = ((u[j, 0] - u[i, 0]) * ex + (u[j, 1] - u[i, 1]) * ey) / length[k]
                f = coef[k] * np.exp(-beta * length[k] * s * s) * s
                fx += f * ex
                fy += f * ey
        out[i, 0] = (fx + b[i, 0]) * inv_rho
        out[i, 1] = (fy + b[i, 1]) * inv_rho


def internal_force_generic(u, model, nb):
    """Force density per node for any potential, by vectorised numpy (reference path)."""
    owner = _owner(nb)
    S = np.einsum("ij,ij->i", u[nb.neighbors] - u[owner], nb.direction) / nb.length
    f = _force_coefficients(model, nb) * model.potential.d1(nb.length * S * S) * S
    f = np.where(nb.active, f, 0.0)
    n = nb.n_nodes
    return np.column_stack([
        np.bincount(owner, weights=f * nb.direction[:, 0], minlength=n),
        np.bincount(owner, weights=f * nb.direction[:, 1], minlength=n),
    ])


def compute_forces(u, model, nb, body_force=None, use_kernel=True):
    """Acceleration of every node from bond forces plus body force.

    Parameters
    ----------
    u : ndarray, shape (n, 2)
        Displacements.
    model : MaterialModel
    nb : Neighborhoods
    body_force : ndarray, shape (n, 2), optional
        Force per unit volume.
    use_kernel : bool
        Use the compiled kernel when the potential supports it.

    Raises
    ------
    SimulationFault
        If any acceleration is not finite; the first offending node is reported.
    """
    n = nb.n_nodes
    b = np.zeros((n, 2)) if body_force is None else np.asarray(body_force, dtype=float)
    coef = _force_coefficients(model, nb)
    pot = model.potential
    if use_kernel and isinstance(pot, ExponentialPotential):
        a = np.empty((n, 2))
        _exponential_kernel(np.ascontiguousarray(u, dtype=np.float64), b, nb.offsets,
                            nb.neighbors, nb.length, nb.direction,
                            coef * pot.c * pot.beta, nb.active, pot.beta,
                            1.0 / model.density, a)
    else:
        a = (internal_force_generic(u, model, nb) + b) / model.density
    # void nodes carry no mass
    a[nb.volume == 0.0] = 0.0
    if not np.all(np.isfinite(a)):
        bad = int(np.flatnonzero(~np.isfinite(a).all(axis=1))[0])
        raise SimulationFault(f"non-finite acceleration at node {bad}", node=bad)
    return a


def stable_timestep(model, h, safety=0.5):
    """``safety * h / c_L`` with ``c_L`` the dilatational wave speed."""
    return safety * h / model.dilatational_wave_speed


def enforce_regions(state, regions):
    """Apply Dirichlet and driven-velocity constraints in place."""
    if regions is None:
        return
    state.u[regions.fixed] = 0.0
    state.v[regions.fixed] = 0.0
    state.v[regions.driven] = regions.velocity[regions.driven]


def step(state, model, nb, regions, dt, body_force=None):
    """Advance ``state`` by one velocity-Verlet step (in place) and return it.

    ``body_force`` may be an array or a callable of time. Driven components
    keep their prescribed velocity exactly; fixed nodes stay at zero.
    """
    v_half = state.v + 0.5 * dt * state.a
    if regions is not None:
        v_half[regions.driven] = regions.velocity[regions.driven]
        v_half[regions.fixed] = 0.0
    state.u += dt * v_half
    if regions is not None:
        state.u[regions.fixed] = 0.0
    state.t += dt
    state.step += 1
    b = body_force(state.t) if callable(body_force) else body_force
    state.a = compute_forces(state.u, model, nb, b)
    state.v = v_half + 0.5 * dt * state.a
    enforce_regions(state, regions)
    return state
