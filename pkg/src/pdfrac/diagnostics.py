"""Instability fields, stability tensor, energy ledger and crack-set extraction."""

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from pdfrac.dynamics import _owner, bond_strains
from pdfrac.errors import DomainError
from pdfrac.material import force_derivative


def _critical_strains(model, nb):
    key = ("Sc", model.critical_argument)
    Sc = nb.cache.get(key)
    if Sc is None:
        Sc = np.sqrt(model.critical_argument / nb.length)
        nb.cache[key] = Sc
    return Sc


def segment_max(values, offsets, fill=0.0):
    """Row-wise maximum of a CSR-laid-out array; empty rows get ``fill``."""
    n = len(offsets) - 1
    out = np.full(n, fill, dtype=float)
    counts = np.diff(offsets)
    nonempty = counts > 0
    if values.size:
        out[nonempty] = np.maximum.reduceat(values, offsets[:-1][nonempty])
    return out


def strain_ratio(u, model, nb):
    """``S / S_c`` for every bond row."""
    return bond_strains(u, nb) / _critical_strains(model, nb)


def compute_Z(u, model, nb):
    """Largest signed ratio ``S / S_c`` over each node's active bonds (0 with none)."""
    ratio = np.where(nb.active, strain_ratio(u, model, nb), -np.inf)
    Z = segment_max(ratio, nb.offsets, fill=0.0)
    return np.where(np.isfinite(Z), Z, 0.0)


def compute_gamma(u, model, nb):
    """Neighbourhood volume fraction with bonds strained past ``S_c``."""
    over = nb.active & (bond_strains(u, nb) > _critical_strains(model, nb))
    vol = np.where(over, nb.weight * nb.volume[nb.neighbors], 0.0)
    return np.bincount(_owner(nb), weights=vol, minlength=nb.n_nodes) / model.horizon_measure


def elastic_energy_density(u, model, nb):
    """Nodal energy density ``1/V_eps sum_j xi W(S, xi) w V_j`` (J per unit volume)."""
    S = bond_strains(u, nb)
    e = _pair_energy_density(S, model, nb)
    return np.bincount(_owner(nb), weights=e, minlength=nb.n_nodes)


def _pair_energy_density(S, model, nb):
    eps = model.horizon
    J = model.influence(nb.length / eps)
    e = J / eps * model.potential(nb.length * S * S) * nb.weight * nb.volume[nb.neighbors]
    return np.where(nb.active, e, 0.0) / model.horizon_measure


def _bond_tangent(u, model, nb):
    """``(1/xi) d^2W/dS^2 w V_j`` per bond; zero for inactive bonds."""
    S = bond_strains(u, nb)
    t = force_derivative(S, nb.length, model) / nb.length * nb.weight * nb.volume[nb.neighbors]
    return np.where(nb.active, t, 0.0)


def stability_tensor(u, model, nb, i, normal):
    """Half-neighbourhood tensor ``A_n`` at node ``i`` over bonds with ``e . n < 0``."""
    normal = np.asarray(normal, dtype=float)
    if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
        raise DomainError("normal must be a unit vector")
    rows = nb.bonds_of(i)
    e = nb.direction[rows]
    S = np.einsum("ij,ij->i", u[nb.neighbors[rows]] - u[i], e) / nb.length[rows]
    t = force_derivative(S, nb.length[rows], model) / nb.length[rows]
    t = t * nb.weight[rows] * nb.volume[nb.neighbors[rows]]
    keep = nb.active[rows] & (e @ normal < 0.0)
    t = np.where(keep, t, 0.0)
    return np.einsum("k,ki,kj->ij", t, e, e)


def min_eigenvalue_2x2(axx, axy, ayy):
    """Smaller eigenvalue of symmetric 2x2 matrices given componentwise."""
    half_tr = 0.5 * (axx + ayy)
    return half_tr - np.sqrt((0.5 * (axx - ayy)) ** 2 + axy**2)


def sample_normals(count=16):
    theta = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(theta), np.sin(theta)])


@dataclass
class StabilityReport:
    """Minimum eigenvalue of ``A_n`` over sampled normals, for a set of nodes.

    ``scale`` is the largest eigenvalue magnitude seen at each node. Nodes on
    a free surface can have a rank-deficient half-neighbourhood tensor whose
    zero eigenvalue comes out as round-off of either sign, so a node is only
    flagged when its minimum falls below ``-rtol * scale``.
    """

    nodes: np.ndarray
    normals: np.ndarray
    min_eig: np.ndarray
    gamma: np.ndarray
    scale: np.ndarray = None
    rtol: float = 1e-9

    @property
    def overall_min(self):
        return self.min_eig.min(axis=1)

    @property
    def flagged(self):
        scale = 0.0 if self.scale is None else self.scale
        return self.overall_min < -self.rtol * scale

    @property
    def flags_imply_gamma(self):
        return bool(np.all(self.gamma[self.flagged] > 0.0))


def nucleation_scan(u, model, nb, nodes=None, n_normals=16):
    """Evaluate the stability tensor at ``n_normals`` uniform normals for every requested node."""
    n = nb.n_nodes
    nodes = np.arange(n) if nodes is None else np.asarray(nodes)
    normals = sample_normals(n_normals)
    owner = _owner(nb)
    t = _bond_tangent(u, model, nb)
    e = nb.direction
    txx, txy, tyy = t * e[:, 0] ** 2, t * e[:, 0] * e[:, 1], t * e[:, 1] ** 2
    min_eig = np.empty((len(nodes), n_normals))
    scale = np.zeros(len(nodes))
    for k, normal in enumerate(normals):
        lower = (e @ normal) < 0.0
        axx, axy, ayy = (np.bincount(owner, weights=np.where(lower, c, 0.0), minlength=n)[nodes]
                         for c in (txx, txy, tyy))
        lo = min_eigenvalue_2x2(axx, axy, ayy)
        min_eig[:, k] = lo
        scale = np.maximum(scale, np.maximum(np.abs(lo), np.abs(axx + ayy - lo)))
    gamma = compute_gamma(u, model, nb)[nodes]
    return StabilityReport(nodes, normals, min_eig, gamma, scale)


@dataclass
class FieldSnapshot:
    """Per-node instability and energy fields at one time."""

    t: float
    Z: np.ndarray
    gamma: np.ndarray
    W: np.ndarray


def field_snapshot(state, model, nb):
    return FieldSnapshot(state.t, compute_Z(state.u, model, nb),
                         compute_gamma(state.u, model, nb),
                         elastic_energy_density(state.u, model, nb))


@dataclass
class LedgerEntry:
    t: float
    crack_length: float
    kinetic: float
    elastic: float
    fracture: float
    work: float
    residual: float
    griffith_reference: float


@dataclass
class EnergyLedger:
    """Time series of energy tallies plus the running external-work integral.

    External power is evaluated after every step and integrated with the
    trapezoidal rule, which matches the accuracy of the Verlet update.
    ``residual`` is the work done minus the change in stored energy
    (kinetic + elastic + fracture) since the first entry.
    """

    fracture_threshold: float = 0.99
    G: float = 0.0
    seed_length: float = 0.0
    entries: list = field(default_factory=list)
    work: float = 0.0
    _power: float = None
    _initial: float = None

    def accumulate_work(self, state, model, nb, regions, dt, body_force=None):
        p = external_power(state, model, nb, regions, body_force)
        if self._power is not None:
            self.work += 0.5 * dt * (self._power + p)
        self._power = p

    def record(self, state, model, nb, crack_length=0.0):
        kin, el, fr = energy_tallies(state, model, nb, self.fracture_threshold)
        total = kin + el + fr
        if self._initial is None:
            self._initial = total
        ref = self.G * max(crack_length - self.seed_length, 0.0) if self.entries else 0.0
        entry = LedgerEntry(state.t, crack_length, kin, el, fr, self.work,
                            self.work - (total - self._initial), ref)
        self.entries.append(entry)
        return entry

    def column(self, name):
        return np.array([getattr(e, name) for e in self.entries])


def energy_tallies(state, model, nb, fracture_threshold=0.99):
    """Return ``(kinetic, elastic, fracture)`` totals in J (per unit thickness in 2D)."""
    Vi = nb.volume
    kinetic = 0.5 * model.density * float(np.sum(Vi * np.einsum("ij,ij->i", state.v, state.v)))
    S = bond_strains(state.u, nb)
    owner = _owner(nb)
    e = _pair_energy_density(S, model, nb) * Vi[owner]
    broken = model.potential(nb.length * S * S) >= fracture_threshold * model.potential.plateau
    fracture = float(np.sum(np.where(broken, e, 0.0)))
    elastic = float(np.sum(np.where(broken, 0.0, e)))
    return kinetic, elastic, fracture


def external_power(state, model, nb, regions, body_force=None):
    """Power delivered by driven constraints and body forces."""
    V = nb.volume
    p = 0.0
    b = np.zeros_like(state.u) if body_force is None else np.asarray(body_force, dtype=float)
    if regions is not None:
        driven = regions.driven
        # the constraint cancels internal + body force on driven components
        internal = model.density * state.a - b
        p -= float(np.sum(np.where(driven, internal * V[:, None] * state.v, 0.0)))
        free = ~driven
    else:
        free = np.ones_like(state.u, dtype=bool)
    p += float(np.sum(np.where(free, b * V[:, None] * state.v, 0.0)))
    return p


@dataclass
class CrackSet:
    """Nodes with ``Z > 1`` plus derived length along the propagation axis."""

    nodes: np.ndarray
    length: float
    tip: np.ndarray = None


def extract_crack(Z, grid, seed=None, origin=None, axis=None):
    """Collect the ``Z > 1`` node set and measure the furthest advance along ``axis``.

    With a seed, ``origin`` and ``axis`` default to its mouth and direction
    and an empty set reports the seed length.
    """
    nodes = np.flatnonzero(np.asarray(Z) > 1.0)
    if seed is not None:
        origin = seed.start if origin is None else origin
        axis = seed.axis if axis is None else axis
    base = seed.length if seed is not None else 0.0
    if nodes.size == 0 or origin is None:
        return CrackSet(nodes, base, None)
    x = grid.positions[nodes]
    proj = (x - np.asarray(origin)) @ np.asarray(axis)
    k = int(np.argmax(proj))
    return CrackSet(nodes, max(float(proj[k]), base), x[k])


def tip_velocity(times, lengths, window=10):
    """Backward finite difference of crack length over ``window`` snapshots."""
    t = np.asarray(times, dtype=float)
    ell = np.asarray(lengths, dtype=float)
    v = np.full(len(t), np.nan)
    if len(t) > window:
        v[window:] = (ell[window:] - ell[:-window]) / (t[window:] - t[:-window])
    return v


def crack_components(mask, grid):
    """Label 8-connected components of a node mask on the lattice image."""
    img = np.asarray(mask).reshape(grid.ny, grid.nx)
    labels, count = ndimage.label(img, structure=np.ones((3, 3), dtype=int))
    return labels.ravel(), count


def separated_tips(mask, grid, origin, min_separation, n_sectors=72, min_fraction=0.5):
    """Branch tips of a crack set, read off its radial profile about ``origin``.

    The plane around ``origin`` is split into ``n_sectors`` angular sectors
    and the farthest crack node in each is recorded. Sectors whose radius is a
    local maximum of that profile (and at least ``min_fraction`` of the
    overall maximum) are tip candidates; candidates closer than
    ``min_separation`` to a farther accepted tip are merged into it.

    Returns
    -------
    ndarray, shape (k, 2)
        Tip positions ordered by decreasing distance from ``origin``.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return np.empty((0, 2))
    origin = np.asarray(origin, dtype=float)
    x = grid.positions[mask]
    d = x - origin
    r = np.hypot(d[:, 0], d[:, 1])
    sector = ((np.arctan2(d[:, 1], d[:, 0]) + np.pi) / (2.0 * np.pi) * n_sectors).astype(int)
    sector = np.minimum(sector, n_sectors - 1)
    radius = np.full(n_sectors, -1.0)
    np.maximum.at(radius, sector, r)
    far = np.full(n_sectors, -1, dtype=int)
    for k in np.flatnonzero(radius >= 0.0):
        members = np.flatnonzero(sector == k)
        far[k] = members[np.argmax(r[members])]
    left, right = np.roll(radius, 1), np.roll(radius, -1)
    peaks = np.flatnonzero((radius >= left) & (radius >= right)
                           & (radius >= min_fraction * radius.max()) & (radius > 0.0))
    candidates = sorted((x[far[k]] for k in peaks), key=lambda p: -np.hypot(*(p - origin)))
    kept = []
    for p in candidates:
        if all(np.hypot(*(p - q)) >= min_separation for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, 2)
