"""Uniform node lattice, bond lists with partial-volume weights, and crack seeding.

Bonds are stored in compressed-row form: the bonds of node ``i`` occupy
``offsets[i]:offsets[i + 1]`` of the flat arrays, sorted by neighbour index.
Every bond appears twice (once from each end) so that force assembly can be
done per node without write conflicts.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from pdfrac.errors import ConfigurationError


@dataclass
class NodeGrid:
    """Cell-centred square lattice in 2D with unit thickness.

    Node ``k`` sits at column ``k % nx`` and row ``k // nx``. ``solid`` marks
    nodes that carry material; void nodes (e.g. inside a notch) keep their
    slot so that outputs always have ``nx * ny`` rows.
    """

    nx: int
    ny: int
    h: float
    origin: tuple = (0.0, 0.0)
    thickness: float = 1.0
    solid: np.ndarray = None

    def __post_init__(self):
        if self.solid is None:
            self.solid = np.ones(self.nx * self.ny, dtype=bool)

    @property
    def n(self):
        return self.nx * self.ny

    @property
    def extents(self):
        return (self.nx * self.h, self.ny * self.h)

    @property
    def positions(self):
        ix = np.arange(self.nx)
        iy = np.arange(self.ny)
        X, Y = np.meshgrid(self.origin[0] + (ix + 0.5) * self.h,
                           self.origin[1] + (iy + 0.5) * self.h)
        return np.column_stack([X.ravel(), Y.ravel()])

    @property
    def volumes(self):
        """Cell measure per node; zero for void nodes."""
        return np.where(self.solid, self.h * self.h * self.thickness, 0.0)


def build_grid(extents, nx, ny, origin=(0.0, 0.0)):
    """Lay out ``nx * ny`` nodes at the cell centres of a rectangle.

    Raises
    ------
    ConfigurationError
        If the two directions would need different spacings.
    """
    Lx, Ly = (float(e) for e in extents)
    if Lx <= 0.0 or Ly <= 0.0:
        raise ConfigurationError("domain extents must be positive")
    if nx < 2 or ny < 2:
        raise ConfigurationError("need at least two nodes per direction")
    hx, hy = Lx / nx, Ly / ny
    if abs(hx - hy) > 1e-9 * max(hx, hy):
        raise ConfigurationError(
            f"aspect ratio {Lx}/{Ly} inconsistent with grid {nx}x{ny}")
    return NodeGrid(nx, ny, hx, tuple(float(o) for o in origin))


@dataclass
class Neighborhoods:
    """Per-node bond lists (CSR) with geometry, quadrature weights and activity."""

    offsets: np.ndarray
    neighbors: np.ndarray
    length: np.ndarray
    direction: np.ndarray
    weight: np.ndarray
    active: np.ndarray
    horizon: float
    volume: np.ndarray = field(repr=False, default=None)
    partner: np.ndarray = field(repr=False, default=None)
    cache: dict = field(repr=False, default_factory=dict)

    @property
    def n_nodes(self):
        return len(self.offsets) - 1

    @property
    def n_bonds(self):
        return len(self.neighbors)

    @property
    def owner(self):
        """Index of the node each bond row belongs to."""
        return np.repeat(np.arange(self.n_nodes), np.diff(self.offsets))

    def bonds_of(self, i):
        return slice(self.offsets[i], self.offsets[i + 1])

    def copy(self):
        return Neighborhoods(self.offsets, self.neighbors, self.length, self.direction,
                             self.weight, self.active.copy(), self.horizon, self.volume,
                             self.partner)


def lattice_offsets(h, eps):
    """Integer lattice offsets with ``0 < |offset| h <= eps``, sorted lexicographically (dy, dx)."""
    m = int(np.floor(eps / h + 1e-9)) + 1
    r = np.arange(-m, m + 1)
    dy, dx = np.meshgrid(r, r, indexing="ij")
    dx, dy = dx.ravel(), dy.ravel()
    dist = np.hypot(dx, dy) * h
    keep = (dist > 0.0) & (dist <= eps * (1.0 + 1e-12))
    return dx[keep], dy[keep]


def partial_volume_weight(xi, h, eps):
    """1 inside ``eps - h/2``, linear ramp ``(eps + h/2 - xi) / h`` beyond."""
    xi = np.asarray(xi, dtype=float)
    return np.where(xi <= eps - 0.5 * h, 1.0, (eps + 0.5 * h - xi) / h)


def build_neighborhoods(grid, eps, periodic_y=False):
    """Enumerate every bond of length at most ``eps`` between solid nodes.

    Because the lattice is uniform, the same offset stencil serves every node;
    neighbour rows are ordered by increasing neighbour index. With
    ``periodic_y`` the lattice wraps vertically (used for plane-wave studies).
    """
    h = grid.h
    if eps < h:
        raise ConfigurationError(f"horizon {eps:g} smaller than grid spacing {h:g}")
    if eps < 2.0 * h:
        warnings.warn("horizon below two grid spacings; bond quadrature will be poor",
                      stacklevel=2)
    dx, dy = lattice_offsets(h, eps)
    nx, ny = grid.nx, grid.ny
    ix = np.arange(grid.n) % nx
    iy = np.arange(grid.n) // nx
    jx = ix[:, None] + dx[None, :]
    jy = iy[:, None] + dy[None, :]
    if periodic_y:
        if ny <= 2 * np.abs(dy).max():
            raise ConfigurationError("periodic direction too short for the horizon")
        jy = jy % ny
    inside = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
    j = np.where(inside, jy * nx + jx, 0)
    valid = inside & grid.solid[:, None] & grid.solid[j]
    if periodic_y:
        order = np.argsort(np.where(valid, j, np.iinfo(np.int64).max), axis=1, kind="stable")
        dx = np.take_along_axis(np.broadcast_to(dx, j.shape), order, axis=1)
        dy = np.take_along_axis(np.broadcast_to(dy, j.shape), order, axis=1)
        j = np.take_along_axis(j, order, axis=1)
        valid = np.take_along_axis(valid, order, axis=1)
    # the stencil is sorted by (dy, dx) so row-major neighbour indices come out sorted
    counts = valid.sum(axis=1)
    offsets = np.zeros(grid.n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    neighbors = j[valid].astype(np.int64)
    ddx = np.broadcast_to(dx, valid.shape)[valid] * h
    ddy = np.broadcast_to(dy, valid.shape)[valid] * h
    length = np.hypot(ddx, ddy)
    direction = np.column_stack([ddx / length, ddy / length])
    weight = partial_volume_weight(length, h, eps)
    nb = Neighborhoods(offsets, neighbors, length, direction, weight,
                       np.ones(len(neighbors), dtype=bool), float(eps), grid.volumes)
    nb.partner = _partner_index(nb)
    return nb


def _partner_index(nb):
    """Row index of the reverse bond (j -> i) for every bond (i -> j)."""
    owner = nb.owner
    key = owner * nb.n_nodes + nb.neighbors
    rev = nb.neighbors * nb.n_nodes + owner
    order = np.argsort(key, kind="stable")
    pos = np.searchsorted(key[order], rev)
    partner = order[pos]
    if not np.array_equal(key[partner], rev):
        raise ConfigurationError("neighbour lists are not symmetric")
    return partner


@dataclass
class CrackSeed:
    """Straight pre-crack from ``start`` (the mouth) to ``end`` (the tip)."""

    start: tuple
    end: tuple

    @property
    def length(self):
        return float(np.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    @property
    def axis(self):
        d = np.subtract(self.end, self.start)
        return d / np.linalg.norm(d)


def _orient(ax, ay, bx, by, cx, cy, rtol=1e-12):
    """Sign of the turn a -> b -> c; near-collinear triples count as 0."""
    ux, uy, vx, vy = bx - ax, by - ay, cx - ax, cy - ay
    cross = ux * vy - uy * vx
    tol = rtol * np.hypot(ux, uy) * np.hypot(vx, vy)
    return np.where(np.abs(cross) <= tol, 0.0, np.sign(cross))


def _canonical(a, b):
    """Order segment endpoints lexicographically so the tests are symmetric."""
    swap = (a[..., 0] > b[..., 0]) | ((a[..., 0] == b[..., 0]) & (a[..., 1] > b[..., 1]))
    swap = swap[..., None]
    return np.where(swap, b, a), np.where(swap, a, b)


def segments_cross(p1, p2, q1, q2):
    """Proper intersection test for segments ``p1p2`` and ``q1q2`` (vectorised over p).

    Segments that only touch (an endpoint on the other segment, or collinear
    overlap) do not count as crossing.
    """
    p1, p2 = _canonical(np.asarray(p1, dtype=float), np.asarray(p2, dtype=float))
    q1, q2 = _canonical(np.asarray(q1, dtype=float), np.asarray(q2, dtype=float))
    o1 = _orient(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], q1[0], q1[1])
    o2 = _orient(p1[..., 0], p1[..., 1], p2[..., 0], p2[..., 1], q2[0], q2[1])
    o3 = _orient(q1[0], q1[1], q2[0], q2[1], p1[..., 0], p1[..., 1])
    o4 = _orient(q1[0], q1[1], q2[0], q2[1], p2[..., 0], p2[..., 1])
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def apply_crack_seed(nb, grid, seed):
    """Return a copy of ``nb`` with every bond crossing ``seed`` switched off."""
    x = grid.positions
    owner = nb.owner
    cut = segments_cross(x[owner], x[nb.neighbors], seed.start, seed.end)
    out = nb.copy()
    out.active &= ~cut
    # the crossing test is symmetric in its endpoints, but enforce it anyway
    out.active &= out.active[out.partner]
    return out


@dataclass
class BoundaryRegions:
    """Velocity-driven node components and the nonlocal Dirichlet layer.

    ``driven`` is an ``(n, 2)`` boolean mask of prescribed velocity components
    and ``velocity`` the ``(n, 2)`` prescribed values (ignored where not
    driven). ``fixed`` marks nodes held at zero displacement.
    """

    driven: np.ndarray
    velocity: np.ndarray
    fixed: np.ndarray

    @classmethod
    def empty(cls, n):
        return cls(np.zeros((n, 2), dtype=bool), np.zeros((n, 2)), np.zeros(n, dtype=bool))

    @property
    def driven_nodes(self):
        return self.driven.any(axis=1)

    def validate(self):
        if np.any(self.driven_nodes & self.fixed):
            raise ConfigurationError("driven and fixed node sets overlap")


def strip_mask(grid, side, thickness):
    """Solid nodes within ``thickness`` of one side of the domain ('left', 'right', 'bottom', 'top')."""
    x = grid.positions
    x0, y0 = grid.origin
    Lx, Ly = grid.extents
    dist = {
        "left": x[:, 0] - x0,
        "right": x0 + Lx - x[:, 0],
        "bottom": x[:, 1] - y0,
        "top": y0 + Ly - x[:, 1],
    }
    if side not in dist:
        raise ConfigurationError(f"unknown side {side!r}")
    return (dist[side] < thickness) & grid.solid


def carve_semicircle(grid, center, radius):
    """Mark nodes strictly inside a circle as void (the part outside the domain is moot)."""
    x = grid.positions
    inside = np.hypot(x[:, 0] - center[0], x[:, 1] - center[1]) < radius
    grid.solid = grid.solid & ~inside
    return grid
