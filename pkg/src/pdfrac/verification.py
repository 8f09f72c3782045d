"""Independent numerical checks of the calibration identities and the small-horizon limit.

None of these routines call the closed-form moduli or release-rate
formulas they are compared against; they only evaluate the potential and
influence profiles directly.
"""

import csv
import io as _io
from dataclasses import dataclass
from math import acos, pi, sqrt

import numpy as np

from pdfrac.diagnostics import elastic_energy_density
from pdfrac.discretization import build_grid, build_neighborhoods
from pdfrac.dynamics import State, bond_strains, compute_forces, stable_timestep, step
from pdfrac.errors import ConfigurationError, DomainError
from pdfrac.material import MaterialModel, critical_strain


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre points per axis (z, zeta, phi), each split into ``panels`` sub-intervals."""

    n_z: int = 16
    n_zeta: int = 16
    n_phi: int = 16
    panels: int = 1

    def __post_init__(self):
        if min(self.n_z, self.n_zeta, self.n_phi) < 16:
            raise ConfigurationError("quadrature needs at least 16 points per axis")

    def doubled(self):
        return QuadratureSpec(self.n_z, self.n_zeta, self.n_phi, 2 * self.panels)


def _gl(n, a, b, panels=1):
    x, w = np.polynomial.legendre.leggauss(n)
    edges = np.linspace(a, b, panels + 1)
    pts, wts = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        pts.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        wts.append(0.5 * (hi - lo) * w)
    return np.concatenate(pts), np.concatenate(wts)


def g_triple_integral(model, quad=QuadratureSpec()):
    """Release rate as the work to sever every bond crossing a plane (3D).

    For each point at depth ``z`` below the plane, sums the broken-bond energy
    of all partners in the spherical cap above it, in spherical coordinates
    centred on the point::

        G = 4 pi / V_eps int_0^eps int_z^eps int_0^acos(z/zeta) e(zeta) zeta^2 sin(phi)

    where ``e(zeta) = zeta * W(inf, zeta) = J(zeta/eps) Psi_inf / eps`` is the
    energy per unit pair density of a fully stretched bond.
    """
    if model.dim != 3:
        raise ConfigurationError("the triple integral is defined for d = 3")
    eps = model.horizon
    plateau = model.potential.plateau
    V = 4.0 / 3.0 * pi * eps**3
    total = 0.0
    zs, wz = _gl(quad.n_z, 0.0, eps, quad.panels)
    for z, w1 in zip(zs, wz):
        zetas, wzeta = _gl(quad.n_zeta, z, eps, quad.panels)
        for zeta, w2 in zip(zetas, wzeta):
            phis, wphi = _gl(quad.n_phi, 0.0, acos(min(z / zeta, 1.0)), quad.panels)
            pair = float(model.influence(zeta / eps)) * plateau / eps
            total += w1 * w2 * pair * zeta**2 * float(np.dot(wphi, np.sin(phis)))
    return 4.0 * pi / V * total


@dataclass
class AffineCheck:
    discrete: float
    continuum: float

    @property
    def rel_error(self):
        if self.continuum == 0.0:
            return abs(self.discrete)
        return abs(self.discrete - self.continuum) / abs(self.continuum)


def affine_patch(model, ratio):
    """Square grid just large enough for one node with a full neighbourhood."""
    h = model.horizon / ratio
    m = int(np.ceil(ratio)) + 1
    n = 2 * m + 1
    grid = build_grid((n * h, n * h), n, n, origin=(-0.5 * n * h, -0.5 * n * h))
    nb = build_neighborhoods(grid, model.horizon)
    center = (n * n) // 2
    return grid, nb, center


def affine_energy_check(model, F, ratio=6):
    """Compare the discrete nodal energy under ``u = F x`` with ``2 mu |E|^2 + lam (tr E)^2``.

    ``E`` is the symmetric part of ``F``; the bond strain ``e . F e`` does not
    see the skew part.

    Raises
    ------
    DomainError
        If any bond at the checked node is strained beyond ``S_c / 10``.
    """
    F = np.asarray(F, dtype=float)
    grid, nb, i = affine_patch(model, ratio)
    u = grid.positions @ F.T
    rows = nb.bonds_of(i)
    S = bond_strains(u, nb)[rows]
    if np.any(np.abs(S) >= 0.1 * critical_strain(nb.length[rows], model)):
        raise DomainError("affine strain too large for the small-strain identity")
    W = float(elastic_energy_density(u, model, nb)[i])
    # moduli evaluated from the profile slope with an independent moment quadrature
    M = _moment_trapezoid(model)
    mu = lam = M * float(model.potential.d1(0.0)) / (model.dim + 2)
    E = 0.5 * (F + F.T)
    return AffineCheck(W, 2.0 * mu * float(np.sum(E * E)) + lam * float(np.trace(E)) ** 2)


def _moment_trapezoid(model, n=20001):
    r = np.linspace(0.0, 1.0, n)
    return float(np.trapezoid(r**model.dim * model.influence(r), r))


@dataclass
class WaveSpeedRow:
    horizon: float
    h: float
    measured: float
    reference: float
    energy_consistent: float

    @property
    def rel_error(self):
        return abs(self.measured - self.reference) / self.reference


def measure_plane_wave_speed(model, h, length, width_pulse, amplitude, probes, rows=None):
    """Launch a longitudinal Gaussian pulse in a y-periodic strip and time it between probes.

    The pulse starts at rest at the left end; its right-going half passes the
    two probe abscissae and the arrival time at each is the (parabolically
    refined) time of its first displacement peak.
    """
    nx = int(round(length / h))
    m = int(np.floor(model.horizon / h + 1e-9))
    ny = rows if rows is not None else 2 * m + 2
    grid = build_grid((nx * h, ny * h), nx, ny)
    nb = build_neighborhoods(grid, model.horizon, periodic_y=True)
    x = grid.positions[:, 0]
    x0 = 0.25 * length
    state = State.zeros(grid.n)
    state.u[:, 0] = amplitude * np.exp(-(((x - x0) / width_pulse) ** 2))
    S = bond_strains(state.u, nb)
    if np.max(np.abs(S)) >= 0.1 * float(critical_strain(model.horizon, model)):
        raise DomainError("pulse strain exceeds S_c / 10")
    state.a = compute_forces(state.u, model, nb)
    dt = stable_timestep(model, h, 0.5)
    probe_nodes = [int(np.argmin(np.abs(x[:nx] - p))) for p in probes]
    t_end = 1.2 * (max(probes) - x0) / model.dilatational_wave_speed
    trace = [[] for _ in probes]
    times = []
    while state.t < t_end:
        step(state, model, nb, None, dt)
        times.append(state.t)
        for k, node in enumerate(probe_nodes):
            trace[k].append(state.u[node, 0])
    times = np.array(times)
    arrivals = [_peak_time(times, np.array(tr)) for tr in trace]
    xs = x[probe_nodes]
    return (xs[1] - xs[0]) / (arrivals[1] - arrivals[0])


def _peak_time(t, y):
    """Time of the first local maximum above half the trace maximum.

    Later maxima belong to reflections off the strip ends.
    """
    k = int(np.argmax(y >= 0.5 * np.max(y)))
    while k < len(y) - 1 and y[k + 1] >= y[k]:
        k += 1
    if k == 0 or k == len(y) - 1:
        raise ConfigurationError("pulse peak not bracketed in the recorded window")
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2.0 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
    return t[k] + shift * (t[k + 1] - t[k])


def plane_wave_speed_study(model, horizons, ratio=3.0, length=None, width_pulse=None,
                           strain_amplitude=None):
    """Measured longitudinal speed for each horizon at fixed physical geometry.

    The grid spacing is ``horizon / ratio`` for every entry, so smaller
    horizons also mean finer grids. Pulse width, strip length and probe
    positions are fixed across the study and scaled to the largest horizon.
    ``reference`` is ``sqrt((lam + 2 mu) / rho)``; ``energy_consistent`` is the
    long-wave speed implied by the force law, ``sqrt(2 (lam + 2 mu) / rho)``.
    """
    horizons = list(horizons)
    if any(b >= a for a, b in zip(horizons, horizons[1:])):
        raise ConfigurationError("horizons must be strictly descending")
    big = horizons[0]
    width_pulse = 4.0 * big if width_pulse is None else width_pulse
    length = 60.0 * big if length is None else length
    probes = (0.5 * length, 0.75 * length)
    rows = []
    for eps in horizons:
        m = MaterialModel(model.potential, model.influence, eps, model.density, model.dim)
        h = eps / ratio
        if strain_amplitude is None:
            sa = 0.02 * float(critical_strain(big, m))
        else:
            sa = strain_amplitude
        amplitude = sa * width_pulse
        c = measure_plane_wave_speed(m, h, length, width_pulse, amplitude, probes)
        ref = m.dilatational_wave_speed
        rows.append(WaveSpeedRow(eps, h, c, ref, sqrt(2.0) * ref))
    return rows


def report_text(title, rows):
    """Render ``(name, value, tolerance, passed)`` tuples as aligned text."""
    lines = [title, "-" * len(title)]
    for name, value, tol, ok in rows:
        lines.append(f"{'PASS' if ok else 'FAIL'}  {name:<44s} {value:>12.4e}  (tol {tol:g})")
    return "\n".join(lines) + "\n"


def report_csv(rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "value", "tolerance", "passed"])
    for name, value, tol, ok in rows:
        w.writerow([name, f"{value:.9g}", f"{tol:g}", int(ok)])
    return buf.getvalue()


def run_suite(suite="quick"):
    """Run the calibration and limit checks; returns ``(name, value, tol, passed)`` rows."""
    from pdfrac.material import calibrate, energy_release_rate

    rows = []
    m2 = calibrate(25e9, 500.0, dim=2, density=1200.0, horizon=7.5e-4)
    k_err = abs(m2.bulk_modulus - 25e9) / 25e9
    g_err = abs(m2.G - 500.0) / 500.0
    rows.append(("calibration round trip (k)", k_err, 1e-10, k_err < 1e-10))
    rows.append(("calibration round trip (G)", g_err, 1e-10, g_err < 1e-10))
    m3 = calibrate(25e9, 500.0, dim=3, density=1200.0, horizon=1e-3)
    gi = g_triple_integral(m3)
    gerr = abs(gi - energy_release_rate(m3)) / energy_release_rate(m3)
    rows.append(("triple-integral G vs closed form (3D)", gerr, 1e-6, gerr < 1e-6))
    rc = m2.potential.critical_argument()
    from pdfrac.material import solve_critical_argument
    rc_err = abs(solve_critical_argument(m2.potential) - rc) / rc
    rows.append(("critical root bisection vs 1/(2 beta)", rc_err, 1e-12, rc_err < 1e-12))
    for k, F in enumerate(([[1e-6, 0], [0, 1e-6]], [[1e-6, 4e-7], [-2e-7, -5e-7]])):
        chk = affine_energy_check(m2, F, ratio=6)
        rows.append((f"affine energy identity F{k}", chk.rel_error, 0.02, chk.rel_error < 0.02))
    if suite == "full":
        eps0 = 1e-3
        study = plane_wave_speed_study(m2, [6 * eps0, 3 * eps0, 1.5 * eps0])
        for r in study:
            rows.append((f"wave speed vs linear elastic, eps={r.horizon:g}", r.rel_error, 0.05,
                         r.rel_error < 0.05))
        for r in study:
            err = abs(r.measured - r.energy_consistent) / r.energy_consistent
            rows.append((f"wave speed vs force law, eps={r.horizon:g}", err, 0.05, err < 0.05))
    return rows
