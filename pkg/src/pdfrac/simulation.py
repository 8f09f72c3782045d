"""Config-to-artifacts run pipeline."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from pdfrac import io
from pdfrac.config import format_config
from pdfrac.diagnostics import (EnergyLedger, compute_Z, extract_crack, field_snapshot,
                                tip_velocity)
from pdfrac.discretization import (BoundaryRegions, CrackSeed, apply_crack_seed,
                                   build_grid, build_neighborhoods, carve_semicircle,
                                   strip_mask)
from pdfrac.dynamics import State, compute_forces, enforce_regions, stable_timestep, step
from pdfrac.errors import ConfigurationError, SimulationFault
from pdfrac.material import ExponentialPotential, LinearInfluence, MaterialModel, calibrate

log = logging.getLogger(__name__)


def build_model(cfg):
    if cfg.bulk_modulus is not None:
        return calibrate(cfg.bulk_modulus, cfg.energy_release_rate, dim=2,
                         density=cfg.density, horizon=cfg.horizon)
    return MaterialModel(ExponentialPotential(cfg.psi_c, cfg.psi_beta), LinearInfluence(),
                         cfg.horizon, cfg.density, 2)


def initial_velocity_field(cfg, x):
    """Initial velocity at positions ``x``.

    ``uniform`` assigns ``initial_velocity`` everywhere. ``stretch`` reads
    the two numbers as velocity-gradient components per ``velocity_length``
    about the domain centre: ``v = (v1 (x - xc), v2 (y - yc)) / velocity_length``.
    """
    v1, v2 = cfg.initial_velocity
    if cfg.velocity_profile == "uniform":
        return np.tile([v1, v2], (len(x), 1)).astype(float)
    xc, yc = 0.5 * cfg.width, 0.5 * cfg.height
    return np.column_stack([v1 * (x[:, 0] - xc), v2 * (x[:, 1] - yc)]) / cfg.velocity_length


def build_regions(cfg, grid, v0):
    n = grid.n
    regions = BoundaryRegions.empty(n)
    x = grid.positions
    kind, *args = cfg.drive.split()
    if kind == "bottom_split":
        speed = float(args[0]) if args else 1.0
        strip = strip_mask(grid, "bottom", cfg.horizon)
        regions.driven[strip, 0] = True
        regions.velocity[:, 0] = np.where(x[:, 0] < 0.5 * cfg.width, -speed, speed)
    elif kind == "sides_field":
        strip = strip_mask(grid, "left", cfg.horizon) | strip_mask(grid, "right", cfg.horizon)
        regions.driven[strip] = True
        regions.velocity[:] = v0
    if cfg.dirichlet != "none":
        for side in cfg.dirichlet.split(","):
            regions.fixed |= strip_mask(grid, side.strip(), cfg.horizon)
        regions.fixed &= ~regions.driven_nodes
    regions.velocity[~regions.driven] = 0.0
    regions.validate()
    return regions


@dataclass
class Setup:
    cfg: object
    model: MaterialModel
    grid: object
    nb: object
    regions: BoundaryRegions
    state: State
    dt: float
    seed: CrackSeed = None


def setup(cfg):
    """Build model, grid, bonds, boundary regions and the initial state."""
    model = build_model(cfg)
    grid = build_grid((cfg.width, cfg.height), cfg.nx, cfg.ny)
    if cfg.notch is not None:
        carve_semicircle(grid, cfg.notch[:2], cfg.notch[2])
    nb = build_neighborhoods(grid, cfg.horizon)
    seed = None
    if cfg.crack_seed is not None:
        seed = CrackSeed(tuple(cfg.crack_seed[:2]), tuple(cfg.crack_seed[2:]))
        nb = apply_crack_seed(nb, grid, seed)
    x = grid.positions
    state = State.zeros(grid.n)
    state.v[:] = np.where(grid.solid[:, None], initial_velocity_field(cfg, x), 0.0)
    regions = build_regions(cfg, grid, state.v.copy())
    enforce_regions(state, regions)
    state.a = compute_forces(state.u, model, nb)
    dt = cfg.dt if cfg.dt is not None else stable_timestep(model, grid.h, cfg.safety)
    return Setup(cfg, model, grid, nb, regions, state, dt, seed)


@dataclass
class RunResult:
    setup: Setup
    ledger: EnergyLedger
    times: list = field(default_factory=list)
    lengths: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    first_crack_time: float = None
    first_crack_nodes: np.ndarray = None
    files: list = field(default_factory=list)
    stopped_by: str = "t_end"

    @property
    def tip_velocity(self):
        return tip_velocity(self.times, self.lengths)


def _crack_geometry(cfg, seed):
    if seed is not None:
        origin = seed.start
        axis = seed.axis if cfg.crack_axis is None else np.asarray(cfg.crack_axis)
    else:
        origin = cfg.crack_origin
        axis = None if cfg.crack_axis is None else np.asarray(cfg.crack_axis)
    if origin is not None and axis is None:
        raise ConfigurationError("crack_origin needs crack_axis")
    return origin, axis


def run(cfg, outdir=None, keep_snapshots=True, progress=False):
    """Integrate from ``t = 0`` to ``t_end`` writing outputs every ``output_every`` steps.

    Stops early once the crack length reaches ``stop_crack_length``. Aborts
    with :class:`SimulationFault` (after dumping the state) when the stored
    energy exceeds ten times the initial energy plus external work.
    """
    s = setup(cfg)
    model, grid, nb, regions, state = s.model, s.grid, s.nb, s.regions, s.state
    ledger = EnergyLedger(cfg.fracture_threshold, model.G,
                          s.seed.length if s.seed is not None else 0.0)
    result = RunResult(s, ledger)
    origin, axis = _crack_geometry(cfg, s.seed)
    outdir = Path(outdir) if outdir is not None else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "config.txt").write_text(format_config(cfg))
        _write_metadata(outdir / "metadata.txt", s)

    ledger.accumulate_work(state, model, nb, regions, s.dt)
    n_steps = int(np.floor(cfg.t_end / s.dt + 1e-9))
    k = 0
    while True:
        if k % cfg.output_every == 0 or k == n_steps:
            snap = field_snapshot(state, model, nb)
            crack = extract_crack(snap.Z, grid, s.seed, origin, axis)
            entry = ledger.record(state, model, nb, crack.length)
            result.times.append(state.t)
            result.lengths.append(crack.length)
            if keep_snapshots:
                result.snapshots.append((state.copy(), snap))
            if outdir is not None:
                result.files += io.write_snapshot(
                    snap, state, grid, outdir / f"snapshot_{k:06d}.csv", vtk=cfg.write_vtk)
            if progress:
                log.info("step %d t=%.3e crack=%.4f frac=%.3e work=%.3e", k, state.t,
                         crack.length, entry.fracture, entry.work)
            _check_runaway(entry, ledger, state, grid, outdir)
            if result.first_crack_time is None and crack.nodes.size:
                result.first_crack_time, result.first_crack_nodes = state.t, crack.nodes
            if cfg.stop_crack_length is not None and crack.length >= cfg.stop_crack_length:
                result.stopped_by = "crack_length"
                break
        if k >= n_steps:
            break
        step(state, model, nb, regions, s.dt)
        ledger.accumulate_work(state, model, nb, regions, s.dt)
        k += 1
        if (cfg.first_crack_every and result.first_crack_time is None
                and k % cfg.first_crack_every == 0):
            Z = compute_Z(state.u, model, nb)
            if np.any(Z > 1.0):
                result.first_crack_time = state.t
                result.first_crack_nodes = np.flatnonzero(Z > 1.0)
    if outdir is not None:
        result.files.append(io.write_ledger(ledger, outdir / "ledger.csv"))
    return result


def _check_runaway(entry, ledger, state, grid, outdir):
    stored = entry.kinetic + entry.elastic + entry.fracture
    budget = ledger._initial + max(entry.work, 0.0)
    if stored > 10.0 * budget and stored > 0.0:
        if outdir is not None:
            snap = np.column_stack([grid.positions, state.u, state.v])
            np.savetxt(outdir / "abort_dump.csv", snap, fmt="%.9g", delimiter=",",
                       header="x,y,ux,uy,vx,vy", comments="")
        raise SimulationFault(
            f"stored energy {stored:.3e} J exceeds ten times the input {budget:.3e} J "
            f"at t={state.t:.3e} s")


def _write_metadata(path, s):
    m = s.model
    lines = [
        f"dt = {s.dt!r}",
        f"h = {s.grid.h!r}",
        f"nodes = {s.grid.n}",
        f"solid_nodes = {int(s.grid.solid.sum())}",
        f"bonds = {s.nb.n_bonds}",
        f"active_bonds = {int(s.nb.active.sum())}",
        f"psi_c = {m.potential.c!r}",
        f"psi_beta = {m.potential.beta!r}",
        f"mu = {m.mu!r}",
        f"G = {m.G!r}",
        f"shear_wave_speed = {m.shear_wave_speed!r}",
        f"dilatational_wave_speed = {m.dilatational_wave_speed!r}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")
