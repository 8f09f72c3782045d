"""Deterministic CSV and legacy-VTK writers for snapshots and energy ledgers."""

from pathlib import Path

import numpy as np

SNAPSHOT_HEADER = "x,y,ux,uy,vx,vy,Z,gamma,W"
LEDGER_HEADER = "t,crack_length,kinetic,elastic,fracture,work,residual,griffith_reference"
_FMT = "%.9g"


def _write_rows(path, header, columns):
    table = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        np.savetxt(fh, table, fmt=_FMT, delimiter=",", newline="\n")


def write_snapshot(snapshot, state, grid, path, vtk=False):
    """Write one row per node (node-index order) with 9 significant digits.

    Returns the list of files written; with ``vtk=True`` a structured-points
    ``.vtk`` file with identical values is written next to the CSV.
    """
    path = Path(path)
    x = grid.positions
    _write_rows(path, SNAPSHOT_HEADER,
                [x[:, 0], x[:, 1], state.u[:, 0], state.u[:, 1], state.v[:, 0],
                 state.v[:, 1], snapshot.Z, snapshot.gamma, snapshot.W])
    written = [path]
    if vtk:
        vtk_path = path.with_suffix(".vtk")
        write_vtk(snapshot, state, grid, vtk_path)
        written.append(vtk_path)
    return written


def write_vtk(snapshot, state, grid, path):
    """Legacy ASCII STRUCTURED_POINTS with vectors ``u``, ``v`` and scalars ``Z``, ``gamma``, ``W``."""
    n = grid.n
    x0 = grid.origin[0] + 0.5 * grid.h
    y0 = grid.origin[1] + 0.5 * grid.h

    def vec(a):
        return "\n".join(f"{_FMT % p} {_FMT % q} 0" for p, q in a)

    def scal(a):
        return "\n".join(_FMT % s for s in a)

    parts = [
        "# vtk DataFile Version 3.0",
        f"snapshot t={_FMT % snapshot.t}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {grid.nx} {grid.ny} 1",
        f"ORIGIN {_FMT % x0} {_FMT % y0} 0",
        f"SPACING {_FMT % grid.h} {_FMT % grid.h} 1",
        f"POINT_DATA {n}",
        "VECTORS u double", vec(state.u),
        "VECTORS v double", vec(state.v),
    ]
    for name, arr in (("Z", snapshot.Z), ("gamma", snapshot.gamma), ("W", snapshot.W)):
        parts += [f"SCALARS {name} double 1", "LOOKUP_TABLE default", scal(arr)]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")


def write_ledger(ledger, path):
    """Write the energy ledger time series as CSV."""
    if not ledger.entries:
        raise ValueError("ledger is empty")
    names = LEDGER_HEADER.split(",")
    _write_rows(Path(path), LEDGER_HEADER, [ledger.column(n) for n in names])
    return Path(path)


def read_csv(path):
    """Read a file produced by this module into a dict of column arrays."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, k] for k, name in enumerate(header)}
