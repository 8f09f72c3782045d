import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdfrac import io
from pdfrac.config import SimConfig, format_config, parse_config, preset
from pdfrac.diagnostics import EnergyLedger, field_snapshot
from pdfrac.discretization import build_grid, build_neighborhoods
from pdfrac.dynamics import State
from pdfrac.errors import ConfigParseError, ConfigurationError
from pdfrac.simulation import run

EDGE_CRACK = """\
# edge-cracked glass plate
width = 0.1
height = 0.1
nx = 400
ny = 400
horizon = 7.5e-4
density = 1200
bulk_modulus = 25e9
energy_release_rate = 500
t_end = 2e-4
drive = bottom_split 1.0
crack_seed = 0.05, 0.0, 0.05, 0.02   # mouth then tip
"""


class TestParse:
    def test_edge_crack_file(self):
        cfg = parse_config(EDGE_CRACK)
        assert (cfg.width, cfg.height) == (0.1, 0.1)
        assert cfg.bulk_modulus == 25e9 and cfg.energy_release_rate == 500.0
        assert cfg.density == 1200.0 and cfg.horizon == 7.5e-4
        assert cfg.crack_seed == (0.05, 0.0, 0.05, 0.02)

    def test_empty_file_lists_missing(self):
        with pytest.raises(ConfigParseError) as info:
            parse_config("")
        for key in ("width", "height", "nx", "ny", "horizon", "density", "t_end"):
            assert key in str(info.value)

    def test_duplicate_key(self):
        with pytest.raises(ConfigParseError, match="duplicate key 'nx'") as info:
            parse_config(EDGE_CRACK + "nx = 200\n")
        assert info.value.line == 13

    def test_unknown_key_line_number(self):
        with pytest.raises(ConfigParseError, match="line 3") as info:
            parse_config("width = 1\n\ncolour = red\n")
        assert info.value.line == 3

    @pytest.mark.parametrize("line", ["nx = ten", "crack_seed = 1, 2", "write_vtk = maybe",
                                      "just some words"])
    def test_malformed_values(self, line):
        with pytest.raises(ConfigParseError):
            parse_config(EDGE_CRACK.replace("nx = 400", line))

    @pytest.mark.parametrize("line", ["density = -1", "psi_c = 3", "drive = sideways",
                                      "t_end = -1e-6"])
    def test_validation_errors(self, line):
        text = EDGE_CRACK.replace("# edge-cracked glass plate", line)
        if line.startswith(("density", "drive", "t_end")):
            key = line.split()[0]
            text = "\n".join(ln for ln in EDGE_CRACK.splitlines() if not ln.startswith(key))
            text += "\n" + line + "\n"
        with pytest.raises(ConfigParseError):
            parse_config(text)

    def test_round_trip(self):
        cfg = parse_config(EDGE_CRACK)
        assert parse_config(format_config(cfg)) == cfg

    @pytest.mark.parametrize("name", ["example1", "example2"])
    @pytest.mark.parametrize("scale", [1, 2, 4])
    def test_preset_round_trip(self, name, scale):
        cfg = preset(name, scale)
        assert parse_config(format_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(w=st.floats(1e-3, 10.0), n=st.integers(2, 500), eps=st.floats(1e-6, 1.0),
       t=st.floats(0.0, 1.0), every=st.integers(1, 1000), vx=st.floats(-1e3, 1e3))
def test_format_parse_round_trip_property(w, n, eps, t, every, vx):
    cfg = SimConfig(width=w, height=w, nx=n, ny=n, horizon=eps, density=1.0, t_end=t,
                    psi_c=1.0, psi_beta=2.0, output_every=every, initial_velocity=(vx, -vx))
    assert parse_config(format_config(cfg)) == cfg


class TestPresets:
    def test_full_resolution(self):
        cfg = preset("example1", 1)
        assert (cfg.nx, cfg.ny) == (400, 400)
        assert cfg.drive == "bottom_split 1.0"
        assert cfg.horizon == 7.5e-4

    @pytest.mark.parametrize("scale", [4, 0.25])
    def test_quarter_resolution(self, scale):
        full, quarter = preset("example1", 1), preset("example1", scale)
        assert (quarter.nx, quarter.ny) == (100, 100)
        same = {f: getattr(full, f) for f in ("width", "height", "horizon", "density",
                                               "bulk_modulus", "energy_release_rate",
                                               "drive", "crack_seed")}
        assert same == {f: getattr(quarter, f) for f in same}

    def test_horizon_ratio(self):
        assert preset("example1", 4, horizon_ratio=3).horizon == pytest.approx(3e-3)

    def test_notched_plate(self):
        cfg = preset("example2", 1)
        assert (cfg.nx, cfg.ny) == (800, 400)
        assert cfg.initial_velocity == (40.0, -13.3)
        assert cfg.drive == "sides_field"
        assert cfg.crack_seed is None and cfg.notch is not None

    def test_notched_plate_side_walls_match_field(self):
        from pdfrac.simulation import setup

        s = setup(preset("example2", 4, horizon_ratio=3))
        d = s.regions.driven_nodes
        assert d.any()
        assert np.allclose(s.regions.velocity[d], s.state.v[d])

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            preset("example3")
        with pytest.raises(ConfigurationError):
            preset("example1", 3)


@pytest.fixture
def small_run_cfg():
    return preset("example1", 4, horizon_ratio=3).with_changes(t_end=2e-6, output_every=8)


class TestOutputs:
    def test_zero_state_snapshot(self, tmp_path, desk_glass):
        g = build_grid((0.02, 0.01), 20, 10)
        nb = build_neighborhoods(g, desk_glass.horizon)
        s = State.zeros(g.n)
        files = io.write_snapshot(field_snapshot(s, desk_glass, nb), s, g, tmp_path / "z.csv",
                                  vtk=True)
        data = io.read_csv(files[0])
        assert list(data) == io.SNAPSHOT_HEADER.split(",")
        assert len(data["x"]) == g.n
        for name in ("ux", "uy", "vx", "vy", "Z", "gamma", "W"):
            assert not np.any(data[name])
        vtk = files[1].read_text()
        assert "DIMENSIONS 20 10 1" in vtk and "SCALARS gamma double 1" in vtk

    def test_run_outputs(self, tmp_path, small_run_cfg):
        result = run(small_run_cfg, outdir=tmp_path)
        snaps = sorted(tmp_path.glob("snapshot_*.csv"))
        assert len(snaps) == len(result.ledger.entries) >= 2
        for p in snaps:
            assert len(io.read_csv(p)["x"]) == small_run_cfg.nx * small_run_cfg.ny
            assert b"\r" not in p.read_bytes()
        ledger = io.read_csv(tmp_path / "ledger.csv")
        assert list(ledger) == io.LEDGER_HEADER.split(",")
        assert ledger["fracture"][0] == 0.0 and ledger["griffith_reference"][0] == 0.0
        assert all(np.all(np.isfinite(col)) for col in ledger.values())
        assert parse_config((tmp_path / "config.txt").read_text()) == small_run_cfg

    def test_rerun_is_byte_identical(self, tmp_path, small_run_cfg):
        run(small_run_cfg, outdir=tmp_path / "a")
        run(small_run_cfg, outdir=tmp_path / "b")
        names = sorted(p.name for p in (tmp_path / "a").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
        for name in names:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_zero_end_time(self, small_run_cfg):
        result = run(small_run_cfg.with_changes(t_end=0.0))
        assert len(result.ledger.entries) == 1 and result.times == [0.0]

    def test_empty_ledger(self, tmp_path):
        with pytest.raises(ValueError):
            io.write_ledger(EnergyLedger(), tmp_path / "l.csv")
