"""Plain-text run configuration and the two built-in experiment presets.

The format is one ``key = value`` entry per line, ``#`` starts a comment,
all quantities in SI units. Vectors are comma separated. Example::

    width = 0.1
    height = 0.1
    nx = 100
    ny = 100
    horizon = 0.003
    density = 1200
    bulk_modulus = 25e9
    energy_release_rate = 500
    t_end = 2e-4
    drive = bottom_split 1.0
    crack_seed = 0.05, 0.0, 0.05, 0.02
"""

from dataclasses import dataclass, fields, replace

from pdfrac.errors import ConfigParseError, ConfigurationError


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce a run; see the module docstring for the text form."""

    width: float
    height: float
    nx: int
    ny: int
    horizon: float
    density: float
    t_end: float
    bulk_modulus: float = None
    energy_release_rate: float = None
    psi_c: float = None
    psi_beta: float = None
    dt: float = None
    safety: float = 0.5
    output_every: int = 50
    stop_crack_length: float = None
    drive: str = "none"
    dirichlet: str = "none"
    crack_seed: tuple = None
    notch: tuple = None
    initial_velocity: tuple = (0.0, 0.0)
    velocity_profile: str = "uniform"
    velocity_length: float = 1.0
    fracture_threshold: float = 0.99
    crack_axis: tuple = None
    crack_origin: tuple = None
    first_crack_every: int = 0
    write_vtk: bool = False
    preset: str = None

    def __post_init__(self):
        validate(self)

    def with_changes(self, **changes):
        return replace(self, **changes)


REQUIRED = ("width", "height", "nx", "ny", "horizon", "density", "t_end")
_POSITIVE = ("width", "height", "horizon", "density", "bulk_modulus",
             "energy_release_rate", "psi_c", "psi_beta", "dt", "safety", "velocity_length",
             "stop_crack_length")
_INT = ("nx", "ny", "output_every", "first_crack_every")
_VECTOR = {"crack_seed": 4, "notch": 3, "initial_velocity": 2, "crack_axis": 2,
           "crack_origin": 2}
_BOOL = ("write_vtk",)
DRIVES = ("none", "bottom_split", "sides_field")
PROFILES = ("uniform", "stretch")


def validate(cfg):
    for name in _POSITIVE:
        value = getattr(cfg, name)
        if value is not None and not value > 0.0:
            raise ConfigurationError(f"{name} must be positive, got {value!r}")
    if not cfg.t_end >= 0.0:
        raise ConfigurationError(f"t_end must be non-negative, got {cfg.t_end!r}")
    if cfg.nx < 2 or cfg.ny < 2:
        raise ConfigurationError("nx and ny must be at least 2")
    if cfg.output_every < 1:
        raise ConfigurationError("output_every must be at least 1")
    kg = (cfg.bulk_modulus is not None, cfg.energy_release_rate is not None)
    cb = (cfg.psi_c is not None, cfg.psi_beta is not None)
    if not ((all(kg) and not any(cb)) or (all(cb) and not any(kg))):
        raise ConfigurationError(
            "give exactly one of (bulk_modulus, energy_release_rate) or (psi_c, psi_beta)")
    if cfg.drive.split()[0] not in DRIVES:
        raise ConfigurationError(f"drive must start with one of {DRIVES}")
    if cfg.velocity_profile not in PROFILES:
        raise ConfigurationError(f"velocity_profile must be one of {PROFILES}")
    if not 0.0 < cfg.fracture_threshold < 1.0:
        raise ConfigurationError("fracture_threshold must lie in (0, 1)")


def _parse_value(name, text, line):
    text = text.strip()
    try:
        if name in _INT:
            return int(text)
        if name in _BOOL:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if name in _VECTOR:
            if text.lower() == "none":
                return None
            parts = tuple(float(p) for p in text.split(","))
            if len(parts) != _VECTOR[name]:
                raise ConfigParseError(
                    f"{name} needs {_VECTOR[name]} comma-separated numbers", line)
            return parts
        if name in ("drive", "dirichlet", "velocity_profile", "preset"):
            return None if (name == "preset" and text.lower() == "none") else text
        if text.lower() in ("none", "auto"):
            return None
        return float(text)
    except ValueError:
        raise ConfigParseError(f"bad value for {name}: {text!r}", line) from None


def parse_config(text):
    """Parse the ``key = value`` format into a validated :class:`SimConfig`.

    Raises
    ------
    ConfigParseError
        On unknown or duplicate keys, malformed lines or values, missing
        required keys, or values that fail validation.
    """
    known = {f.name for f in fields(SimConfig)}
    values, where = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigParseError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigParseError(f"duplicate key {key!r} (first on line {where[key]})", lineno)
        values[key] = _parse_value(key, value, lineno)
        where[key] = lineno
    missing = [k for k in REQUIRED if k not in values]
    if missing:
        raise ConfigParseError("missing required keys: " + ", ".join(missing))
    try:
        return SimConfig(**values)
    except ConfigurationError as exc:
        raise ConfigParseError(str(exc)) from None


def _format_value(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(cfg):
    """Inverse of :func:`parse_config`; every field is written explicitly."""
    lines = [f"{f.name} = {_format_value(getattr(cfg, f.name))}" for f in fields(cfg)]
    return "\n".join(lines) + "\n"


# reference plate geometry and material
_K = 25e9
_G = 500.0
_RHO = 1200.0
_EPS = 7.5e-4
_EX1_GRID = 400
_EX2_GRID = (800, 400)
_NOTCH_RADIUS = 0.01
_EX2_VELOCITY = (40.0, -13.3)
_EX2_VELOCITY_LENGTH = 1.0
_EX2_STOP_FRACTION = 0.9


def _example2_end_time(horizon):
    """Time at which the unnotched far field would reach the critical strain of the longest bond.

    The stretch profile loads the plate at a uniform strain rate, so past
    this time every node fails at once and crack paths lose their meaning.
    The preset stops at a fixed fraction of it.
    """
    from pdfrac.material import calibrate, critical_strain

    model = calibrate(_K, _G, dim=2, density=_RHO, horizon=horizon)
    rate = _EX2_VELOCITY[0] / _EX2_VELOCITY_LENGTH
    return _EX2_STOP_FRACTION * float(critical_strain(horizon, model)) / rate


def _divisor(scale):
    divisor = 1.0 / scale if scale < 1.0 else float(scale)
    if divisor not in (1.0, 2.0, 4.0):
        raise ConfigurationError(f"unsupported preset scale {scale!r}; use 1, 2 or 4")
    return int(divisor)


def preset(name, scale=1, horizon_ratio=None):
    """Configuration of one of the two built-in fracture experiments.

    ``example1`` is a 0.1 m square plate with a 20 mm edge crack rising from
    the bottom midpoint; a bottom strip one horizon thick is pulled apart at
    1 m/s on either side of the crack. ``example2`` is a 0.2 m x 0.1 m plate
    with a 10 mm semicircular notch at the bottom midpoint, stretched by side
    walls that follow the initial velocity field.

    Parameters
    ----------
    name : {'example1', 'example2'}
    scale : int
        Grid-resolution divisor (1, 2 or 4); 1/2 and 1/4 are read the same way.
    horizon_ratio : float, optional
        When given, the horizon is set to ``horizon_ratio * h`` instead of the
        reference 0.75 mm (which equals 3h at full resolution). Coarse grids
        need this, since the horizon may not be smaller than the spacing.
    """
    div = _divisor(scale)
    if name == "example1":
        n = _EX1_GRID // div
        h = 0.1 / n
        eps = _EPS if horizon_ratio is None else horizon_ratio * h
        return SimConfig(
            width=0.1, height=0.1, nx=n, ny=n, horizon=eps, density=_RHO,
            bulk_modulus=_K, energy_release_rate=_G, t_end=2.0e-4,
            output_every=10, stop_crack_length=0.06,
            drive="bottom_split 1.0", crack_seed=(0.05, 0.0, 0.05, 0.02),
            crack_axis=(0.0, 1.0), preset="example1")
    if name == "example2":
        nx, ny = (g // div for g in _EX2_GRID)
        h = 0.2 / nx
        eps = _EPS if horizon_ratio is None else horizon_ratio * h
        return SimConfig(
            width=0.2, height=0.1, nx=nx, ny=ny, horizon=eps, density=_RHO,
            bulk_modulus=_K, energy_release_rate=_G, t_end=_example2_end_time(eps),
            output_every=10, drive="sides_field",
            notch=(0.1, 0.0, _NOTCH_RADIUS), initial_velocity=_EX2_VELOCITY,
            velocity_profile="stretch", velocity_length=_EX2_VELOCITY_LENGTH,
            crack_axis=(0.0, 1.0), crack_origin=(0.1, _NOTCH_RADIUS),
            first_crack_every=2, preset="example2")
    raise ConfigurationError(f"unknown preset {name!r}")
