"""Run configuration: sectioned key-value files with unit-aware parsing.

Files are INI-style with sections [atom], [drive], [geometry], [beam],
[sweep], [output].  Frequencies are given in MHz (converted to rad/us,
i.e. multiplied by 2 pi, only here at the boundary), lengths in um,
angles in degrees, densities in mm^-3, C6 in GHz um^6.  Every key has a
canonical-run default, so the empty file is a valid configuration.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
from dataclasses import dataclass, replace, fields as dc_fields

from .errors import ConfigError
from .quantum import AtomParams, DriveParams
from .multilayer import Layer, LayerStack
from .beam_shift import BeamSpec, medium_index

TWO_PI = 2.0 * math.pi

MHZ = TWO_PI            # MHz -> rad/us
GHZ_UM6 = TWO_PI * 1e3  # GHz um^6 -> rad/us um^6
MM3 = 1e-9              # mm^-3 -> um^-3

SWEEP_VARIABLES = ("Delta2", "theta_i", "Na", "Omega_c", "Omega_p", "d2")

# axis metadata: config/CSV unit label and CSV column name
AXIS_COLUMNS = {
    "Delta2": "delta2_MHz",
    "theta_i": "theta_deg",
    "Na": "density_mm3",
    "Omega_c": "omega_c_MHz",
    "Omega_p": "omega_p_MHz",
    "d2": "d2_um",
}

QUANTITIES = ("chi", "fresnel", "shift", "map", "profile")


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters in config-file units (MHz, um, deg, mm^-3)."""

    # [atom]
    gamma21_mhz: float = 6.0
    gamma32_mhz: float = 3e-3
    c6_ghz_um6: float = 140.0
    density_mm3: float = 4e7
    lambda_um: float = 0.78
    coh21_mhz: float | None = None   # coherence-rate overrides (None = default rule)
    coh31_mhz: float | None = None
    coh32_mhz: float | None = None
    # [drive]
    omega_p_mhz: float = 0.75
    omega_c_mhz: float = 4.0
    delta2_mhz: float = 0.0
    delta_c_mhz: float = -0.1
    # [geometry]
    n1: float = 1.49
    n3: float = 1.49
    d2_um: float = 100.0
    # [beam]
    w0_um: float = 50.0
    theta_deg: float = 33.87
    grid_n: int = 2048
    grid_span: float = 8.0
    # [sweep]
    quantity: str = "shift"
    variable: str = "Delta2"
    sweep_min: float = -5.0
    sweep_max: float = 5.0
    steps: int = 101
    variable2: str | None = None
    sweep_min2: float = 0.0
    sweep_max2: float = 0.0
    steps2: int = 2
    # [output]
    out_path: str = "sweep.csv"
    out_format: str = "csv"
    precision: int = 12

    def __post_init__(self):
        if self.density_mm3 < 0:
            raise ConfigError("density_mm3 must be >= 0")
        if self.gamma21_mhz <= 0 or self.gamma32_mhz < 0:
            raise ConfigError("gamma21_mhz must be > 0 and gamma32_mhz >= 0")
        if self.omega_p_mhz < 0 or self.omega_c_mhz < 0:
            raise ConfigError("Rabi frequencies must be >= 0")
        if self.lambda_um <= 0 or self.w0_um <= 0 or self.d2_um < 0:
            raise ConfigError("lambda_um, w0_um must be > 0 and d2_um >= 0")
        if not (5.0 <= self.theta_deg <= 85.0):
            raise ConfigError("theta_deg must lie in [5, 85]")
        if self.n1 <= 0 or self.n3 <= 0:
            raise ConfigError("window indices must be positive")
        if self.quantity not in QUANTITIES:
            raise ConfigError(f"quantity must be one of {QUANTITIES}")
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable must be one of {SWEEP_VARIABLES}")
        if self.variable2 is not None and self.variable2 not in SWEEP_VARIABLES:
            raise ConfigError(f"sweep variable2 must be one of {SWEEP_VARIABLES}")
        for lo, hi, n, lbl in ((self.sweep_min, self.sweep_max, self.steps, ""),
                               (self.sweep_min2, self.sweep_max2, self.steps2, "2")):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"sweep range{lbl} must be finite")
            if n < 2:
                raise ConfigError(f"steps{lbl} must be >= 2")
        if self.out_format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not (1 <= self.precision <= 17):
            raise ConfigError("precision must lie in [1, 17]")

    # ---- conversions into physics objects (rad/us, um, rad) ----

    def atom_params(self) -> AtomParams:
        return AtomParams.from_decay_rates(
            Gamma21=self.gamma21_mhz * MHZ,
            Gamma32=self.gamma32_mhz * MHZ,
            C6=self.c6_ghz_um6 * GHZ_UM6,
            Na=self.density_mm3 * MM3,
            lambda_p=self.lambda_um,
            gamma21=None if self.coh21_mhz is None else self.coh21_mhz * MHZ,
            gamma31=None if self.coh31_mhz is None else self.coh31_mhz * MHZ,
            gamma32=None if self.coh32_mhz is None else self.coh32_mhz * MHZ,
        )

    def drive_params(self) -> DriveParams:
        return DriveParams(Omega_p=self.omega_p_mhz * MHZ,
                           Omega_c=self.omega_c_mhz * MHZ,
                           Delta2=self.delta2_mhz * MHZ,
                           Delta_c=self.delta_c_mhz * MHZ)

    def layer_stack(self, chi: complex = 0.0) -> LayerStack:
        return LayerStack(n_in=self.n1,
                          layers=(Layer(n=medium_index(chi), d=self.d2_um),),
                          n_out=self.n3)

    def beam_spec(self) -> BeamSpec:
        return BeamSpec(w0=self.w0_um, theta_i=math.radians(self.theta_deg),
                        lambda_p=self.lambda_um, n_in=self.n1,
                        grid_n=self.grid_n, grid_span=self.grid_span)


_SCHEMA = {
    "atom": {"gamma21_mhz": float, "gamma32_mhz": float, "c6_ghz_um6": float,
             "density_mm3": float, "lambda_um": float, "coh21_mhz": float,
             "coh31_mhz": float, "coh32_mhz": float},
    "drive": {"omega_p_mhz": float, "omega_c_mhz": float, "delta2_mhz": float,
              "delta_c_mhz": float},
    "geometry": {"n1": float, "n3": float, "d2_um": float},
    "beam": {"w0_um": float, "theta_deg": float, "grid_n": int,
             "grid_span": float},
    "sweep": {"quantity": str, "variable": str, "min": float, "max": float,
              "steps": int, "variable2": str, "min2": float, "max2": float,
              "steps2": int},
    "output": {"path": str, "format": str, "precision": int},
}

# config keys that do not match the RunConfig field name one-to-one
_FIELD_RENAMES = {
    ("sweep", "min"): "sweep_min", ("sweep", "max"): "sweep_max",
    ("sweep", "min2"): "sweep_min2", ("sweep", "max2"): "sweep_max2",
    ("output", "path"): "out_path", ("output", "format"): "out_format",
}

_OPTIONAL_KEYS = {("atom", "coh21_mhz"), ("atom", "coh31_mhz"),
                  ("atom", "coh32_mhz"), ("sweep", "variable2")}


def _line_of(text: str, section: str, key: str) -> int:
    in_section = False
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("["):
            in_section = stripped.lower() == f"[{section}]"
        elif in_section and stripped.split("=")[0].strip().lower() == key.lower():
            return i
    return 0


def parse_config(text: str) -> RunConfig:
    """Parse a sectioned key-value config, filling canonical defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values: dict = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}] "
                              f"(line {_line_of(text, section, '')})")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}] "
                                  f"(line {_line_of(text, section, key)})")
            if raw.strip() == "":
                continue
            caster = _SCHEMA[section][key]
            field = _FIELD_RENAMES.get((section, key), key)
            try:
                values[field] = caster(raw) if caster is not str else raw.strip()
            except ValueError as exc:
                raise ConfigError(
                    f"bad value for '{key}' in [{section}] "
                    f"(line {_line_of(text, section, key)}): {exc}") from exc
    try:
        return RunConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(parse(x))) == parse(x)."""
    out = io.StringIO()
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key in keys:
            field = _FIELD_RENAMES.get((section, key), key)
            val = getattr(cfg, field)
            if val is None:
                continue
            out.write(f"{key} = {val!r}\n" if isinstance(val, float)
                      else f"{key} = {val}\n")
        out.write("\n")
    return out.getvalue()


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """Apply CLI overrides (None values are skipped)."""
    updates = {k: v for k, v in kwargs.items() if v is not None}
    known = {f.name for f in dc_fields(RunConfig)}
    unknown = set(updates) - known
    if unknown:
        raise ConfigError(f"unknown override(s): {sorted(unknown)}")
    return replace(cfg, **updates)
