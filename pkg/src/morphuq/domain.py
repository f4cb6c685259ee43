"""Flume geometry, structured grid, run configuration, initial state.

The built-in domain is a laboratory dam-break flume: a wide shallow
reservoir feeding a 3.6 m wide channel with trapezoidal fixed banks, an
8.5 cm erodible sand layer around the gate, and a free outfall at the
downstream end.  The bed is described by a table of sub-zones, each with
an exact linear or constant elevation rule; zone boundary constants are
derived (not rounded) so the surface is continuous wherever the physical
bed is continuous.

Axis convention throughout the package: arrays are shaped (nx, ny) with
index [i, j] meaning (x, y); flattening is C-order, x-major.
"""

from dataclasses import dataclass, field, asdict
import json
import math

import numpy as np

# ---------------------------------------------------------------------------
# Geometry constants.  All lengths in metres.

FLUME_XMAX = 27.59
FLUME_YMAX = 9.2
RES_X1 = 1.76            # reservoir basin ends; channel walls start
RES_Z = -0.10            # basin floor sits below the channel fixed bed
CH_Y0, CH_Y1 = 2.8, 6.4  # channel side walls
BANK_Y_LO, BANK_Y_HI = 3.14, 6.06   # bank toes on the fixed bed
BANK_TOP = 0.155
BANK_SLOPE = 0.155 / 0.34           # rise of the lateral banks toward the walls

SAND_X0 = 10.59          # sand layer starts 1.5 m upstream of the dam
RAMP_X1 = 10.79          # 20 cm streamwise ramp up to full thickness
SAND_X1 = 21.09          # sand layer ends 9 m downstream of the dam
SAND_Z = 0.085           # full sand layer thickness
RAMP_SLOPE = SAND_Z / (RAMP_X1 - SAND_X0)

# Where the sand surface (z = 0.085) meets the rising banks; the sand toe
# displaces outward through the ramp along lines of slope TOE_SLOPE.
SAND_TOE_LO = BANK_Y_LO - SAND_Z / BANK_SLOPE
SAND_TOE_HI = BANK_Y_HI + SAND_Z / BANK_SLOPE
TOE_SLOPE = RAMP_SLOPE / BANK_SLOPE

DAM_X = 12.09
GATE_X0, GATE_X1 = 11.59, 12.59     # 1 m long gate section
GATE_Y0, GATE_Y1 = 4.10, 5.10       # 1 m wide opening; walls either side
ETA_UPSTREAM = 0.47                 # initial reservoir surface elevation

CHANNEL_WIDTH = CH_Y1 - CH_Y0
RESERVOIR_WIDTH_FACTOR = FLUME_YMAX / CHANNEL_WIDTH


class DomainError(ValueError):
    """A queried point lies outside the flow domain."""


class ConfigError(ValueError):
    """A configuration file or dict violates the schema."""


# ---------------------------------------------------------------------------
# Zone table


@dataclass(frozen=True)
class Zone:
    """One bed sub-zone: x-range, y-range (possibly slanted), elevation rule.

    y bounds are given as (c0, c1) meaning y(x) = c0 + c1*(x - SAND_X0);
    straight bounds have c1 = 0.  ``rule`` is one of "const", "bank_lo",
    "bank_hi", "ramp"; const rules carry their value in ``value``.
    """

    name: str
    x0: float
    x1: float
    ylo: tuple
    yhi: tuple
    rule: str
    value: float = 0.0


def _zone_table() -> tuple:
    B = (BANK_Y_LO, 0.0)
    T = (BANK_Y_HI, 0.0)
    toe_lo = (BANK_Y_LO, -TOE_SLOPE)
    toe_hi = (BANK_Y_HI, TOE_SLOPE)
    lo4 = (SAND_TOE_LO, 0.0)
    hi4 = (SAND_TOE_HI, 0.0)
    w0, w1 = (CH_Y0, 0.0), (CH_Y1, 0.0)
    return (
        Zone("1", 0.0, RES_X1, (0.0, 0.0), (FLUME_YMAX, 0.0), "const", RES_Z),
        Zone("2a", RES_X1, SAND_X0, w0, B, "bank_lo"),
        Zone("2b", RES_X1, SAND_X0, B, T, "const", 0.0),
        Zone("2c", RES_X1, SAND_X0, T, w1, "bank_hi"),
        Zone("3a", SAND_X0, RAMP_X1, w0, toe_lo, "bank_lo"),
        Zone("3b", SAND_X0, RAMP_X1, toe_lo, toe_hi, "ramp"),
        Zone("3c", SAND_X0, RAMP_X1, toe_hi, w1, "bank_hi"),
        Zone("4a", RAMP_X1, GATE_X0, w0, lo4, "bank_lo"),
        Zone("4b", RAMP_X1, GATE_X0, lo4, hi4, "const", SAND_Z),
        Zone("4c", RAMP_X1, GATE_X0, hi4, w1, "bank_hi"),
        Zone("5", GATE_X0, GATE_X1, (GATE_Y0, 0.0), (GATE_Y1, 0.0), "const", SAND_Z),
        Zone("6a", GATE_X1, SAND_X1, w0, lo4, "bank_lo"),
        Zone("6b", GATE_X1, SAND_X1, lo4, hi4, "const", SAND_Z),
        Zone("6c", GATE_X1, SAND_X1, hi4, w1, "bank_hi"),
        Zone("7a", SAND_X1, FLUME_XMAX, w0, B, "bank_lo"),
        Zone("7b", SAND_X1, FLUME_XMAX, B, T, "const", 0.0),
        Zone("7c", SAND_X1, FLUME_XMAX, T, w1, "bank_hi"),
    )


@dataclass(frozen=True)
class FlumeGeometry:
    """The built-in flume: zone table plus the constants the pipeline needs."""

    zones: tuple = field(default_factory=_zone_table)
    xmax: float = FLUME_XMAX
    ymax: float = FLUME_YMAX
    dam_x: float = DAM_X
    channel_y: tuple = (CH_Y0, CH_Y1)
    gate_x: tuple = (GATE_X0, GATE_X1)
    gate_y: tuple = (GATE_Y0, GATE_Y1)
    sand_x: tuple = (SAND_X0, SAND_X1)
    eta_upstream: float = ETA_UPSTREAM

    def zone_names(self):
        return [z.name for z in self.zones]


def standard_flume() -> FlumeGeometry:
    return FlumeGeometry()


def _rule_value(zone: Zone, x, y):
    if zone.rule == "const":
        return np.full(np.broadcast(x, y).shape, zone.value, dtype=float)
    if zone.rule == "bank_lo":
        return -BANK_SLOPE * (np.asarray(y, dtype=float) - BANK_Y_LO) + 0.0 * np.asarray(x)
    if zone.rule == "bank_hi":
        return BANK_SLOPE * (np.asarray(y, dtype=float) - BANK_Y_HI) + 0.0 * np.asarray(x)
    if zone.rule == "ramp":
        return RAMP_SLOPE * (np.asarray(x, dtype=float) - SAND_X0) + 0.0 * np.asarray(y)
    raise ValueError(f"unknown rule {zone.rule!r}")


def evaluate_zone(geometry: FlumeGeometry, name: str, x, y):
    """Evaluate a named zone's elevation rule at (x, y), ignoring containment.

    Lets callers probe both sides of a shared edge exactly.
    """
    for zone in geometry.zones:
        if zone.name == name:
            out = _rule_value(zone, x, y)
            return float(out) if np.isscalar(x) and np.isscalar(y) else out
    raise KeyError(name)


def _ybound(bound: tuple, x):
    c0, c1 = bound
    if c1 == 0.0:
        return c0 + 0.0 * np.asarray(x, dtype=float)
    return c0 + c1 * (np.asarray(x, dtype=float) - SAND_X0)


def zone_index_at(geometry: FlumeGeometry, x, y):
    """Vectorized zone lookup; returns int indices into geometry.zones, -1 outside.

    Intervals are half-open toward +x/+y except at the outer domain edge,
    so interior points map to exactly one zone.
    """
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    X, Y = np.broadcast_arrays(X, Y)
    idx = np.full(X.shape, -1, dtype=int)
    for k, zone in enumerate(geometry.zones):
        in_x = (X >= zone.x0) & ((X < zone.x1) | ((zone.x1 == geometry.xmax) & (X <= zone.x1)))
        ylo = _ybound(zone.ylo, X)
        yhi = _ybound(zone.yhi, X)
        top = max(zone.yhi[0], _ybound(zone.yhi, zone.x1))
        closed_top = (zone.name == "1") or (top >= CH_Y1) or (zone.name == "5")
        in_y = (Y >= ylo) & ((Y < yhi) | (closed_top & (Y <= yhi)))
        if zone.name == "5":
            in_y = (Y >= GATE_Y0) & (Y <= GATE_Y1)
        hit = in_x & in_y & (idx < 0)
        idx[hit] = k
    return idx


def zone_name_at(geometry: FlumeGeometry, x, y) -> str:
    k = int(zone_index_at(geometry, x, y))
    if k < 0:
        raise DomainError(f"point ({x}, {y}) lies outside every bed zone")
    return geometry.zones[k].name


def build_bathymetry(geometry: FlumeGeometry, x, y):
    """Bed elevation (fixed bed plus initial sediment) at (x, y).

    Accepts scalars or broadcastable arrays.  Raises DomainError if any
    point falls outside the flow region (beyond the walls, or inside the
    solid gate blocks flanking the 1 m opening).
    """
    scalar = np.isscalar(x) and np.isscalar(y)
    idx = zone_index_at(geometry, x, y)
    if np.any(idx < 0):
        X, Y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        bad = np.argwhere(idx < 0)
        i0 = tuple(bad[0]) if bad.ndim > 1 and bad.size else ()
        pt = (float(X[i0]), float(Y[i0])) if i0 != () else (float(X), float(Y))
        raise DomainError(f"point {pt} lies outside every bed zone")
    X, Y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    z = np.empty(X.shape, dtype=float)
    for k, zone in enumerate(geometry.zones):
        m = idx == k
        if np.any(m):
            z[m] = _rule_value(zone, X[m], Y[m])
    return float(z) if scalar else z


def fixed_floor(geometry: FlumeGeometry, x, y):
    """Non-erodible floor elevation: basin floor, channel slab, or bank faces."""
    X = np.asarray(x, dtype=float)
    Y = np.asarray(y, dtype=float)
    X, Y = np.broadcast_arrays(X, Y)
    bank = np.maximum(-BANK_SLOPE * (Y - BANK_Y_LO), BANK_SLOPE * (Y - BANK_Y_HI))
    z = np.maximum(0.0, bank)
    z = np.where(X < RES_X1, RES_Z, z)
    return float(z) if np.isscalar(x) and np.isscalar(y) else z


# ---------------------------------------------------------------------------
# Grid


@dataclass
class Grid:
    """Structured cell-centred grid over the flume (or a synthetic box).

    z_fixed and erodible0 define the initial bed: z_b0 = z_fixed + erodible0.
    ``active`` masks wall cells (gate blocks, out-of-zone cells in the full
    footprint).  ``wcol`` is the per-column plan-area factor: in channel
    footprint the reservoir columns are widened to conserve basin volume.
    """

    nx: int
    ny: int
    dx: float
    dy: float
    x0: float
    y0: float
    z_fixed: np.ndarray
    erodible0: np.ndarray
    active: np.ndarray
    wcol: np.ndarray
    dam_x: float = DAM_X
    footprint: str = "channel"

    @property
    def xc(self):
        return self.x0 + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self):
        return self.y0 + (np.arange(self.ny) + 0.5) * self.dy

    @property
    def area(self):
        return self.wcol[:, None] * (self.dx * self.dy) * np.ones((1, self.ny))

    @property
    def z_b0(self):
        return self.z_fixed + self.erodible0

    def nearest_cell(self, x: float, y: float):
        """Index (i, j) of the active cell whose centre is nearest to (x, y)."""
        i = int(np.clip(round((x - self.x0) / self.dx - 0.5), 0, self.nx - 1))
        j = int(np.clip(round((y - self.y0) / self.dy - 0.5), 0, self.ny - 1))
        if self.active[i, j]:
            return i, j
        # fall back to the nearest active centre; probes must sit in the flow
        ii, jj = np.nonzero(self.active)
        d2 = (self.xc[ii] - x) ** 2 + (self.yc[jj] - y) ** 2
        k = int(np.argmin(d2))
        if d2[k] > (self.dx ** 2 + self.dy ** 2) * 4:
            raise DomainError(f"point ({x}, {y}) is far from any active cell")
        return int(ii[k]), int(jj[k])

    def sand_cells(self):
        """(i, j) index arrays of cells with an initial erodible layer, C-order."""
        ii, jj = np.nonzero(self.erodible0 > 0)
        return ii, jj

    def hash(self) -> str:
        from .provenance import hash_arrays

        return hash_arrays(
            np.array([self.nx, self.ny], dtype=np.int64),
            np.array([self.dx, self.dy, self.x0, self.y0, self.dam_x], dtype=float),
            self.z_fixed,
            self.erodible0,
            self.active.astype(np.int8),
            self.wcol,
        )


def _cell_count(extent: float, step: float, label: str) -> int:
    n = int(round(extent / step))
    if n < 1 or abs(n * step - extent) > step + 1e-12:
        raise ConfigError(f"{label}={step} does not divide extent {extent} to within one cell")
    return n


def build_grid(geometry: FlumeGeometry, dx: float, dy: float, footprint: str = "channel") -> Grid:
    """Build the structured grid at resolution (dx, dy).

    footprint="channel" models y in [2.8, 6.4] with reservoir columns
    widened by 9.2/3.6 (the spec's reduced domain); footprint="full"
    covers the whole 27.59 x 9.2 m plan, wall cells masked.
    """
    if footprint not in ("channel", "full"):
        raise ConfigError(f"footprint must be 'channel' or 'full', got {footprint!r}")
    nx = _cell_count(geometry.xmax, dx, "dx")
    y0 = CH_Y0 if footprint == "channel" else 0.0
    ly = CHANNEL_WIDTH if footprint == "channel" else geometry.ymax
    ny = _cell_count(ly, dy, "dy")
    xc = (np.arange(nx) + 0.5) * dx
    yc = y0 + (np.arange(ny) + 0.5) * dy
    if xc[-1] >= geometry.xmax or yc[-1] >= y0 + ly:
        raise ConfigError("grid cell centres fall outside the flume; adjust dx/dy")
    X, Y = np.meshgrid(xc, yc, indexing="ij")
    idx = zone_index_at(geometry, X, Y)
    active = idx >= 0
    z = np.zeros((nx, ny))
    if np.any(active):
        z[active] = build_bathymetry(geometry, X[active], Y[active])
    zf = fixed_floor(geometry, X, Y)
    zf = np.where(active, zf, 0.0)
    ero = np.where(active, np.maximum(0.0, z - zf), 0.0)
    z_fixed = np.where(active, z - ero, 0.0)
    wcol = np.ones(nx)
    if footprint == "channel":
        wcol[xc < RES_X1] = RESERVOIR_WIDTH_FACTOR
    return Grid(
        nx=nx, ny=ny, dx=dx, dy=dy, x0=0.0, y0=y0,
        z_fixed=z_fixed, erodible0=ero, active=active, wcol=wcol,
        dam_x=geometry.dam_x, footprint=footprint,
    )


def synthetic_grid(lx: float, ly: float, dx: float, dy: float,
                   z_fixed=0.0, erodible=0.0, dam_x: float = 0.0) -> Grid:
    """Flat or user-defined rectangular grid for idealised test cases."""
    nx = _cell_count(lx, dx, "dx")
    ny = _cell_count(ly, dy, "dy")
    zf = np.broadcast_to(np.asarray(z_fixed, dtype=float), (nx, ny)).copy()
    er = np.broadcast_to(np.asarray(erodible, dtype=float), (nx, ny)).copy()
    return Grid(
        nx=nx, ny=ny, dx=dx, dy=dy, x0=0.0, y0=0.0,
        z_fixed=zf, erodible0=er, active=np.ones((nx, ny), dtype=bool),
        wcol=np.ones(nx), dam_x=dam_x, footprint="synthetic",
    )


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class MorphoParams:
    """Sediment-transport closure parameters (the uncertain inputs)."""

    alpha_mpm: float = 8.0
    theta_cr: float = 0.047
    porosity: float = 0.42
    alpha_ks: float = 3.0
    beta2: float = 0.85
    beta: float = 1.3

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_mpm, self.theta_cr, self.porosity,
                         self.alpha_ks, self.beta2, self.beta])


PARAM_NAMES = ("alpha_mpm", "theta_cr", "porosity", "alpha_ks", "beta2", "beta")

_DEFAULT_PROBE_X = [13.0, 14.0, 15.0, 16.0, 17.0, 18.0, 19.0, 20.0]
_DEFAULT_PROBE_Y = [4.6] * 8

_CONFIG_DEFAULTS = {
    "schema_version": 1,
    "gravity": 9.81,
    "rho_water": 1000.0,
    "rho_sediment": 2630.0,
    "d50": 1.61e-3,
    "nu": 1.0e-6,
    "kappa": 0.40,
    "manning_n": 0.0165,
    "alpha_mpm": 8.0,
    "theta_cr": 0.047,
    "porosity": 0.42,
    "alpha_ks": 3.0,
    "beta2": 0.85,
    "beta": 1.3,
    "t_end": 20.0,
    "cfl": 0.18,
    "h_dry": 1.0e-6,
    "probe_cadence": 0.05,
    "dx": 0.1,
    "dy": 0.1,
    "footprint": "channel",
    "probe_x": _DEFAULT_PROBE_X,
    "probe_y": _DEFAULT_PROBE_Y,
    "seed": 0,
}

_NUMERIC_KEYS = {k for k, v in _CONFIG_DEFAULTS.items()
                 if isinstance(v, (int, float)) and k != "schema_version"}


@dataclass(frozen=True)
class RunConfig:
    """Validated flat configuration for one forward run (and the pipeline)."""

    schema_version: int = 1
    gravity: float = 9.81
    rho_water: float = 1000.0
    rho_sediment: float = 2630.0
    d50: float = 1.61e-3
    nu: float = 1.0e-6
    kappa: float = 0.40
    manning_n: float = 0.0165
    alpha_mpm: float = 8.0
    theta_cr: float = 0.047
    porosity: float = 0.42
    alpha_ks: float = 3.0
    beta2: float = 0.85
    beta: float = 1.3
    t_end: float = 20.0
    cfl: float = 0.18
    h_dry: float = 1.0e-6
    probe_cadence: float = 0.05
    dx: float = 0.1
    dy: float = 0.1
    footprint: str = "channel"
    probe_x: tuple = tuple(_DEFAULT_PROBE_X)
    probe_y: tuple = tuple(_DEFAULT_PROBE_Y)
    seed: int = 0

    @property
    def params(self) -> MorphoParams:
        return MorphoParams(self.alpha_mpm, self.theta_cr, self.porosity,
                            self.alpha_ks, self.beta2, self.beta)

    def with_params(self, params: MorphoParams) -> "RunConfig":
        d = self.to_dict()
        d.update(alpha_mpm=params.alpha_mpm, theta_cr=params.theta_cr,
                 porosity=params.porosity, alpha_ks=params.alpha_ks,
                 beta2=params.beta2, beta=params.beta)
        return config_from_dict(d)

    def replace(self, **kv) -> "RunConfig":
        d = self.to_dict()
        d.update(kv)
        return config_from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["probe_x"] = list(self.probe_x)
        d["probe_y"] = list(self.probe_y)
        return d

    def hash(self) -> str:
        from .provenance import hash_json

        return hash_json(self.to_dict())


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a flat dict against the schema and return a RunConfig.

    Unknown keys, wrong types, and out-of-range values raise ConfigError
    naming the offending key.
    """
    unknown = sorted(set(raw) - set(_CONFIG_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    merged = dict(_CONFIG_DEFAULTS)
    merged.update(raw)
    if merged["schema_version"] != 1:
        raise ConfigError(f"schema_version must be 1, got {merged['schema_version']!r}")
    for key in _NUMERIC_KEYS:
        v = merged[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"config key {key!r} must be a finite number, got {v!r}")
        merged[key] = float(v)
    for key in ("probe_x", "probe_y"):
        v = merged[key]
        if not isinstance(v, (list, tuple)) or not all(
                isinstance(q, (int, float)) and not isinstance(q, bool) for q in v):
            raise ConfigError(f"config key {key!r} must be a list of numbers")
        merged[key] = tuple(float(q) for q in v)
    if not isinstance(merged["footprint"], str):
        raise ConfigError("config key 'footprint' must be a string")

    def positive(key, strict=True):
        if strict and merged[key] <= 0 or merged[key] < 0:
            raise ConfigError(f"config key {key!r} must be positive, got {merged[key]}")

    for key in ("gravity", "rho_water", "rho_sediment", "d50", "kappa",
                "t_end", "h_dry", "probe_cadence", "dx", "dy",
                "alpha_mpm", "theta_cr", "alpha_ks"):
        positive(key)
    for key in ("nu", "manning_n", "beta2", "beta"):
        if merged[key] < 0:
            raise ConfigError(f"config key {key!r} must be non-negative, got {merged[key]}")
    if merged["rho_sediment"] <= merged["rho_water"]:
        raise ConfigError("rho_sediment must exceed rho_water")
    if not 0.0 < merged["porosity"] < 1.0:
        raise ConfigError(f"porosity must lie in (0, 1), got {merged['porosity']}")
    if not 0.0 < merged["cfl"] < 0.2:
        raise ConfigError(f"cfl target must lie in (0, 0.2), got {merged['cfl']}")
    if merged["footprint"] not in ("channel", "full"):
        raise ConfigError(f"footprint must be 'channel' or 'full', got {merged['footprint']!r}")
    if len(merged["probe_x"]) != len(merged["probe_y"]):
        raise ConfigError("probe_x and probe_y must have equal length")
    cad, t_end = merged["probe_cadence"], merged["t_end"]
    n_out = t_end / cad
    if abs(n_out - round(n_out)) > 1e-9 * max(1.0, n_out):
        raise ConfigError(f"probe_cadence {cad} must divide t_end {t_end}")
    if int(merged["seed"]) != merged["seed"] or merged["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {merged['seed']}")
    merged["seed"] = int(merged["seed"])
    merged["schema_version"] = int(merged["schema_version"])
    return RunConfig(**merged)


def load_config(path) -> RunConfig:
    """Load and validate a JSON config file; empty or missing keys use defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return config_from_dict(raw)


# ---------------------------------------------------------------------------
# Flow state and initial condition


@dataclass
class FlowState:
    """Depth-averaged flow plus bed state at one instant."""

    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    z_b: np.ndarray
    t: float = 0.0

    @property
    def eta(self):
        return self.z_b + self.h

    def copy(self) -> "FlowState":
        return FlowState(self.h.copy(), self.u.copy(), self.v.copy(),
                         self.z_b.copy(), self.t)


def initial_state(grid: Grid, config: RunConfig) -> FlowState:
    """Dam-break initial condition on the flume grid.

    Upstream of the dam the free surface sits at 0.47 m; the downstream
    sand layer starts saturated, carrying no free water (its surface IS the
    water level there), and the rest of the downstream reach is dry.
    """
    zb = grid.z_b0.copy()
    h = np.zeros((grid.nx, grid.ny))
    upstream = (grid.xc[:, None] < grid.dam_x) & grid.active
    h[upstream] = np.maximum(0.0, ETA_UPSTREAM - zb[upstream])
    u = np.zeros_like(h)
    v = np.zeros_like(h)
    return FlowState(h=h, u=u, v=v, z_b=zb, t=0.0)


def export_bathymetry_csv(geometry: FlumeGeometry, path, dx: float = 0.1, dy: float = 0.1):
    """Write the full-footprint bed as CSV: x, y, z, zone (walls excluded)."""
    grid = build_grid(geometry, dx, dy, footprint="full")
    X, Y = np.meshgrid(grid.xc, grid.yc, indexing="ij")
    idx = zone_index_at(geometry, X, Y)
    names = [z.name for z in geometry.zones]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("x,y,z,zone\n")
        zb = grid.z_b0
        for i in range(grid.nx):
            for j in range(grid.ny):
                if idx[i, j] >= 0:
                    fh.write(f"{X[i, j]:.6g},{Y[i, j]:.6g},{zb[i, j]:.10g},{names[idx[i, j]]}\n")
    return grid
