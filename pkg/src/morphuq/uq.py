"""Prior parameter space, Monte Carlo designs, batched forward runs.

The run database couples an N x d design matrix with two output families
per row: the final bed elevation on the grid's active cells and the free
surface time series at the probes.  Failed rows are kept and flagged so
downstream consumers must filter explicitly.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import json
import os
import warnings

import numpy as np

from .container import read_container, write_container, ContainerError
from .domain import Grid, RunConfig, MorphoParams, PARAM_NAMES, ConfigError
from .solver import run_simulation

# Per-parameter uniform supports (literature variation ranges).
SUPPORTS = {
    "alpha_mpm": (2.66, 32.0),
    "theta_cr": (0.022, 0.058),
    "porosity": (0.31, 0.46),
    "alpha_ks": (1.0, 6.6),
    "beta2": (0.2, 1.6),
    "beta": (0.0, 5.0),
}

# Values used for parameters dropped from the sampled space after screening.
NOMINAL = {"theta_cr": 0.047, "porosity": 0.42}

SIGMA_OBS_SCALE = 0.008  # half-normal scale for the observation noise prior (m)


@dataclass(frozen=True)
class PriorSpec:
    """Independent uniform priors over a subset of the morphodynamic
    parameters, plus a half-normal prior scale for the observation noise.

    ``names`` lists the sampled parameters in design-column order;
    everything else is pinned to the value in ``fixed``.
    """

    names: tuple
    lows: tuple
    highs: tuple
    fixed: dict = field(default_factory=dict)
    sigma_scale: float = SIGMA_OBS_SCALE

    def __post_init__(self):
        if not self.names:
            raise ConfigError("prior must sample at least one parameter")
        bad = [n for n in self.names if n not in PARAM_NAMES]
        if bad:
            raise ConfigError(f"unknown parameter name(s): {bad}")
        if len(set(self.names)) != len(self.names):
            raise ConfigError("duplicate parameter names in prior")
        if len(self.lows) != len(self.names) or len(self.highs) != len(self.names):
            raise ConfigError("lows/highs must match names in length")
        for n, lo, hi in zip(self.names, self.lows, self.highs):
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigError(f"support for {n!r} must be finite with low < high")
        missing = set(PARAM_NAMES) - set(self.names) - set(self.fixed)
        if missing:
            raise ConfigError(f"parameters neither sampled nor fixed: {sorted(missing)}")
        if not self.sigma_scale > 0:
            raise ConfigError("sigma_scale must be positive")

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def bounds(self) -> np.ndarray:
        """(d, 2) array of (low, high) per sampled parameter."""
        return np.column_stack([np.asarray(self.lows), np.asarray(self.highs)])

    def params(self, row) -> MorphoParams:
        """MorphoParams for one design row (fixed values filled in)."""
        row = np.asarray(row, dtype=float)
        if row.shape != (self.dim,):
            raise ConfigError(f"design row has shape {row.shape}, expected ({self.dim},)")
        kv = dict(self.fixed)
        kv.update(zip(self.names, (float(x) for x in row)))
        return MorphoParams(**kv)

    def row_from_params(self, params: MorphoParams) -> np.ndarray:
        d = {k: v for k, v in zip(PARAM_NAMES, params.as_array())}
        return np.array([d[n] for n in self.names])

    def contains(self, row) -> bool:
        row = np.asarray(row, dtype=float)
        return bool(np.all(row >= np.asarray(self.lows))
                    and np.all(row <= np.asarray(self.highs)))

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "lows": [float(v) for v in self.lows],
            "highs": [float(v) for v in self.highs],
            "fixed": {k: float(v) for k, v in self.fixed.items()},
            "sigma_scale": float(self.sigma_scale),
        }

    @staticmethod
    def from_dict(d: dict) -> "PriorSpec":
        return PriorSpec(names=tuple(d["names"]), lows=tuple(d["lows"]),
                         highs=tuple(d["highs"]), fixed=dict(d["fixed"]),
                         sigma_scale=float(d["sigma_scale"]))


def prior_spec(preset: str = "six") -> PriorSpec:
    """Built-in prior presets.

    "six" samples every morphodynamic parameter; "four" is the
    post-screening space (alpha_mpm, alpha_ks, beta2, beta) with the
    low-influence pair pinned to nominal values.
    """
    if preset == "six":
        names = PARAM_NAMES
        fixed = {}
    elif preset == "four":
        names = ("alpha_mpm", "alpha_ks", "beta2", "beta")
        fixed = dict(NOMINAL)
    else:
        raise ConfigError(f"unknown prior preset {preset!r}")
    lows = tuple(SUPPORTS[n][0] for n in names)
    highs = tuple(SUPPORTS[n][1] for n in names)
    return PriorSpec(names=names, lows=lows, highs=highs, fixed=fixed)


def sample_prior(prior: PriorSpec, n: int, seed: int = 0) -> np.ndarray:
    """(n, d) matrix of i.i.d. uniform draws, reproducible under seed."""
    if n < 1:
        raise ConfigError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    u = rng.random((int(n), prior.dim))
    lo = np.asarray(prior.lows)
    hi = np.asarray(prior.highs)
    return lo + u * (hi - lo)


# ---------------------------------------------------------------------------
# Batched forward runs


def _field_cells(grid: Grid):
    """(i, j) index arrays of the cells stored in outputs_field, C-order."""
    ii, jj = np.nonzero(grid.active)
    return ii, jj


_WORK = {}


def _init_worker(grid, config, prior, work_dir):
    _WORK["grid"] = grid
    _WORK["config"] = config
    _WORK["prior"] = prior
    _WORK["work_dir"] = work_dir


def _row_path(work_dir, i):
    return os.path.join(work_dir, f"row_{i:05d}.npz")


def _run_row(task):
    i, row = task
    grid = _WORK["grid"]
    config = _WORK["config"]
    prior = _WORK["prior"]
    work_dir = _WORK["work_dir"]
    if work_dir is not None:
        path = _row_path(work_dir, i)
        if os.path.exists(path):
            with np.load(path) as f:
                if np.array_equal(f["row"], row):
                    return i, int(f["status"]), f["zb"], f["probe"]
            os.remove(path)  # stale row for a different design
    res = run_simulation(grid, config, params=prior.params(row))
    ii, jj = _field_cells(grid)
    if res.ok:
        status, zb, probe = 1, res.zb_final[ii, jj], res.probe_eta
    else:
        status = 0
        zb = np.full(ii.size, np.nan)
        probe = np.full_like(res.probe_eta, np.nan)
    if work_dir is not None:
        tmp = path + ".tmp.npz"
        np.savez_compressed(tmp, row=row, status=status, zb=zb, probe=probe)
        os.replace(tmp, path)
    return i, status, zb, probe


@dataclass
class McDataset:
    """Design matrix plus per-row forward-model outputs and provenance."""

    design: np.ndarray          # (N, d)
    outputs_field: np.ndarray   # (N, m) final bed elevation at field cells
    outputs_probe: np.ndarray   # (N, p, T) free surface series at probes
    run_status: np.ndarray      # (N,) 1 ok, 0 failed
    prior: PriorSpec
    seed: int
    config_hash: str
    grid_hash: str
    cell_ij: np.ndarray         # (m, 2) grid indices of field cells
    cell_xy: np.ndarray         # (m, 2) coordinates of field cells
    times: np.ndarray           # (T,)
    probe_xy: np.ndarray        # (p, 2)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def ok_mask(self) -> np.ndarray:
        return self.run_status == 1

    def ok_rows(self) -> "McDataset":
        """Copy with failed rows removed (for estimators and training)."""
        return self.take(np.nonzero(self.ok_mask)[0])

    def take(self, idx) -> "McDataset":
        idx = np.asarray(idx)
        return McDataset(
            design=self.design[idx], outputs_field=self.outputs_field[idx],
            outputs_probe=self.outputs_probe[idx], run_status=self.run_status[idx],
            prior=self.prior, seed=self.seed, config_hash=self.config_hash,
            grid_hash=self.grid_hash, cell_ij=self.cell_ij, cell_xy=self.cell_xy,
            times=self.times, probe_xy=self.probe_xy)

    def profile_columns(self, y: float, x_range=None):
        """Field-column indices along the grid row nearest to y, sorted by x.

        Returns (indices, x coordinates); used for longitudinal envelopes.
        """
        ys = self.cell_xy[:, 1]
        j = np.unique(ys)[np.argmin(np.abs(np.unique(ys) - y))]
        sel = np.nonzero(ys == j)[0]
        order = np.argsort(self.cell_xy[sel, 0], kind="stable")
        sel = sel[order]
        if x_range is not None:
            xs = self.cell_xy[sel, 0]
            sel = sel[(xs >= x_range[0]) & (xs <= x_range[1])]
        return sel, self.cell_xy[sel, 0]


def run_batch(design, grid: Grid, config: RunConfig, prior: PriorSpec,
              jobs: int = 1, work_dir=None, seed: int = 0,
              progress=None) -> McDataset:
    """Run the forward model for every design row.

    Rows are independent; with jobs > 1 they are distributed over worker
    processes, and the assembled dataset is identical to a sequential run.
    When ``work_dir`` is given each finished row is persisted there, so an
    interrupted batch resumes instead of recomputing.
    """
    design = np.atleast_2d(np.asarray(design, dtype=float))
    if design.shape[1] != prior.dim:
        raise ConfigError(
            f"design has {design.shape[1]} columns, prior samples {prior.dim}")
    n = design.shape[0]
    if work_dir is not None:
        os.makedirs(work_dir, exist_ok=True)
        key = {"config": config.hash(), "grid": grid.hash()}
        key_path = os.path.join(work_dir, "key.json")
        if os.path.exists(key_path):
            with open(key_path, "r", encoding="utf-8") as fh:
                old = json.load(fh)
            if old != key:
                raise ConfigError(
                    f"work dir {work_dir} belongs to a different config/grid")
        else:
            with open(key_path, "w", encoding="utf-8") as fh:
                json.dump(key, fh)

    ii, jj = _field_cells(grid)
    m = ii.size
    n_out = int(round(config.t_end / config.probe_cadence)) + 1
    p = len(config.probe_x)
    field = np.full((n, m), np.nan)
    probe = np.full((n, p, n_out), np.nan)
    status = np.zeros(n, dtype=np.int64)

    tasks = [(i, design[i]) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(grid, config, prior, work_dir)) as ex:
            results = ex.map(_run_row, tasks)
            for i, st, zb, pr in results:
                status[i], field[i], probe[i] = st, zb, pr
                if progress:
                    progress(i, st)
    else:
        _init_worker(grid, config, prior, work_dir)
        for task in tasks:
            i, st, zb, pr = _run_row(task)
            status[i], field[i], probe[i] = st, zb, pr
            if progress:
                progress(i, st)

    times = np.arange(n_out) * config.probe_cadence
    probe_xy = np.column_stack([config.probe_x, config.probe_y]) if p else np.zeros((0, 2))
    return McDataset(
        design=design, outputs_field=field, outputs_probe=probe,
        run_status=status, prior=prior, seed=int(seed),
        config_hash=config.hash(), grid_hash=grid.hash(),
        cell_ij=np.column_stack([ii, jj]),
        cell_xy=np.column_stack([grid.xc[ii], grid.yc[jj]]),
        times=times, probe_xy=probe_xy)


def split_dataset(ds: McDataset, val_frac: float = 0.25,
                  test_frac: float = 0.125, seed: int = 0):
    """Disjoint (train, val, test) datasets from the successful rows.

    Fractions are relative to the training size: val and test counts are
    val_frac and test_frac times the train count, with rounding slack
    absorbed by the test set.
    """
    ok = np.nonzero(ds.ok_mask)[0]
    n = ok.size
    n_train = int(n / (1.0 + val_frac + test_frac))
    n_val = int(round(n_train * val_frac))
    n_test = n - n_train - n_val
    if n_train < 1 or n_val < 1 or n_test < 1:
        raise ConfigError(
            f"{n} usable rows cannot be split as train/val/test "
            f"({n_train}/{n_val}/{n_test})")
    perm = np.random.default_rng(seed).permutation(n)
    idx = ok[perm]
    return (ds.take(np.sort(idx[:n_train])),
            ds.take(np.sort(idx[n_train:n_train + n_val])),
            ds.take(np.sort(idx[n_train + n_val:])))


# ---------------------------------------------------------------------------
# Persistence


def save_dataset(path, ds: McDataset) -> None:
    meta = {
        "prior": ds.prior.to_dict(),
        "seed": int(ds.seed),
        "config_hash": ds.config_hash,
        "grid_hash": ds.grid_hash,
        "layout": "rows are design draws; field cells C-order over (x, y)",
    }
    write_container(path, "dataset", meta, {
        "design": ds.design,
        "outputs_field": ds.outputs_field,
        "outputs_probe": ds.outputs_probe,
        "run_status": ds.run_status,
        "cell_ij": ds.cell_ij,
        "cell_xy": ds.cell_xy,
        "times": ds.times,
        "probe_xy": ds.probe_xy,
    })


def load_dataset(path, config: RunConfig = None, grid: Grid = None) -> McDataset:
    """Load a dataset; warn (not fail) if provenance hashes do not match."""
    meta, arr = read_container(path, expect_kind="dataset")
    ds = McDataset(
        design=arr["design"], outputs_field=arr["outputs_field"],
        outputs_probe=arr["outputs_probe"], run_status=arr["run_status"],
        prior=PriorSpec.from_dict(meta["prior"]), seed=int(meta["seed"]),
        config_hash=meta["config_hash"], grid_hash=meta["grid_hash"],
        cell_ij=arr["cell_ij"], cell_xy=arr["cell_xy"],
        times=arr["times"], probe_xy=arr["probe_xy"])
    if config is not None and config.hash() != ds.config_hash:
        warnings.warn(f"{path}: dataset was built under a different config",
                      stacklevel=2)
    if grid is not None and grid.hash() != ds.grid_hash:
        warnings.warn(f"{path}: dataset was built on a different grid",
                      stacklevel=2)
    return ds


def export_design_csv(ds: McDataset, path) -> None:
    """Design matrix plus run status as CSV."""
    header = ",".join(list(ds.prior.names) + ["status"])
    data = np.column_stack([ds.design, ds.run_status.astype(float)])
    np.savetxt(path, data, delimiter=",", header=header, comments="")


def export_field_stats_csv(ds: McDataset, path) -> None:
    """Per-cell summary of the propagated bed elevation (successful rows)."""
    zb = ds.outputs_field[ds.ok_mask]
    data = np.column_stack([
        ds.cell_xy, zb.mean(axis=0), zb.std(axis=0),
        zb.min(axis=0), zb.max(axis=0)])
    np.savetxt(path, data, delimiter=",",
               header="x,y,zb_mean,zb_std,zb_min,zb_max", comments="")
