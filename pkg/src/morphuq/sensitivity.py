"""Moment-independent (density-shift) sensitivity indices.

The delta index of an input is half the expected L1 distance between the
output density and the output density conditional on that input.  It is
estimated here by rank-partitioning the sample on the input and comparing
within-class output histograms against the pooled histogram on a common
grid.

The raw partition estimator has a positive small-sample bias of order
1/sqrt(class size): even for an independent input the within-class
histograms fluctuate around the pooled one, and the absolute value turns
that noise into signal.  Each index is therefore also evaluated on the two
half-samples formed by alternating rows in input-sorted order, and the
1/sqrt(n) term is removed by Richardson extrapolation.  The construction
is fully deterministic, so rank invariance and row-shuffle invariance
are exact.
"""

from dataclasses import dataclass
import math

import numpy as np

from .domain import ConfigError
from .uq import McDataset

_SQRT2 = math.sqrt(2.0)


def _effective_partitions(n: int, partitions: int) -> int:
    # keep at least ~50 rows per class
    return int(min(partitions, max(2, n // 50)))


def _effective_bins(n: int, partitions: int, bins: int) -> int:
    # a histogram with far fewer rows than bins saturates the L1 distance
    # and breaks the 1/sqrt(n) bias law the extrapolation relies on; cap
    # the grid so each class keeps a few rows per occupied bin
    return int(min(bins, max(8, (n // partitions) // 3)))


def _bin_indices(y: np.ndarray, bins: int):
    """Common-grid bin index per row, or None if the output is constant."""
    lo = float(y.min())
    hi = float(y.max())
    if not hi > lo:
        return None
    b = ((y - lo) * (bins / (hi - lo))).astype(np.int64)
    np.clip(b, 0, bins - 1, out=b)
    return b


def _class_sizes(n: int, partitions: int) -> np.ndarray:
    sizes = np.full(partitions, n // partitions, dtype=np.int64)
    sizes[: n % partitions] += 1
    return sizes


def _delta_from_order(order, yb, bins, partitions, debias):
    """Delta estimate given the input-rank order and output bin indices."""
    n = order.size
    sizes = _class_sizes(n, partitions)
    cls = np.repeat(np.arange(partitions), sizes)
    half = np.arange(n) & 1
    key = (cls * 2 + half) * bins + yb[order]
    counts = np.bincount(key, minlength=partitions * 2 * bins)
    counts = counts.reshape(partitions, 2, bins)

    def point(c):
        nk = c.sum(axis=1)
        ntot = nk.sum()
        f = c.sum(axis=0) / ntot
        g = c / np.maximum(nk, 1)[:, None]
        return 0.5 * float((nk / ntot) @ np.abs(g - f[None, :]).sum(axis=1))

    d_full = point(counts.sum(axis=1))
    if not debias:
        return d_full
    d_half = 0.5 * (point(counts[:, 0, :]) + point(counts[:, 1, :]))
    return (_SQRT2 * d_full - d_half) / (_SQRT2 - 1.0)


def borgonovo_delta(inputs, output, partitions: int = 32, bins: int = 100,
                    debias: bool = True):
    """Delta index per input column.

    Returns (delta array, degenerate flag).  A constant output yields
    all-zero indices with the flag set.  Rows must be finite; failed runs
    are the caller's responsibility to filter.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(output, dtype=float).ravel()
    n, d = X.shape
    if y.size != n:
        raise ConfigError(f"inputs have {n} rows but output has {y.size}")
    if n < 100:
        raise ConfigError(f"need at least 100 rows, got {n}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ConfigError("inputs/output contain non-finite rows; filter failed runs first")
    p_eff = _effective_partitions(n, partitions)
    b_eff = _effective_bins(n, p_eff, bins)
    yb = _bin_indices(y, b_eff)
    if yb is None:
        return np.zeros(d), True
    delta = np.empty(d)
    for j in range(d):
        order = np.lexsort((y, X[:, j]))
        delta[j] = _delta_from_order(order, yb, b_eff, p_eff, debias)
    return np.clip(delta, 0.0, 1.0), False


@dataclass
class DeltaEstimate:
    """Point estimates with bootstrap confidence intervals."""

    delta: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    level: float
    n: int
    partitions: int
    bins: int
    reps: int
    degenerate: bool


def bootstrap_ci(inputs, output, partitions: int = 32, bins: int = 100,
                 reps: int = 100, level: float = 0.9, seed=0) -> DeltaEstimate:
    """Row-resampling bootstrap around the delta point estimate."""
    if reps < 2:
        raise ConfigError(f"need at least 2 bootstrap reps, got {reps}")
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(output, dtype=float).ravel()
    n = y.size
    point, degen = borgonovo_delta(X, y, partitions, bins)
    if degen:
        z = np.zeros_like(point)
        return DeltaEstimate(point, z, z, level, n, _effective_partitions(n, partitions),
                             bins, reps, True)
    rng = np.random.default_rng(seed)
    boot = np.empty((reps, point.size))
    for r in range(reps):
        idx = rng.integers(0, n, size=n)
        boot[r], _ = borgonovo_delta(X[idx], y[idx], partitions, bins)
    alpha = (1.0 - level) / 2.0
    lo = np.quantile(boot, alpha, axis=0)
    hi = np.quantile(boot, 1.0 - alpha, axis=0)
    # the interval must bracket the point estimate it decorates
    lo = np.minimum(lo, point)
    hi = np.maximum(hi, point)
    return DeltaEstimate(point, lo, hi, level, n,
                         _effective_partitions(n, partitions), bins, reps, False)


def convergence_curve(inputs, output, sizes, partitions: int = 32,
                      bins: int = 100, reps: int = 100, level: float = 0.9,
                      seed=0):
    """DeltaEstimate per sample size over nested prefix subsets.

    One fixed shuffle makes the subsets nested, so successive rows of the
    table differ only by added data.
    """
    X = np.asarray(inputs, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(output, dtype=float).ravel()
    sizes = [int(s) for s in sizes]
    if sizes != sorted(sizes):
        raise ConfigError("sizes must be ascending")
    if sizes[-1] > y.size:
        raise ConfigError(f"largest size {sizes[-1]} exceeds {y.size} rows")
    perm = np.random.default_rng(seed).permutation(y.size)
    out = []
    for k, s in enumerate(sizes):
        sub = perm[:s]
        out.append(bootstrap_ci(X[sub], y[sub], partitions, bins, reps, level,
                                seed=np.random.default_rng([seed, k]).integers(2**63)))
    return out


@dataclass
class FieldSensitivity:
    """Delta indices evaluated independently per output column.

    ``coords`` is (m, 2): cell (x, y) for the bed-elevation field, or
    (probe index, time) for the free-surface series.  Degenerate columns
    (constant output, e.g. never-eroded cells) carry zero indices and a
    flag.
    """

    delta: np.ndarray        # (m, d)
    degenerate: np.ndarray   # (m,) bool
    names: tuple
    coords: np.ndarray       # (m, 2)
    target: str
    partitions: int
    bins: int


def field_sensitivity(ds: McDataset, target: str = "field",
                      partitions: int = 32, bins: int = 100,
                      debias: bool = True) -> FieldSensitivity:
    """Per-cell (or per probe-timestep) delta indices from a run database."""
    ok = ds.ok_mask
    X = ds.design[ok]
    n = X.shape[0]
    if target == "field":
        Y = ds.outputs_field[ok]
        coords = ds.cell_xy.copy()
    elif target == "probe":
        p, t = ds.outputs_probe.shape[1:]
        Y = ds.outputs_probe[ok].reshape(n, p * t)
        coords = np.column_stack([np.repeat(np.arange(p), t),
                                  np.tile(ds.times, p)])
    else:
        raise ConfigError(f"target must be 'field' or 'probe', got {target!r}")
    if n < 100:
        raise ConfigError(f"only {n} successful rows; need at least 100")
    d = X.shape[1]
    m = Y.shape[1]
    p_eff = _effective_partitions(n, partitions)
    b_eff = _effective_bins(n, p_eff, bins)
    # with continuous draws each column sorts uniquely, so one order per
    # input serves every cell; fall back to per-cell tie-broken sorts
    orders = []
    for j in range(d):
        col = X[:, j]
        srt = np.sort(col)
        orders.append(None if (np.diff(srt) == 0).any() else np.argsort(col, kind="stable"))
    delta = np.zeros((m, d))
    degen = np.zeros(m, dtype=bool)
    for c in range(m):
        y = Y[:, c]
        yb = _bin_indices(y, b_eff)
        if yb is None:
            degen[c] = True
            continue
        for j in range(d):
            order = orders[j]
            if order is None:
                order = np.lexsort((y, X[:, j]))
            delta[c, j] = _delta_from_order(order, yb, b_eff, p_eff, debias)
    np.clip(delta, 0.0, 1.0, out=delta)
    return FieldSensitivity(delta=delta, degenerate=degen, names=ds.prior.names,
                            coords=coords, target=target, partitions=p_eff,
                            bins=b_eff)


@dataclass
class ScreeningResult:
    """Domain-median delta ranking with a negligibility threshold."""

    names: tuple             # ranked, most influential first
    medians: np.ndarray      # aligned with names
    threshold: float
    negligible: tuple        # names whose median falls below threshold

    def table(self) -> str:
        lines = [f"{'parameter':<12} {'median delta':>12}"]
        for nm, md in zip(self.names, self.medians):
            mark = "  (negligible)" if nm in self.negligible else ""
            lines.append(f"{nm:<12} {md:>12.4f}{mark}")
        return "\n".join(lines)


def screening(fs: FieldSensitivity, threshold: float = 0.05) -> ScreeningResult:
    """Rank inputs by their median delta over non-degenerate columns."""
    live = ~fs.degenerate
    if not live.any():
        raise ConfigError("every output column is degenerate; nothing to rank")
    med = np.median(fs.delta[live], axis=0)
    order = np.argsort(-med, kind="stable")
    names = tuple(fs.names[i] for i in order)
    medians = med[order]
    negligible = tuple(nm for nm, md in zip(names, medians) if md < threshold)
    return ScreeningResult(names=names, medians=medians, threshold=threshold,
                           negligible=negligible)


# ---------------------------------------------------------------------------
# CSV exports


def export_field_delta_csv(fs: FieldSensitivity, path) -> None:
    if fs.target == "field":
        head = ["x", "y"]
    else:
        head = ["probe", "t"]
    head += [f"delta_{n}" for n in fs.names] + ["degenerate"]
    data = np.column_stack([fs.coords, fs.delta, fs.degenerate.astype(float)])
    np.savetxt(path, data, delimiter=",", header=",".join(head), comments="")


def export_convergence_csv(table, names, path) -> None:
    rows = []
    for est in table:
        rows.append(np.concatenate([[est.n], est.delta, est.ci_lo, est.ci_hi]))
    head = ["n"] + [f"delta_{n}" for n in names] \
        + [f"lo_{n}" for n in names] + [f"hi_{n}" for n in names]
    np.savetxt(path, np.asarray(rows), delimiter=",",
               header=",".join(head), comments="")
