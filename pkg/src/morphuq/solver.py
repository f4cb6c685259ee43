"""Coupled shallow-water / bed-evolution forward model.

One time step is an operator split: an explicit well-balanced finite-volume
shallow-water update (HLL interface fluxes on hydrostatically reconstructed
states, so a lake at rest stays at rest to machine precision), followed by
a bed update driven by the bed-load closure with upwind flux splitting and
an outflux limiter that can never erode below the fixed floor.

Boundaries: the upstream end and the side walls reflect; the downstream end
is a free outfall.  Wall cells inside the domain (gate blocks) reflect the
same way.  Reservoir columns may carry a plan-area factor; face lengths and
cell areas account for it, and the per-face reconstruction source then
balances the contraction wall pressure exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from .domain import FlowState, Grid, RunConfig, MorphoParams
from . import physics
from .container import write_container, read_container


class SolverError(RuntimeError):
    """Raised when a step produces an invalid state (NaN or negative depth)."""

    def __init__(self, message, t=None, cell=None):
        super().__init__(message)
        self.t = t
        self.cell = cell


# ---------------------------------------------------------------------------
# static per-grid arrays for the two sweep directions


class _Kernel:
    """Precomputed face lengths, wall masks, and areas for one grid."""

    def __init__(self, grid: Grid):
        nx, ny = grid.nx, grid.ny
        act = grid.active
        w = grid.wcol
        area = grid.area
        self.area = area
        self.inv_area = np.where(act, 1.0 / area, 0.0)
        self.inv_area_T = self.inv_area.T.copy()

        # x-oriented faces: shape (nx+1, ny); face k sits between cells k-1, k
        wpad = np.concatenate([w[:1], w, w[-1:]])
        lx = np.minimum(wpad[:-1], wpad[1:])[:, None] * grid.dy * np.ones((1, ny))
        aL = np.zeros((nx + 1, ny), dtype=bool)
        aR = np.zeros((nx + 1, ny), dtype=bool)
        aL[1:] = act
        aR[:-1] = act
        aR[nx] = act[nx - 1]          # open downstream end: ghost mirrors activity
        self.x = _SweepStatic(lx, aL, aR, grid.dx, open_end=True)

        # y-oriented faces, transposed frame: shape (ny+1, nx)
        ly = (w[None, :] * grid.dx) * np.ones((ny + 1, 1))
        actT = act.T
        bL = np.zeros((ny + 1, nx), dtype=bool)
        bR = np.zeros((ny + 1, nx), dtype=bool)
        bL[1:] = actT
        bR[:-1] = actT
        self.y = _SweepStatic(ly, bL, bR, grid.dy, open_end=False)

        self.active = act
        self.skip_exner = bool(np.all(grid.erodible0 == 0.0))


class _SweepStatic:
    def __init__(self, lface, aL, aR, spacing, open_end):
        self.lface = lface
        self.aL = aL
        self.aR = aR
        self.mirror_R = aL & ~aR      # solid on the right: reflect left state
        self.mirror_L = ~aL & aR      # solid on the left: reflect right state
        self.dead = ~aL & ~aR
        self.spacing = spacing
        self.open_end = open_end


def _kernel(grid: Grid) -> _Kernel:
    kern = getattr(grid, "_solver_kernel", None)
    if kern is None:
        kern = _Kernel(grid)
        grid._solver_kernel = kern
    return kern


# ---------------------------------------------------------------------------
# one directional sweep (oriented so the sweep runs along axis 0)


def _minmod(a, b):
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def _sweep(h, un, ut, z, stat: _SweepStatic, g, h_dry, nu):
    """Flux/source contributions for one direction.

    Second-order reconstruction (minmod slopes of surface elevation, bed,
    and velocities; slopes vanish across walls and domain ends), hydrostatic
    correction of the face depths, HLL fluxes with dry-front wave speeds,
    per-side pressure corrections, and a centered bed-slope/width source.
    The combination keeps a lake at rest exact for any bed and any column
    width profile, including wet/dry shorelines.

    Returns (dh, dqn, dqt, outflux_rate): face-length-weighted divergence
    plus sources, per unit time (caller divides by cell area), in the
    oriented frame, and the instantaneous mass outflux through the open end.
    """
    n = h.shape[0]
    shp = (n + 1,) + h.shape[1:]
    ok = stat.aL & stat.aR

    eta = h + z
    d_eta = np.zeros(shp); d_z = np.zeros(shp)
    d_un = np.zeros(shp); d_ut = np.zeros(shp)
    d_eta[1:n] = np.where(ok[1:n], eta[1:] - eta[:-1], 0.0)
    d_z[1:n] = np.where(ok[1:n], z[1:] - z[:-1], 0.0)
    d_un[1:n] = np.where(ok[1:n], un[1:] - un[:-1], 0.0)
    d_ut[1:n] = np.where(ok[1:n], ut[1:] - ut[:-1], 0.0)

    s_eta = _minmod(d_eta[:-1], d_eta[1:])
    s_z = _minmod(d_z[:-1], d_z[1:])
    s_un = _minmod(d_un[:-1], d_un[1:])
    s_ut = _minmod(d_ut[:-1], d_ut[1:])

    # cap the extrapolation so the two face depths never exceed twice the
    # cell mean; scaling all slopes together preserves the rest state
    hp0 = np.maximum(0.0, (eta + 0.5 * s_eta) - (z + 0.5 * s_z))
    hm0 = np.maximum(0.0, (eta - 0.5 * s_eta) - (z - 0.5 * s_z))
    pair = hp0 + hm0
    theta = np.where(pair > 2.0 * h, 2.0 * h / np.where(pair > 0, pair, 1.0), 1.0)
    s_eta *= theta; s_z *= theta; s_un *= theta; s_ut *= theta

    zm = z - 0.5 * s_z
    zp = z + 0.5 * s_z
    h_m = np.maximum(0.0, (eta - 0.5 * s_eta) - zm)
    h_p = np.maximum(0.0, (eta + 0.5 * s_eta) - zp)

    hL = np.empty(shp); hR = np.empty(shp)
    uL = np.empty(shp); uR = np.empty(shp)
    tL = np.empty(shp); tR = np.empty(shp)
    zL = np.empty(shp); zR = np.empty(shp)
    hL[1:] = h_p; uL[1:] = un + 0.5 * s_un; tL[1:] = ut + 0.5 * s_ut; zL[1:] = zp
    hL[0] = h_m[0]; uL[0] = -(un[0] - 0.5 * s_un[0]); tL[0] = ut[0]; zL[0] = zm[0]
    hR[:-1] = h_m; uR[:-1] = un - 0.5 * s_un; tR[:-1] = ut - 0.5 * s_ut; zR[:-1] = zm
    hR[n] = h_p[-1]; uR[n] = un[-1] + 0.5 * s_un[-1]; tR[n] = ut[-1]; zR[n] = zp[-1]
    if not stat.open_end:
        uR[n] = -uR[n]

    mR = stat.mirror_R
    if mR.any():
        hR[mR] = hL[mR]; uR[mR] = -uL[mR]; tR[mR] = tL[mR]; zR[mR] = zL[mR]
    mL = stat.mirror_L
    if mL.any():
        hL[mL] = hR[mL]; uL[mL] = -uR[mL]; tL[mL] = tR[mL]; zL[mL] = zR[mL]
    if stat.dead.any():
        hL[stat.dead] = 0.0; hR[stat.dead] = 0.0

    # hydrostatic reconstruction at the face
    zf = np.maximum(zL, zR)
    hLs = np.maximum(0.0, hL + zL - zf)
    hRs = np.maximum(0.0, hR + zR - zf)

    cL = np.sqrt(g * hLs)
    cR = np.sqrt(g * hRs)
    wetL = hLs > 0.0
    wetR = hRs > 0.0
    both_dry = ~wetL & ~wetR

    sL = np.minimum(uL - cL, uR - cR)
    sR = np.maximum(uL + cL, uR + cR)
    # dry-front wave speeds recover the analytic front celerity
    sL = np.where(~wetL & wetR, uR - 2.0 * cR, sL)
    sR = np.where(~wetL & wetR, uR + cR, sR)
    sL = np.where(wetL & ~wetR, uL - cL, sL)
    sR = np.where(wetL & ~wetR, uL + 2.0 * cL, sR)

    qL = hLs * uL
    qR = hRs * uR
    fL_h = qL
    fR_h = qR
    fL_q = qL * uL + 0.5 * g * hLs * hLs
    fR_q = qR * uR + 0.5 * g * hRs * hRs

    denom = sR - sL
    safe = np.where(np.abs(denom) > 1e-14, denom, 1.0)
    f_h_mid = (sR * fL_h - sL * fR_h + sL * sR * (hRs - hLs)) / safe
    f_q_mid = (sR * fL_q - sL * fR_q + sL * sR * (qR - qL)) / safe
    use_L = sL >= 0.0
    use_R = sR <= 0.0
    f_h = np.where(use_L, fL_h, np.where(use_R, fR_h, f_h_mid))
    f_q = np.where(use_L, fL_q, np.where(use_R, fR_q, f_q_mid))
    f_h = np.where(both_dry, 0.0, f_h)
    f_q = np.where(both_dry, 0.0, f_q)

    # exact rarefaction flux at wet/dry faces: sharper front than the
    # two-wave approximation, which over-feeds the dry cell
    rdry = wetL & ~wetR
    if rdry.any():
        u0 = (uL + 2.0 * cL) / 3.0
        h0 = u0 * u0 / g
        fh_x = np.where(uL - cL >= 0.0, fL_h, np.where(u0 > 0.0, h0 * u0, 0.0))
        fq_x = np.where(uL - cL >= 0.0, fL_q,
                        np.where(u0 > 0.0, h0 * u0 * u0 + 0.5 * g * h0 * h0, 0.0))
        f_h = np.where(rdry, fh_x, f_h)
        f_q = np.where(rdry, fq_x, f_q)
    ldry = ~wetL & wetR
    if ldry.any():
        u0 = (uR - 2.0 * cR) / 3.0
        h0 = u0 * u0 / g
        fh_x = np.where(uR + cR <= 0.0, fR_h, np.where(u0 < 0.0, h0 * u0, 0.0))
        fq_x = np.where(uR + cR <= 0.0, fR_q,
                        np.where(u0 < 0.0, h0 * u0 * u0 + 0.5 * g * h0 * h0, 0.0))
        f_h = np.where(ldry, fh_x, f_h)
        f_q = np.where(ldry, fq_x, f_q)
    # transverse momentum rides the mass flux upwind
    f_t = f_h * np.where(f_h >= 0.0, tL, tR)

    lf = stat.lface
    lf_fh = lf * f_h
    dh = -(lf_fh[1:] - lf_fh[:-1])
    # pressure corrections: each cell sees the face flux plus the gap between
    # its extrapolated depth and the hydrostatically corrected one
    cnL = 0.5 * g * (hL * hL - hLs * hLs)
    cnR = 0.5 * g * (hR * hR - hRs * hRs)
    lf_fqL = lf * (f_q + cnL)
    lf_fqR = lf * (f_q + cnR)
    dqn = -(lf_fqL[1:] - lf_fqR[:-1])
    lf_ft = lf * f_t
    dqt = -(lf_ft[1:] - lf_ft[:-1])
    # centered source: in-cell bed slope force plus width-change wall pressure
    lp = lf[1:]
    lm = lf[:-1]
    dqn += 0.5 * g * (0.5 * (lp + lm) * (h_m + h_p) * (zm - zp)
                      + 0.5 * (lp - lm) * (h_p * h_p + h_m * h_m))

    if nu > 0.0:
        okv = stat.aL & stat.aR
        hbar = 0.5 * (hL + hR)
        okv = okv & (hL > h_dry) & (hR > h_dry)
        fac = np.where(okv, nu * hbar / stat.spacing, 0.0)
        dn = fac * (uR - uL) * lf
        dtv = fac * (tR - tL) * lf
        dqn += dn[1:] - dn[:-1]
        dqt += dtv[1:] - dtv[:-1]

    outflux = float(lf_fh[n].sum()) if stat.open_end else 0.0
    return dh, dqn, dqt, outflux


# ---------------------------------------------------------------------------
# public stepping operations


def compute_dt(state: FlowState, grid: Grid, config: RunConfig) -> float:
    """CFL-limited time step, capped at the probe cadence."""
    kern = _kernel(grid)
    wet = kern.active & (state.h > config.h_dry)
    cap = config.probe_cadence
    if not wet.any():
        return cap
    g = config.gravity
    h = state.h[wet]
    c = np.sqrt(g * h)
    dt_x = grid.dx / (np.abs(state.u[wet]) + c)
    dt_y = grid.dy / (np.abs(state.v[wet]) + c)
    dt = config.cfl * min(dt_x.min(), dt_y.min())
    return min(dt, cap)


def _rhs(h, u, v, z, kern: _Kernel, config: RunConfig):
    g = config.gravity
    dh_x, dqu_x, dqv_x, out_x = _sweep(h, u, v, z, kern.x, g, config.h_dry, config.nu)
    dh_yT, dqv_yT, dqu_yT, _ = _sweep(h.T, v.T, u.T, z.T, kern.y, g,
                                      config.h_dry, config.nu)
    inv_a = kern.inv_area
    return (inv_a * (dh_x + dh_yT.T),
            inv_a * (dqu_x + dqu_yT.T),
            inv_a * (dqv_x + dqv_yT.T),
            out_x)


def _check_depth(h, t):
    if not np.isfinite(h).all() or (h < -1e-9).any():
        bad = ~np.isfinite(h) | (h < -1e-9)
        ii, jj = np.nonzero(bad)
        cell = (int(ii[0]), int(jj[0]))
        raise SolverError(
            f"invalid depth {h[cell]!r} at cell {cell}, t={t:.6f}", t=t, cell=cell)


def _primitive(h, qu, qv, h_dry):
    hc = np.maximum(h, 0.0)
    wet = hc > h_dry
    hw = np.where(wet, hc, 1.0)
    u = np.where(wet, qu / hw, 0.0)
    v = np.where(wet, qv / hw, 0.0)
    return hc, u, v


def step_hydro(state: FlowState, grid: Grid, config: RunConfig, dt: float,
               ledger: dict | None = None) -> FlowState:
    """Advance the water state by dt (bed unchanged).

    Two-stage strong-stability-preserving update over the flux divergence
    (second order in space and time), then semi-implicit friction (exact
    decay of the linearized friction law) and dry-cell momentum zeroing.
    """
    kern = _kernel(grid)
    h_dry = config.h_dry
    h, u, v, z = state.h, state.u, state.v, state.z_b
    t1 = state.t + dt

    dh0, dqu0, dqv0, out0 = _rhs(h, u, v, z, kern, config)
    h1 = h + dt * dh0
    qu1 = h * u + dt * dqu0
    qv1 = h * v + dt * dqv0
    _check_depth(h1, t1)
    h1c, u1, v1 = _primitive(h1, qu1, qv1, h_dry)

    dh1, dqu1, dqv1, out1 = _rhs(h1c, u1, v1, z, kern, config)
    h_new = 0.5 * (h + h1 + dt * dh1)
    qu = 0.5 * (h * u + h1c * u1 + dt * dqu1)
    qv = 0.5 * (h * v + h1c * v1 + dt * dqv1)
    _check_depth(h_new, t1)
    h_new, u_new, v_new = _primitive(h_new, qu, qv, h_dry)

    if config.manning_n > 0.0:
        hw = np.where(h_new > h_dry, h_new, 1.0)
        cf = physics.friction_coefficient(hw, config.manning_n, config.gravity)
        speed = np.sqrt(u_new * u_new + v_new * v_new)
        decay = np.exp(-cf * speed * dt / (2.0 * hw))
        u_new *= decay
        v_new *= decay

    if ledger is not None:
        ledger["water_out"] = ledger.get("water_out", 0.0) + 0.5 * (out0 + out1) * dt

    return FlowState(h=h_new, u=u_new, v=v_new, z_b=z, t=t1)


def step_exner(state: FlowState, grid: Grid, config: RunConfig, dt: float,
               ledger: dict | None = None) -> FlowState:
    """Advance the bed by dt (water columns unchanged).

    Bed-load vector from the closure chain (total and skin friction, Shields
    number, transport magnitude, direction deviation, streamwise slope
    factor), upwind flux splitting at faces, and a per-cell outflux limiter
    that reduces exports proportionally so the erodible layer never goes
    negative.  Sediment leaves only through the downstream open end.
    """
    kern = _kernel(grid)
    p: MorphoParams = config.params
    g = config.gravity
    h, u, v, z = state.h, state.u, state.v, state.z_b
    wet = kern.active & (h > config.h_dry)
    hw = np.where(wet, h, 1.0)

    cf = physics.friction_coefficient(hw, config.manning_n, g)
    tau_x, tau_y = physics.bed_shear_stress(u, v, cf, config.rho_water)
    tau = np.sqrt(tau_x * tau_x + tau_y * tau_y)
    cfp, clamped = physics.skin_friction_coefficient(
        hw, p.alpha_ks, config.d50, config.kappa, c_f=cf)
    tau_eff = (cfp / cf) * tau
    theta = physics.shields_number(tau_eff, config.rho_sediment, config.rho_water,
                                   config.d50, g)
    s_rel = config.rho_sediment / config.rho_water
    qb = physics.mpm_transport_rate(theta, p.theta_cr, p.alpha_mpm, config.d50, s_rel, g)
    qb = np.where(wet, qb, 0.0)
    n_clamped = int(np.count_nonzero(clamped & wet))

    if not qb.any():
        if ledger is not None:
            ledger.setdefault("sediment_out", 0.0)
            ledger["n_cfp_clamped"] = ledger.get("n_cfp_clamped", 0) + n_clamped
        return FlowState(h=h, u=u, v=v, z_b=z.copy(), t=state.t)

    dzdx, dzdy = physics.bed_slopes(z, grid.dx, grid.dy, kern.active)
    alpha, fb = physics.transport_direction(u, v, theta, p.beta2, dzdx, dzdy)
    fac, clip = physics.slope_magnitude_factor(alpha, dzdx, dzdy, p.beta)
    live = qb > 0.0
    n_fb = int(np.count_nonzero(fb & live))
    n_clip = int(np.count_nonzero(clip & live))
    qs = qb * fac
    qx = qs * np.cos(alpha)
    qy = qs * np.sin(alpha)

    one_m_lam = 1.0 - p.porosity
    avail = one_m_lam * (z - grid.z_fixed) * kern.area

    lx = kern.x.lface
    lyT = kern.y.lface
    qx_pos = np.maximum(qx, 0.0)
    qx_neg = np.minimum(qx, 0.0)
    qy_pos = np.maximum(qy, 0.0)
    qy_neg = np.minimum(qy, 0.0)

    # transport is blocked through walls and the closed upstream end
    open_xp = np.zeros_like(lx, dtype=bool)   # cell may export in +x at face i+1
    open_xm = np.zeros_like(lx, dtype=bool)
    open_xp[1:-1] = kern.x.aL[1:-1] & kern.x.aR[1:-1]
    open_xm[1:-1] = open_xp[1:-1]
    open_xp[-1] = kern.x.aR[-1]               # downstream outfall exports
    open_ypT = np.zeros_like(lyT, dtype=bool)
    open_ypT[1:-1] = kern.y.aL[1:-1] & kern.y.aR[1:-1]

    # outgoing volumetric rate per cell (solid volume / time)
    out_rate = (qx_pos * (lx[1:] * open_xp[1:])
                + (-qx_neg) * (lx[:-1] * open_xm[:-1])
                + (qy_pos.T * (lyT[1:] * open_ypT[1:])).T
                + ((-qy_neg.T) * (lyT[:-1] * open_ypT[:-1])).T)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(out_rate > 0.0, avail / (dt * np.where(out_rate > 0, out_rate, 1.0)), 1.0)
    r = np.minimum(r, 1.0)
    n_limited = int(np.count_nonzero(r < 1.0))

    rqx_pos = r * qx_pos
    rqx_neg = r * qx_neg
    rqy_pos = r * qy_pos
    rqy_neg = r * qy_neg

    # face fluxes: exporter-limited upwind split
    fx = np.zeros_like(lx)
    fx[1:-1] = np.where(open_xp[1:-1], rqx_pos[:-1] + rqx_neg[1:], 0.0)
    fx[-1] = np.where(open_xp[-1], rqx_pos[-1], 0.0)
    fyT = np.zeros_like(lyT)
    qyT_pos = rqy_pos.T
    qyT_neg = rqy_neg.T
    fyT[1:-1] = np.where(open_ypT[1:-1], qyT_pos[:-1] + qyT_neg[1:], 0.0)

    lfx = lx * fx
    lfy = lyT * fyT
    div = (lfx[1:] - lfx[:-1]) + (lfy[1:] - lfy[:-1]).T
    z_new = z - dt * kern.inv_area * div / one_m_lam
    np.maximum(z_new, grid.z_fixed, out=z_new)

    if not np.isfinite(z_new).all():
        ii, jj = np.nonzero(~np.isfinite(z_new))
        cell = (int(ii[0]), int(jj[0]))
        raise SolverError(f"invalid bed at cell {cell}, t={state.t:.6f}", t=state.t, cell=cell)

    if ledger is not None:
        ledger["sediment_out"] = ledger.get("sediment_out", 0.0) + float(lfx[-1].sum()) * dt
        ledger["n_cfp_clamped"] = ledger.get("n_cfp_clamped", 0) + n_clamped
        ledger["n_dir_fallback"] = ledger.get("n_dir_fallback", 0) + n_fb
        ledger["n_slope_clipped"] = ledger.get("n_slope_clipped", 0) + n_clip
        ledger["n_outflux_limited"] = ledger.get("n_outflux_limited", 0) + n_limited

    return FlowState(h=h, u=u, v=v, z_b=z_new, t=state.t)


# ---------------------------------------------------------------------------
# whole-run driver


@dataclass
class SimulationResult:
    """Everything one forward run produces, plus provenance and ledgers."""

    status: str
    message: str
    params: MorphoParams
    times: np.ndarray
    probe_xy: np.ndarray
    probe_eta: np.ndarray
    zb_final: np.ndarray
    h_final: np.ndarray
    water_volume: np.ndarray
    sediment_volume: np.ndarray
    water_outflux: np.ndarray
    sediment_outflux: np.ndarray
    n_steps: int = 0
    counters: dict = field(default_factory=dict)
    config_hash: str = ""
    grid_hash: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def run_simulation(grid: Grid, config: RunConfig,
                   params: MorphoParams | None = None) -> SimulationResult:
    """Run the coupled model from the dam-break initial state to t_end.

    A solver failure (NaN, negative depth, collapsed time step) is caught
    and returned as a failed-run record carrying the parameter draw; it does
    not abort the calling process.
    """
    from .domain import initial_state

    if params is not None:
        config = config.with_params(params)
    state = initial_state(grid, config)
    return simulate_from(state, grid, config)


def simulate_from(state: FlowState, grid: Grid, config: RunConfig) -> SimulationResult:
    """Run from an arbitrary initial state (synthetic test cases use this)."""
    kern = _kernel(grid)
    p = config.params
    cad = config.probe_cadence
    n_out = int(round(config.t_end / cad))
    probes = [grid.nearest_cell(x, y) for x, y in zip(config.probe_x, config.probe_y)]
    probe_xy = np.array([[grid.xc[i], grid.yc[j]] for i, j in probes], dtype=float) \
        if probes else np.zeros((0, 2))

    times = np.full(n_out + 1, np.nan)
    probe_eta = np.full((len(probes), n_out + 1), np.nan)
    wat_vol = np.full(n_out + 1, np.nan)
    sed_vol = np.full(n_out + 1, np.nan)
    wat_out = np.full(n_out + 1, np.nan)
    sed_out = np.full(n_out + 1, np.nan)

    area = kern.area
    one_m_lam = 1.0 - p.porosity
    ledger = {"water_out": 0.0, "sediment_out": 0.0}

    def record(k, st):
        times[k] = st.t
        eta = st.z_b + st.h
        for m, (i, j) in enumerate(probes):
            probe_eta[m, k] = eta[i, j]
        wat_vol[k] = float((st.h * area)[kern.active].sum())
        sed_vol[k] = float((one_m_lam * (st.z_b - grid.z_fixed) * area)[kern.active].sum())
        wat_out[k] = ledger["water_out"]
        sed_out[k] = ledger["sediment_out"]

    def result(status, message, st, n_steps):
        counters = {k: v for k, v in ledger.items() if k.startswith("n_")}
        return SimulationResult(
            status=status, message=message, params=p,
            times=times.copy(), probe_xy=probe_xy, probe_eta=probe_eta.copy(),
            zb_final=st.z_b.copy(), h_final=st.h.copy(),
            water_volume=wat_vol.copy(), sediment_volume=sed_vol.copy(),
            water_outflux=wat_out.copy(), sediment_outflux=sed_out.copy(),
            n_steps=n_steps, counters=counters,
            config_hash=config.hash(), grid_hash=grid.hash(),
        )

    record(0, state)
    n_steps = 0
    try:
        for k in range(1, n_out + 1):
            t_next = k * cad
            while state.t < t_next - 1e-12:
                dt = min(compute_dt(state, grid, config), t_next - state.t)
                if dt < 1e-9:
                    raise SolverError(f"time step collapsed to {dt:.3e}", t=state.t)
                state = step_hydro(state, grid, config, dt, ledger)
                if not kern.skip_exner:
                    state = step_exner(state, grid, config, dt, ledger)
                n_steps += 1
                if n_steps > 5_000_000:
                    raise SolverError("step budget exhausted", t=state.t)
            state.t = t_next
            record(k, state)
    except SolverError as exc:
        return result("failed", str(exc), state, n_steps)
    return result("ok", "", state, n_steps)


# ---------------------------------------------------------------------------
# result file I/O


def save_result(path, res: SimulationResult) -> None:
    meta = {
        "status": res.status,
        "message": res.message,
        "params": {k: float(v) for k, v in zip(
            ("alpha_mpm", "theta_cr", "porosity", "alpha_ks", "beta2", "beta"),
            res.params.as_array())},
        "counters": res.counters,
        "config_hash": res.config_hash,
        "grid_hash": res.grid_hash,
        "n_steps": res.n_steps,
        "layout": "xy C-order",
    }
    arrays = {
        "times": res.times, "probe_xy": res.probe_xy, "probe_eta": res.probe_eta,
        "zb_final": res.zb_final, "h_final": res.h_final,
        "water_volume": res.water_volume, "sediment_volume": res.sediment_volume,
        "water_outflux": res.water_outflux, "sediment_outflux": res.sediment_outflux,
    }
    write_container(path, "result", meta, arrays)


def load_result(path) -> SimulationResult:
    meta, arr = read_container(path, expect_kind="result")
    return SimulationResult(
        status=meta["status"], message=meta["message"],
        params=MorphoParams(**meta["params"]),
        times=arr["times"], probe_xy=arr["probe_xy"], probe_eta=arr["probe_eta"],
        zb_final=arr["zb_final"], h_final=arr["h_final"],
        water_volume=arr["water_volume"], sediment_volume=arr["sediment_volume"],
        water_outflux=arr["water_outflux"], sediment_outflux=arr["sediment_outflux"],
        n_steps=meta["n_steps"], counters=meta["counters"],
        config_hash=meta["config_hash"], grid_hash=meta["grid_hash"],
    )
