"""Sediment-transport and friction closures.

All functions are pure and vectorized; scalars in, scalar out.  Units are
SI throughout: depths in m, stresses in Pa, transport rates in m^2/s of
grain volume per unit width.
"""

import numpy as np

LOG_LAW_CONST = 11.036  # rough-wall log-law coefficient in C'_f


def friction_coefficient(h, n, g=9.81):
    """Total bed friction coefficient from Manning roughness: 2 g n^2 / h^(1/3)."""
    h = np.asarray(h, dtype=float)
    return 2.0 * g * n * n / np.cbrt(h)


def bed_shear_stress(u, v, c_f, rho=1000.0):
    """Bed shear stress vector (tau_x, tau_y) = rho/2 * C_f * (u, v) * |u|."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    speed = np.sqrt(u * u + v * v)
    fac = 0.5 * rho * c_f * speed
    return fac * u, fac * v


def skin_friction_coefficient(h, alpha_ks, d50, kappa=0.40, c_f=None):
    """Grain-roughness (skin) friction coefficient 2*(kappa/ln(11.036 h/k_s))^2.

    k_s = alpha_ks * d50.  Where the log argument drops to 1 or below the
    formula loses meaning (flow depth of the order of the roughness height);
    those cells are clamped to the total coefficient ``c_f``.

    Returns (c_fp, clamped_mask).
    """
    h = np.asarray(h, dtype=float)
    ks = alpha_ks * d50
    arg = LOG_LAW_CONST * h / ks
    ok = arg > 1.0
    logterm = np.log(np.where(ok, arg, np.e))
    cfp = 2.0 * (kappa / logterm) ** 2
    clamped = ~ok & np.isfinite(h)
    if c_f is not None:
        cfp = np.where(ok, cfp, c_f)
    else:
        cfp = np.where(ok, cfp, np.nan)
    if np.ndim(h) == 0:
        return float(cfp), bool(clamped)
    return cfp, clamped


def shields_number(tau, rho_s=2630.0, rho=1000.0, d50=1.61e-3, g=9.81):
    """Dimensionless Shields number theta = tau / (g (rho_s - rho) d50)."""
    return np.asarray(tau, dtype=float) / (g * (rho_s - rho) * d50)


def mpm_transport_rate(theta, theta_cr, alpha_mpm, d50=1.61e-3, s=2.63, g=9.81):
    """Bed-load transport magnitude: alpha*(theta - theta_cr)^1.5 * sqrt(g (s-1) d50^3).

    Zero below the critical Shields number.
    """
    theta = np.asarray(theta, dtype=float)
    excess = np.maximum(0.0, theta - theta_cr)
    scale = np.sqrt(g * (s - 1.0) * d50 ** 3)
    q = alpha_mpm * excess ** 1.5 * scale
    return float(q) if np.ndim(theta) == 0 else q


def transport_direction(u, v, theta, beta2, dzdx, dzdy):
    """Bed-load transport angle alpha (radians, atan2 quadrant convention).

    tan(alpha) = (sin(delta) - (1/f) dz/dy) / (cos(delta) - (1/f) dz/dx)
    with delta the flow angle and f(theta) = beta2 * sqrt(theta).  When f
    vanishes on a sloping bed the transport falls back to steepest descent;
    with no slope either, it follows the flow.  Returns (alpha, fallback_mask).
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    dzdx = np.asarray(dzdx, dtype=float)
    dzdy = np.asarray(dzdy, dtype=float)
    speed = np.sqrt(u * u + v * v)
    sin_d = np.where(speed > 0, v / np.where(speed > 0, speed, 1.0), 0.0)
    cos_d = np.where(speed > 0, u / np.where(speed > 0, speed, 1.0), 1.0)
    f = beta2 * np.sqrt(np.maximum(theta, 0.0))
    has_f = f > 0.0
    inv_f = np.where(has_f, 1.0 / np.where(has_f, f, 1.0), 0.0)
    num = np.where(has_f, sin_d - inv_f * dzdy, -dzdy)
    den = np.where(has_f, cos_d - inv_f * dzdx, -dzdx)
    degenerate = ~has_f & (num == 0.0) & (den == 0.0)
    num = np.where(degenerate, sin_d, num)
    den = np.where(degenerate, cos_d, den)
    fallback = ~has_f & ~degenerate
    alpha = np.arctan2(num, den)
    if np.ndim(alpha) == 0:
        return float(alpha), bool(fallback)
    return alpha, fallback


def slope_magnitude_factor(alpha, dzdx, dzdy, beta):
    """Streamwise-slope correction 1 - beta*(dz/dx cos a + dz/dy sin a), floored at 0.

    Returns (factor, clipped_mask); clipping means the raw factor went
    negative (steep adverse slope), where transport is cut to zero rather
    than reversed.
    """
    alpha = np.asarray(alpha, dtype=float)
    raw = 1.0 - beta * (np.asarray(dzdx, float) * np.cos(alpha)
                        + np.asarray(dzdy, float) * np.sin(alpha))
    clipped = raw < 0.0
    fac = np.maximum(0.0, raw)
    if np.ndim(fac) == 0:
        return float(fac), bool(clipped)
    return fac, clipped


def bed_slopes(z_b, dx, dy, active=None):
    """Central-difference bed slopes, one-sided at boundaries and wall cells.

    Neighbours outside the grid or masked inactive are dropped; with both
    neighbours unavailable the slope is zero.  Returns (dz/dx, dz/dy).
    """
    z = np.asarray(z_b, dtype=float)
    nx, ny = z.shape
    if active is None:
        active = np.ones_like(z, dtype=bool)

    def one_axis(step, axis):
        ok_plus = np.zeros_like(active)
        ok_minus = np.zeros_like(active)
        z_plus = z.copy()
        z_minus = z.copy()
        if axis == 0:
            ok_plus[:-1, :] = active[1:, :]
            ok_minus[1:, :] = active[:-1, :]
            z_plus[:-1, :] = np.where(active[1:, :], z[1:, :], z[:-1, :])
            z_minus[1:, :] = np.where(active[:-1, :], z[:-1, :], z[1:, :])
        else:
            ok_plus[:, :-1] = active[:, 1:]
            ok_minus[:, 1:] = active[:, :-1]
            z_plus[:, :-1] = np.where(active[:, 1:], z[:, 1:], z[:, :-1])
            z_minus[:, 1:] = np.where(active[:, :-1], z[:, :-1], z[:, 1:])
        span = (ok_plus.astype(float) + ok_minus.astype(float)) * step
        return np.where(span > 0, (z_plus - z_minus) / np.where(span > 0, span, 1.0), 0.0)

    return one_axis(dx, 0), one_axis(dy, 1)
