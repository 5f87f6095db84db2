"""
Singularity analysis of the network generating functions.

N(x, y) is the smallest root z of Φ(x, y, z) = T̄(x, z) − log((1+z)/(1+y)) + xz²/(1+xz).
The dominant singularity ρ_N(y) is either a branch point (Φ = Φ_z = 0 strictly inside
the domain of T̄: subcritical) or inherited from T̄ (ρ_N = ρ_T(N₀): supercritical).
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import logging
import math

import numpy as np
from scipy.optimize import brentq

from src import config
from src.core_classes import CoreClass, SyntheticPolylogClass
from src.errors import (
    NoSingularityFound,
    NonConvergence,
    OutsideDomain,
    RegimeInconsistency,
    SingularSystem,
)
from src.models import AlphaVector, GFValues, Regime, SingularityReport
from src.series import estimate_singular_exponent, solve_network_series


# Configure logging
logger = logging.getLogger(__name__)

# giant-core fractions below this are finite-difference noise
GAMMA_ROUNDOFF = 1e-8


@dataclass(frozen=True)
class PhiValues:
    """Φ and its first partials at a point."""
    phi: float
    phi_x: float
    phi_z: float


@dataclass(frozen=True)
class SingularityLocation:
    """
    Result of the singularity search at one value of y.

    Attributes:
        y: Edge variable
        rho_n: Dominant singularity ρ_N(y)
        n0: N(ρ_N, y)
        regime: Branch taken by the search
        lambda_value: Φ_z at the critical candidate (+inf when there is none)
        phi_z_at_root: Φ_z(ρ_N, y, N₀)
        near_critical: |λ| below the boundary tolerance
        bracket: Last x where the scalar solver converged and first x where it failed
    """
    y: float
    rho_n: float
    n0: float
    regime: Regime
    lambda_value: float
    phi_z_at_root: float
    near_critical: bool
    bracket: Tuple[float, float]


def _check_phi_domain(x: float, z: float) -> None:
    if z <= -1 or x * z == -1:
        raise OutsideDomain(f"Φ evaluated at x={x}, z={z}")


def phi_eval(core_class: CoreClass, x: float, y: float, z: float) -> PhiValues:
    """
    Φ(x, y, z) with its closed-form partials.

    Φ_x = T̄_x + z²/(1+xz)² and Φ_z = T̄_z − (1 − xz²(2+xz))/((1+z)(1+xz)²).

    Raises:
        OutsideDomain: If x >= ρ_T(z) or z <= −1
    """
    _check_phi_domain(x, z)
    t = core_class.tbar_eval(x, z)
    one_xz = 1.0 + x * z
    phi = t.value - math.log((1.0 + z) / (1.0 + y)) + x * z * z / one_xz
    phi_x = t.dx + z * z / one_xz ** 2
    phi_z = t.dz - (1.0 - x * z * z * (2.0 + x * z)) / ((1.0 + z) * one_xz ** 2)
    return PhiValues(phi, phi_x, phi_z)


def phi_zz(core_class: CoreClass, x: float, z: float) -> float:
    """Φ_zz = T̄_zz + 1/(1+z)² + 2x/(1+xz)³ (independent of y)."""
    _check_phi_domain(x, z)
    t = core_class.tbar_eval(x, z)
    return t.dzz + 1.0 / (1.0 + z) ** 2 + 2.0 * x / (1.0 + x * z) ** 3


def gf_from_root(core_class: CoreClass, x: float, y: float, n_value: float) -> GFValues:
    """
    Recover S, P and H from N.

    S = xN²/(1+xN), H = T̄(x, N) and P = N − y − S − H.
    """
    s_value = x * n_value ** 2 / (1.0 + x * n_value)
    h_value = core_class.tbar_eval(x, n_value).value
    p_value = n_value - y - s_value - h_value
    return GFValues(x=x, y=y, N=n_value, S=s_value, P=p_value, H=h_value)


def _seed_sweeps(core_class: CoreClass, x: float, y: float) -> float:
    """Damped Jacobi sweeps over the four equations from (y, 0, 0, 0)."""
    n_value, s_value, p_value, h_value = y, 0.0, 0.0, 0.0
    d = config.GF_DAMPING
    try:
        for _ in range(config.GF_SEED_SWEEPS):
            u = s_value + h_value
            s_new = x * (n_value - s_value) * n_value
            h_new = core_class.tbar_eval(x, n_value).value
            p_new = (1.0 + y) * math.expm1(u) - u
            n_new = y + s_value + p_value + h_value
            s_value = (1 - d) * s_value + d * s_new
            h_value = (1 - d) * h_value + d * h_new
            p_value = (1 - d) * p_value + d * p_new
            n_value = (1 - d) * n_value + d * n_new
            if not math.isfinite(n_value):
                return y
    except (OutsideDomain, OverflowError):
        return y
    return n_value


def _newton_from_below(core_class: CoreClass, x: float, y: float, start: float) -> float:
    """
    Newton on z -> Φ(x, y, z) started where Φ > 0.

    Φ is convex in z, so the iterates increase towards the first root.

    Raises:
        NonConvergence: If Φ_z >= 0 while Φ > 0 (no root: x is past ρ_N), the iterates
            leave the domain, or the iteration cap is reached
    """
    z = start
    for _ in range(config.GF_MAX_NEWTON):
        try:
            values = phi_eval(core_class, x, y, z)
        except OutsideDomain as exc:
            raise NonConvergence(f"Newton left the domain at x={x}, z={z}") from exc
        if values.phi <= 0:
            return z
        if values.phi_z >= 0:
            raise NonConvergence(f"Φ has no root at x={x}: Φ_z >= 0 while Φ > 0 (z={z})")
        step = -values.phi / values.phi_z
        z += step
        if step <= 1e-15 * z:
            return z
    raise NonConvergence(f"Newton on Φ did not converge at x={x}")


def solve_gf_values(core_class: CoreClass, x: float, y: float, start: Optional[float] = None) -> GFValues:
    """
    Values of N, S, P and H at (x, y).

    Damped sweeps of the four equations from N = y, S = P = H = 0 give a seed that
    Newton's method on Φ in z polishes.

    Args:
        core_class: Core class
        x: Vertex variable
        y: Edge variable
        start: Known lower bound for N (e.g. N at a smaller x) replacing the sweeps

    Raises:
        ValueError: If y <= 0 or x < 0
        NonConvergence: If the system has no solution at (x, y), i.e. x > ρ_N(y)
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    if x < 0:
        raise ValueError(f"x must be non-negative, got {x}")
    if x == 0:
        return GFValues(x=0.0, y=y, N=y, S=0.0, P=0.0, H=0.0)

    seed = _seed_sweeps(core_class, x, y) if start is None else start
    try:
        if phi_eval(core_class, x, y, seed).phi <= 0:
            seed = y
    except OutsideDomain:
        seed = y
    n_value = _newton_from_below(core_class, x, y, seed)

    try:
        gf = gf_from_root(core_class, x, y, n_value)
    except OutsideDomain as exc:
        raise NonConvergence(f"root N={n_value} outside the domain at x={x}") from exc
    _, par_residual = gf.residuals()
    if not abs(par_residual) <= 1e-10 * max(1.0, gf.N) or min(gf.S, gf.P, gf.H) < -1e-12:
        raise NonConvergence(f"residual {par_residual:.3g} too large at x={x}, y={y}")
    return gf


def _solves(core_class: CoreClass, x: float, y: float, start: float) -> Optional[GFValues]:
    try:
        return solve_gf_values(core_class, x, y, start=start)
    except NonConvergence:
        return None


def _bracket_rho(core_class: CoreClass, y: float) -> Tuple[float, float, GFValues]:
    """Scan x upwards until the scalar solver fails, then bisect."""
    rho_y = core_class.rho_t(y)
    step = rho_y / config.SCAN_DIVISIONS if math.isfinite(rho_y) else 0.005
    lo, lo_gf = 0.0, solve_gf_values(core_class, 0.0, y)
    hi = step
    for _ in range(100 * config.SCAN_DIVISIONS):
        gf = _solves(core_class, hi, y, lo_gf.N)
        if gf is None:
            break
        lo, lo_gf = hi, gf
        hi += step
    else:
        raise NoSingularityFound(f"scalar solver never failed while scanning x at y={y}")

    for _ in range(200):
        if hi - lo <= 1e-14 * hi:
            break
        mid = 0.5 * (lo + hi)
        gf = _solves(core_class, mid, y, lo_gf.N)
        if gf is None:
            hi = mid
        else:
            lo, lo_gf = mid, gf
    logger.debug(f"ρ_N({y}) bracketed in [{lo:.15g}, {hi:.15g}]")
    return lo, hi, lo_gf


def _branch_point_newton(core_class: CoreClass, y: float, x0: float, z0: float) -> Optional[Tuple[float, float]]:
    """
    Newton on (Φ, Φ_z) = 0 in (x, z) with a central-difference Φ_xz.

    Returns:
        The root, or None if the iteration leaves the domain or fails to settle
    """
    x, z = x0, z0
    best: Optional[Tuple[float, float, float]] = None
    for _ in range(100):
        try:
            values = phi_eval(core_class, x, y, z)
            h = 1e-7 * x
            dzx = (phi_eval(core_class, x + h, y, z).phi_z
                   - phi_eval(core_class, x - h, y, z).phi_z) / (2 * h)
            dzz = phi_zz(core_class, x, z)
        except OutsideDomain:
            return None
        residual = max(abs(values.phi), abs(values.phi_z))
        if best is None or residual < best[2]:
            best = (x, z, residual)
        if residual < 1e-13:
            return x, z
        jacobian = np.array([[values.phi_x, values.phi_z], [dzx, dzz]])
        try:
            dx, dz = np.linalg.solve(jacobian, [-values.phi, -values.phi_z])
        except np.linalg.LinAlgError:
            break
        t = 1.0
        while t > 1e-8:
            nx_, nz_ = x + t * dx, z + t * dz
            if nx_ > 0 and nz_ > 0:
                try:
                    core_class.check_domain(nx_, nz_)
                    break
                except OutsideDomain:
                    pass
            t *= 0.5
        else:
            return None
        if abs(t * dx) <= 1e-16 * x and abs(t * dz) <= 1e-16 * z:
            break
        x, z = nx_, nz_
    if best is not None and best[2] < 1e-9:
        return best[0], best[1]
    return None


def critical_candidate(core_class: CoreClass, y: float) -> Optional[float]:
    """
    First root z_c > y of g(z) = Φ(ρ_T(z), y, z), or None.

    There is no candidate when T̄ is entire or cannot be evaluated on its circle of
    convergence (a pole).
    """
    if core_class.entire:
        return None

    def g(z: float) -> float:
        return phi_eval(core_class, core_class.rho_t(z), y, z).phi

    try:
        z, gz = y, g(y)
        if gz <= 0:
            return y
        for _ in range(2000):
            z_next = z * 1.05
            g_next = g(z_next)
            if g_next <= 0:
                if g_next == 0:
                    return z_next
                return float(brentq(g, z, z_next, xtol=1e-15, rtol=1e-15, maxiter=500))
            z, gz = z_next, g_next
    except OutsideDomain:
        return None
    return None


def locate_singularity(core_class: CoreClass, y: float = 1.0) -> SingularityLocation:
    """
    Locate ρ_N(y) and N₀ and classify the regime.

    A scan along the solution curve brackets ρ_N. Newton on (Φ, Φ_z) from the
    bracket gives the branch point; if it lies strictly inside the domain of T̄ the
    regime is subcritical. Otherwise Φ(ρ_T(z), y, z) = 0 is solved for z and the
    regime is supercritical with ρ_N = ρ_T(N₀). The regime indicator λ is Φ_z at the
    critical candidate and must agree with the branch taken.

    Raises:
        NoSingularityFound: If neither branch yields a root
        RegimeInconsistency: If the sign of λ contradicts the branch
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    x_lo, x_hi, gf_lo = _bracket_rho(core_class, y)

    candidate = critical_candidate(core_class, y)
    if candidate is None:
        lambda_value = math.inf
    else:
        lambda_value = phi_eval(core_class, core_class.rho_t(candidate), y, candidate).phi_z
    near_critical = abs(lambda_value) < config.NEAR_CRITICAL_TOL

    root = _branch_point_newton(core_class, y, x_lo, gf_lo.N)
    subcritical = False
    if root is not None:
        x_root, z_root = root
        inside = x_root < core_class.rho_t(z_root) * (1 - 1e-9)
        on_curve = abs(x_root - x_lo) <= 1e-6 * x_lo and z_root >= y
        subcritical = inside and on_curve and phi_zz(core_class, x_root, z_root) > 0

    if subcritical:
        rho_n, n0 = root
        regime = Regime.SUBCRITICAL
        if lambda_value <= 0 and not near_critical:
            raise RegimeInconsistency(
                f"branch point found at x={rho_n:.12g} but Φ_z at the critical candidate is {lambda_value:.3g}"
            )
    else:
        if candidate is None:
            raise NoSingularityFound(
                f"{core_class.spec}: no branch point and no critical root at y={y}"
            )
        rho_n, n0 = core_class.rho_t(candidate), candidate
        regime = Regime.SUPERCRITICAL
        if lambda_value >= 0 and not near_critical:
            raise RegimeInconsistency(
                f"critical root z={n0:.12g} has Φ_z = {lambda_value:.3g} >= 0"
            )
        if abs(rho_n - x_lo) > 1e-6 * rho_n:
            logger.warning(f"Critical root ρ_T(N₀)={rho_n:.12g} differs from scan bracket {x_lo:.12g}")

    phi_z_at_root = phi_eval(core_class, rho_n, y, n0).phi_z
    if near_critical:
        logger.warning(f"{core_class.spec} is near-critical at y={y} (λ={lambda_value:.3g}); unsupported")
    logger.info(f"{core_class.spec}: y={y} ρ_N={rho_n:.12g} N₀={n0:.12g} {regime.value}")
    return SingularityLocation(
        y=y,
        rho_n=rho_n,
        n0=n0,
        regime=regime,
        lambda_value=lambda_value,
        phi_z_at_root=phi_z_at_root,
        near_critical=near_critical,
        bracket=(x_lo, x_hi),
    )


def draw_counter_system(gf: GFValues, mu: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Matrix M and right-hand side r of the linear system for the draw-counter densities.

    Unknowns are (a_Net, a_Ser, a_Par, v_T, e_T). Rows: expected edges per vertex,
    vertices split into series vertices and core vertices, series draws, parallel
    draws, and net draws = 1 + series draws + core edges.
    """
    y, rho, n0, s0, p0 = gf.y, gf.x, gf.N, gf.S, gf.P
    matrix = np.array([
        [y / n0, y * rho * n0 / s0, y * (n0 - y) / ((1 + y) * p0), 0.0, 0.0],
        [0.0, 1.0, 0.0, 1.0, 0.0],
        [s0 / n0, -1.0, s0 * n0 / p0, 0.0, 0.0],
        [p0 / n0, rho * p0 * n0 / s0, -1.0, 0.0, 0.0],
        [-1.0, 1.0, 0.0, 0.0, 1.0],
    ])
    rhs = np.array([y * mu, 1.0, 0.0, 0.0, 0.0])
    return matrix, rhs


def _richardson(values: Dict[int, float], h: float) -> Tuple[float, float]:
    """First and second derivative from samples at offsets −2h..2h, one Richardson step each."""
    d1_h = (values[1] - values[-1]) / (2 * h)
    d1_2h = (values[2] - values[-2]) / (4 * h)
    d2_h = (values[1] - 2 * values[0] + values[-1]) / h ** 2
    d2_2h = (values[2] - 2 * values[0] + values[-2]) / (4 * h ** 2)
    return (4 * d1_h - d1_2h) / 3, (4 * d2_h - d2_2h) / 3


def network_constants(
    core_class: CoreClass,
    y: float = 1.0,
    k_max: Optional[int] = None,
    fit_order: Optional[int] = None,
) -> SingularityReport:
    """
    Compute every constant of the limit laws at the dominant singularity.

    Args:
        core_class: Core class
        y: Edge variable
        k_max: Length of the p_k table (default config.K_MAX)
        fit_order: Series order for the fitted coefficient exponent (default
            config.SERIES_ORDER, 0 skips the fit)

    Returns:
        SingularityReport

    Raises:
        NoSingularityFound: Propagated from the locator
        SingularSystem: If the draw-counter system is singular
    """
    k_max = config.K_MAX if k_max is None else k_max
    fit_order = config.SERIES_ORDER if fit_order is None else fit_order
    h = config.FD_STEP

    location = locate_singularity(core_class, y)
    rhos = {0: location.rho_n}
    for offset in (-2, -1, 1, 2):
        neighbour = locate_singularity(core_class, y + offset * h)
        if neighbour.regime is not location.regime:
            logger.warning(f"Regime changes between y={y} and y={y + offset * h}")
        rhos[offset] = neighbour.rho_n
    d_rho, dd_rho = _richardson(rhos, h)
    rho, n0 = location.rho_n, location.n0
    mu = -d_rho / rho
    condition_b = -dd_rho / rho - d_rho / rho + (d_rho / rho) ** 2
    if abs(condition_b) < 1e-10:
        logger.warning(f"Non-degeneracy expression vanishes ({condition_b:.3g})")

    gf = gf_from_root(core_class, rho, y, n0)
    matrix, rhs = draw_counter_system(gf, mu)
    det_m = float(np.linalg.det(matrix))
    det_closed = rho * n0 ** 2 + (rho + 1) * n0 + 1
    if abs(det_m) < 1e-12:
        raise SingularSystem(f"draw-counter system is singular (det={det_m:.3g})")
    if not math.isclose(abs(det_m), det_closed, rel_tol=1e-8):
        logger.info(f"det(M)={det_m:.12g}, closed form {det_closed:.12g}")
    solution = np.linalg.solve(matrix, rhs)
    if np.max(np.abs(matrix @ solution - rhs)) > 1e-8:
        raise SingularSystem("draw-counter system solved with a large residual")
    alpha_vec = AlphaVector(*(float(v) for v in solution))
    if min(alpha_vec.as_list()) < -1e-12:
        logger.warning(f"Negative draw-counter density: {alpha_vec}")

    tbar = core_class.tbar_eval(rho, n0)
    a_t = (1 + y) * mu * gf.H
    gamma_t = alpha_vec.v_t - a_t * rho * tbar.dx / tbar.value
    if abs(gamma_t) < GAMMA_ROUNDOFF:
        gamma_t = 0.0

    log_total = math.log(tbar.value)
    pk = {}
    for k in range(4, k_max + 1):
        log_term = core_class.log_tbar_term(k - 2, rho, n0)
        if log_term > -math.inf:
            pk[k] = math.exp(log_term - log_total)
    pk_tail = core_class.tail_mass(k_max - 2, rho, n0) / tbar.value
    total = sum(pk.values()) + pk_tail
    if abs(total - 1) > 1e-8:
        logger.warning(f"p_k sums to {total:.12g}")

    rho_t = core_class.rho_t(n0)
    tau = rho / rho_t if math.isfinite(rho_t) else 0.0
    alpha = core_class.singular_exponent
    if location.regime is Regime.SUBCRITICAL:
        beta_lemma, beta_singular = 2.5, 1.5
    else:
        beta_lemma, beta_singular = alpha, alpha + 1.0

    beta_fitted = None
    if fit_order:
        try:
            solved = solve_network_series(core_class, y, order=fit_order, scale=rho)
            beta_fitted = estimate_singular_exponent(solved.N, rho)
        except (NonConvergence, ValueError) as exc:
            logger.warning(f"Coefficient exponent fit skipped: {exc}")

    return SingularityReport(
        class_spec=core_class.spec,
        y=y,
        rho_n=rho,
        n0=n0,
        gf=gf,
        regime=location.regime,
        lambda_value=location.lambda_value,
        phi_z_at_root=location.phi_z_at_root,
        tau=tau,
        mu=mu,
        alpha_vec=alpha_vec,
        a_t=a_t,
        gamma_t=gamma_t,
        beta_lemma=beta_lemma,
        beta_singular=beta_singular,
        beta_fitted=beta_fitted,
        condition_b=condition_b,
        det_m=det_m,
        det_closed_form=det_closed,
        pk=pk,
        pk_tail_mass=pk_tail,
        near_critical=location.near_critical,
        entire_function=core_class.entire,
        pole_type=core_class.pole_type,
        singular_exponent=alpha,
    )


def predicted_core_density(report: SingularityReport, k: int) -> float:
    """a_T · p_k: limit of (number of cores with k vertices)/n."""
    return report.a_t * report.pk.get(k, 0.0)


def predicted_range_density(report: SingularityReport, k: int, xi: float) -> float:
    """a_T · Σ_{k <= ℓ <= ξk} p_ℓ."""
    if xi < 1:
        raise ValueError("xi must be >= 1")
    top = math.floor(xi * k)
    return report.a_t * sum(p for size, p in report.pk.items() if k <= size <= top)


def sweep_regimes(
    alpha: float,
    lambdas: Sequence[float],
    radius: float = 1.0,
    y: float = 1.0,
    min_size: int = 2,
) -> List[Tuple[float, SingularityLocation]]:
    """Locate the singularity of the synthetic class for each λ."""
    results = []
    for lam in lambdas:
        location = locate_singularity(SyntheticPolylogClass(alpha, lam, min_size, radius), y)
        results.append((lam, location))
    return results


def critical_lambda(
    alpha: float,
    radius: float,
    y: float = 1.0,
    min_size: int = 2,
    lo: float = 1e-6,
    hi: float = 10.0,
) -> float:
    """
    λ* where the synthetic class changes regime.

    Small λ gives a supercritical class (when the radius is small enough), large λ a
    subcritical one. λ* is the root of the regime indicator in λ.

    Raises:
        NoSingularityFound: If both ends of [lo, hi] lie in the same regime
    """
    def indicator(log_lam: float) -> float:
        cls = SyntheticPolylogClass(alpha, math.exp(log_lam), min_size, radius)
        z_c = critical_candidate(cls, y)
        if z_c is None:
            return 1.0
        return phi_eval(cls, cls.rho_t(z_c), y, z_c).phi_z

    a, b = math.log(lo), math.log(hi)
    fa, fb = indicator(a), indicator(b)
    if not (fa < 0 < fb):
        raise NoSingularityFound(f"no regime change for λ in [{lo}, {hi}] (radius {radius})")
    return math.exp(brentq(indicator, a, b, xtol=1e-12))


def _pk_points(pk: Dict[int, float], k_lo: int, k_hi: int) -> Tuple[np.ndarray, np.ndarray]:
    ks = np.array([k for k in sorted(pk) if k_lo <= k <= k_hi and pk[k] > 0], dtype=float)
    if len(ks) < 2:
        raise ValueError(f"fewer than two positive p_k in [{k_lo}, {k_hi}]")
    return ks, np.log([pk[int(k)] for k in ks])


def fit_pk_log_slope(pk: Dict[int, float], k_lo: int, k_hi: int) -> float:
    """Least-squares slope of log p_k against k (log τ for geometric decay)."""
    ks, logs = _pk_points(pk, k_lo, k_hi)
    return float(np.polyfit(ks, logs, 1)[0])


def fit_pk_exponent(pk: Dict[int, float], k_lo: int, k_hi: int) -> float:
    """Least-squares slope of log p_k against log k (−(α+1) for power-law decay)."""
    ks, logs = _pk_points(pk, k_lo, k_hi)
    return float(np.polyfit(np.log(ks), logs, 1)[0])
