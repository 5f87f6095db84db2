"""Truncated power-series arithmetic and the network series solver."""

from dataclasses import dataclass
from typing import Dict, Optional, Protocol

import logging
import math

import numpy as np

from src import config
from src.errors import CoefficientOverflow, NonConvergence


# Configure logging
logger = logging.getLogger(__name__)

# factorials up to 170! are finite floats
_EXACT_FACTORIAL_LIMIT = 171
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


def _from_log(log_magnitude: float, sign_of: float, what: str) -> float:
    if log_magnitude > _LOG_FLOAT_MAX:
        raise CoefficientOverflow(
            f"{what} is about exp({log_magnitude:.1f}), beyond floating-point range"
        )
    return math.copysign(math.exp(log_magnitude), sign_of)


class BivariateTerms(Protocol):
    """Anything that can list the coefficients of T̄(x, z) in log form."""

    def tbar_log_terms(self, k: int) -> Dict[int, float]:
        ...


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """
    A power series in x truncated after order K.

    Coefficients are stored scaled: ``coeffs[n] = [x^n]F * scale**n``. With the
    default scale of 1 they are the plain egf coefficients.

    Attributes:
        coeffs: Array of K + 1 (scaled) coefficients
        scale: Scale s applied to the variable
    """
    coeffs: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        array = np.asarray(self.coeffs, dtype=float)
        if array.ndim != 1 or array.size == 0:
            raise ValueError("coeffs must be a non-empty one-dimensional sequence")
        if not self.scale > 0:
            raise ValueError("scale must be positive")
        object.__setattr__(self, "coeffs", array)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @staticmethod
    def zeros(order: int, scale: float = 1.0) -> "TruncatedSeries":
        return TruncatedSeries(np.zeros(order + 1), scale)

    @staticmethod
    def constant(value: float, order: int, scale: float = 1.0) -> "TruncatedSeries":
        coeffs = np.zeros(order + 1)
        coeffs[0] = value
        return TruncatedSeries(coeffs, scale)

    @staticmethod
    def variable(order: int, scale: float = 1.0) -> "TruncatedSeries":
        """The series x itself."""
        coeffs = np.zeros(order + 1)
        if order >= 1:
            coeffs[1] = scale
        return TruncatedSeries(coeffs, scale)

    def _stored(self, n: int) -> float:
        if n > self.order:
            raise IndexError(f"order {n} beyond truncation {self.order}")
        return float(self.coeffs[n])

    def coefficient(self, n: int) -> float:
        """
        Unscaled coefficient [x^n]F.

        Raises:
            CoefficientOverflow: If the value does not fit in a float; use
                log_coefficient instead
        """
        value = self._stored(n)
        if self.scale == 1.0 or value == 0.0:
            return value
        return _from_log(math.log(abs(value)) - n * math.log(self.scale), value, f"[x^{n}]")

    def log_coefficient(self, n: int) -> float:
        """log [x^n]F for a positive coefficient (finite even when the value overflows)."""
        value = self._stored(n)
        if value <= 0:
            return -math.inf
        return math.log(value) - n * math.log(self.scale)

    def egf_count(self, n: int) -> float:
        """
        n! [x^n]F, the count encoded by an egf coefficient.

        Raises:
            CoefficientOverflow: If the count does not fit in a float; use
                log_egf_count instead
        """
        value = self._stored(n)
        if value == 0.0:
            return 0.0
        if self.scale == 1.0 and n < _EXACT_FACTORIAL_LIMIT:
            count = value * math.factorial(n)
            if math.isfinite(count):
                return count
        log_magnitude = math.log(abs(value)) - n * math.log(self.scale) + math.lgamma(n + 1)
        return _from_log(log_magnitude, value, f"{n}! [x^{n}]")

    def log_egf_count(self, n: int) -> float:
        """log(n! [x^n]F) for a positive coefficient."""
        return self.log_coefficient(n) + math.lgamma(n + 1)

    def truncate(self, order: int) -> "TruncatedSeries":
        return TruncatedSeries(self.coeffs[: order + 1].copy(), self.scale)

    def _check_scale(self, other: "TruncatedSeries") -> None:
        if not math.isclose(self.scale, other.scale, rel_tol=1e-15):
            raise ValueError(f"scale mismatch: {self.scale} vs {other.scale}")

    def __add__(self, other):
        if isinstance(other, TruncatedSeries):
            self._check_scale(other)
            k = min(self.order, other.order)
            return TruncatedSeries(self.coeffs[: k + 1] + other.coeffs[: k + 1], self.scale)
        coeffs = self.coeffs.copy()
        coeffs[0] += other
        return TruncatedSeries(coeffs, self.scale)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(-self.coeffs, self.scale)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return TruncatedSeries(self.coeffs * other, self.scale)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        head = ", ".join(f"{c:.6g}" for c in self.coeffs[:6])
        return f"TruncatedSeries(order={self.order}, scale={self.scale:g}, [{head}, ...])"


@dataclass(frozen=True)
class NetworkSeries:
    """
    Truncated series of the four network classes at a fixed edge weight y.

    Attributes:
        y: Edge variable
        N: All networks
        S: Series networks
        P: Parallel networks
        H: Core networks
        sweeps: Total number of coefficient sweeps performed
    """
    y: float
    N: TruncatedSeries
    S: TruncatedSeries
    P: TruncatedSeries
    H: TruncatedSeries
    sweeps: int = 0

    @property
    def order(self) -> int:
        return self.N.order

    @property
    def scale(self) -> float:
        return self.N.scale


def series_mul(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product truncated at the smaller of the two orders."""
    a._check_scale(b)
    k = min(a.order, b.order)
    product = np.convolve(a.coeffs[: k + 1], b.coeffs[: k + 1])[: k + 1]
    return TruncatedSeries(product, a.scale)


def series_exp(a: TruncatedSeries) -> TruncatedSeries:
    """
    exp(a) truncated at the order of a.

    Uses n b_n = sum_{k=1..n} k a_k b_{n-k}, which follows from (exp a)' = a' exp a;
    the constant term contributes the scalar factor exp(a_0).
    """
    a_coeffs = a.coeffs
    out = np.zeros_like(a_coeffs)
    out[0] = math.exp(a_coeffs[0])
    weighted = np.arange(a.order + 1) * a_coeffs
    for n in range(1, a.order + 1):
        out[n] = np.dot(weighted[1 : n + 1], out[n - 1 :: -1][:n]) / n
    return TruncatedSeries(out, a.scale)


def series_log(a: TruncatedSeries) -> TruncatedSeries:
    """
    log(a) truncated at the order of a.

    Raises:
        ValueError: If the constant term is not positive
    """
    a_coeffs = a.coeffs
    if not a_coeffs[0] > 0:
        raise ValueError("series_log needs a positive constant term")
    out = np.zeros_like(a_coeffs)
    out[0] = math.log(a_coeffs[0])
    for n in range(1, a.order + 1):
        k = np.arange(1, n)
        acc = np.dot(k * out[1:n], a_coeffs[n - 1 : 0 : -1]) if n > 1 else 0.0
        out[n] = (n * a_coeffs[n] - acc) / (n * a_coeffs[0])
    return TruncatedSeries(out, a.scale)


def series_evaluate(series: TruncatedSeries, x: float) -> float:
    """Sum of the truncated series at x."""
    return float(np.polynomial.polynomial.polyval(x / series.scale, series.coeffs))


def _scaled_core_terms(core_class: BivariateTerms, order: int, scale: float) -> Dict[int, Dict[int, float]]:
    """Scaled coefficients c_{k,d} s^k of T̄ for 2 <= k <= order, negligible ones dropped."""
    log_scale = math.log(scale)
    terms = {}
    for k in range(2, order + 1):
        row = {}
        for degree, log_coeff in core_class.tbar_log_terms(k).items():
            log_weight = log_coeff + k * log_scale
            if log_weight > -700.0:
                row[degree] = math.exp(log_weight)
        if row:
            terms[k] = row
    return terms


def _fill_power_column(powers: np.ndarray, coeffs: np.ndarray, m: int) -> None:
    """
    Set powers[d, m] = [u^m] F^d for every d, given F's coefficients up to m.

    [u^m] F^d = f_0 [u^m] F^(d-1) + sum_{j=1..m} f_j [u^(m-j)] F^(d-1); the sum only
    reads earlier columns, the first term needs row d - 1 of this column first.
    """
    powers[0, m] = 1.0 if m == 0 else 0.0
    if powers.shape[0] == 1:
        return
    if m:
        tails = powers[:-1, m - 1 :: -1] @ coeffs[1 : m + 1]
    else:
        tails = np.zeros(powers.shape[0] - 1)
    lead = float(coeffs[0])
    for d in range(1, powers.shape[0]):
        powers[d, m] = lead * powers[d - 1, m] + tails[d - 1]


def compose_core(core_class: BivariateTerms, n_series: TruncatedSeries) -> TruncatedSeries:
    """
    Build T̄(x, N(x)) by substituting N into the z argument of T̄.

    Args:
        core_class: Class providing tbar_log_terms
        n_series: The series substituted for z

    Returns:
        Composition truncated at the order (and scale) of n_series
    """
    order, scale = n_series.order, n_series.scale
    terms = _scaled_core_terms(core_class, order, scale)
    max_degree = max((d for row in terms.values() for d in row), default=0)
    powers = np.zeros((max_degree + 1, order + 1))
    for m in range(order + 1):
        _fill_power_column(powers, n_series.coeffs, m)

    out = np.zeros(order + 1)
    for k, row in terms.items():
        for degree, weight in row.items():
            out[k:] += weight * powers[degree, : order + 1 - k]
    return TruncatedSeries(out, scale)


def _estimate_scale(core_class: BivariateTerms, y: float) -> float:
    """Pick a scale close to ρ_N from a low-order pilot solve so high orders stay in range."""
    pilot = _solve(core_class, y, config.SERIES_PILOT_ORDER, 1.0)
    estimate = estimate_radius(pilot.N)
    logger.debug(f"Series scale estimated at {estimate:.6g} from order {pilot.order} pilot solve")
    return estimate


def estimate_radius(series: TruncatedSeries) -> float:
    """
    Radius of convergence from the last coefficient ratios.

    The ratios [x^(n-1)]F / [x^n]F behave like ρ (1 + β/n); combining the last two
    removes the 1/n term.

    Raises:
        ValueError: If the series is too short or its last coefficients are not positive
    """
    coeffs, n = series.coeffs, series.order
    if n < 2 or not np.all(coeffs[n - 2 :] > 0):
        raise ValueError("need three positive trailing coefficients to estimate a radius")
    ratio_last = series.scale * coeffs[n - 1] / coeffs[n]
    ratio_prev = series.scale * coeffs[n - 2] / coeffs[n - 1]
    estimate = n * ratio_last - (n - 1) * ratio_prev
    if not (math.isfinite(estimate) and estimate > 0):
        estimate = ratio_last
    return float(estimate)


def solve_network_series(
    core_class: BivariateTerms,
    y: float,
    order: Optional[int] = None,
    scale: Optional[float] = None,
) -> NetworkSeries:
    """
    Solve the network equations coefficient by coefficient.

    N = y + S + P + H, S = x (N - S) N, P = (1 + y)(exp(S + H) - 1) - S - H and
    H = T̄(x, N). The order-n coefficients of the right-hand sides only involve
    lower orders of N, so at each order the four equations are swept until the
    coefficients are stationary.

    Args:
        core_class: Core class supplying tbar_log_terms
        y: Edge variable (> 0)
        order: Truncation order K (default config.SERIES_ORDER)
        scale: Coefficient scale; chosen from a pilot solve when None and K is
            above the pilot order

    Returns:
        NetworkSeries holding N, S, P and H

    Raises:
        ValueError: If y is not positive
        NonConvergence: If a coefficient fails to settle or leaves floating-point range
    """
    if not y > 0:
        raise ValueError(f"y must be positive, got {y}")
    order = config.SERIES_ORDER if order is None else order
    if order < 0:
        raise ValueError("order must be >= 0")
    if scale is None:
        scale = _estimate_scale(core_class, y) if order > config.SERIES_PILOT_ORDER else 1.0
    return _solve(core_class, y, order, scale)


def _solve(core_class: BivariateTerms, y: float, order: int, scale: float) -> NetworkSeries:
    cap = max(config.SERIES_ITERATION_FACTOR * max(order, 1), 2)
    terms = _scaled_core_terms(core_class, order, scale)
    max_degree = max((d for row in terms.values() for d in row), default=0)

    n_c = np.zeros(order + 1)
    s_c = np.zeros(order + 1)
    p_c = np.zeros(order + 1)
    h_c = np.zeros(order + 1)
    u_c = np.zeros(order + 1)
    e_c = np.zeros(order + 1)
    powers = np.zeros((max_degree + 1, order + 1))

    n_c[0] = y
    e_c[0] = 1.0
    _fill_power_column(powers, n_c, 0)
    sweeps = 0

    with np.errstate(over="raise", invalid="raise"):
        try:
            for n in range(1, order + 1):
                previous = None
                while True:
                    sweeps += 1
                    if sweeps > cap:
                        raise NonConvergence(
                            f"series coefficients did not settle after {cap} sweeps (order {n})"
                        )
                    h_n = 0.0
                    for k, row in terms.items():
                        if k > n:
                            break
                        for degree, weight in row.items():
                            h_n += weight * powers[degree, n - k]
                    # N - S = y + P + H
                    rest = n_c[:n] - s_c[:n]
                    s_n = scale * float(np.dot(rest, n_c[n - 1 :: -1]))
                    u_c[n] = s_n + h_n
                    e_n = float(np.dot(np.arange(1, n + 1) * u_c[1 : n + 1], e_c[n - 1 :: -1])) / n
                    p_n = (1.0 + y) * e_n - u_c[n]
                    current = (s_n, p_n, h_n, s_n + p_n + h_n)
                    s_c[n], p_c[n], h_c[n], n_c[n] = current
                    e_c[n] = e_n
                    if current == previous:
                        break
                    previous = current
                if not math.isfinite(n_c[n]):
                    raise NonConvergence(f"coefficient of order {n} is not finite")
                _fill_power_column(powers, n_c, n)
        except FloatingPointError as exc:
            raise NonConvergence(
                f"series coefficients left floating-point range (scale {scale:g}): {exc}"
            ) from exc

    logger.debug(f"Network series solved to order {order} in {sweeps} sweeps")
    return NetworkSeries(
        y=y,
        N=TruncatedSeries(n_c, scale),
        S=TruncatedSeries(s_c, scale),
        P=TruncatedSeries(p_c, scale),
        H=TruncatedSeries(h_c, scale),
        sweeps=sweeps,
    )


def network_series_residuals(core_class: BivariateTerms, solved: NetworkSeries) -> Dict[str, float]:
    """
    Substitute the solved series back into the four equations.

    The core equation is checked against compose_core, the composition of T̄ with N.

    Returns:
        Maximal coefficient residual per equation, relative to max(1, |N_n|)
    """
    y, order, scale = solved.y, solved.order, solved.scale
    x = TruncatedSeries.variable(order, scale)
    n_series, s_series, p_series, h_series = solved.N, solved.S, solved.P, solved.H
    u = s_series + h_series

    residuals = {
        "sum": n_series - (s_series + p_series + h_series + y),
        "series": s_series - x * (n_series - s_series) * n_series,
        "parallel": p_series - ((series_exp(u) - 1.0) * (1.0 + y) - u),
        "core": h_series - compose_core(core_class, n_series),
    }
    weight = np.maximum(1.0, np.abs(n_series.coeffs))
    return {name: float(np.max(np.abs(r.coeffs) / weight)) for name, r in residuals.items()}


def biconnected_edge_derivative(solved: NetworkSeries) -> TruncatedSeries:
    """
    Series of ∂B/∂y, the edge-rooted biconnected graphs, from the network series.

    Uses ∂B/∂y = x²/2 · (1 + N)/(1 + y): a network plus the pole edge, or a single
    root edge when the network is the bare edge.
    """
    y, order, scale = solved.y, solved.order, solved.scale
    out = np.zeros(order + 1)
    if order >= 2:
        shifted = solved.N.coeffs[: order - 1].copy()
        shifted[0] += 1.0
        out[2:] = 0.5 * scale ** 2 * shifted / (1.0 + y)
    return TruncatedSeries(out, scale)


def estimate_singular_exponent(series: TruncatedSeries, rho: float) -> float:
    """
    Fit the polynomial correction of the coefficient growth.

    Fits log([x^n]F · ρ^n) ≈ const − e · log n over the top half of the orders and
    returns e (for N this is α + 1, or 3/2 at a square-root branch point).

    Args:
        series: Truncated series with positive coefficients
        rho: Dominant singularity of the series

    Returns:
        The fitted exponent e
    """
    order = series.order
    if order < 4:
        raise ValueError("need at least order 4 to fit an exponent")
    ns = np.arange(order // 2, order + 1)
    values = series.coeffs[ns]
    keep = values > 0
    ns, values = ns[keep], values[keep]
    if ns.size < 2:
        raise ValueError("not enough positive coefficients to fit an exponent")
    logs = np.log(values) + ns * math.log(rho / series.scale)
    slope, _ = np.polyfit(np.log(ns), logs, 1)
    return float(-slope)
