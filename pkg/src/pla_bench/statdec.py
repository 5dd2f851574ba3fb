"""Statistical decision rules for the authentication problem.

Contains the log-likelihood-ratio (LLR) threshold test, the combined
LLR+modulus test with its two-step threshold optimization, the
ideal-knowledge bound, and the noncentral chi-square machinery these
tests are built on. The distribution code is self-contained (series plus
continued fraction for the regularized incomplete gamma, Poisson-mixture
series for the noncentral CDF) so the package has no runtime dependency
beyond numpy.
"""
from __future__ import annotations

from dataclasses import dataclass
import enum
import math

import numpy as np

from .channel import (
    ReferenceEstimate,
    ScenarioParams,
    complex_gaussian,
    eve_observations,
    sample_channel,
)
from .errors import ConfigError, InfeasibleTargetError, NumericError, SingularTestError
from .rng import Rng


class Hypothesis(enum.Enum):
    H0 = "H0"  # legitimate transmitter
    H1 = "H1"  # impersonation


# ---------------------------------------------------------------------------
# incomplete gamma / chi-square numerics

_MAX_SERIES_ITER = 10_000


def _gammainc_lower_reg(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x), a > 0, x >= 0."""
    if a <= 0:
        raise ConfigError("gamma shape must be positive")
    if x < 0:
        raise ConfigError("gamma argument must be nonnegative")
    if x == 0.0:
        return 0.0
    log_prefix = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1.0:
        # power series around 0
        term = 1.0 / a
        total = term
        ap = a
        for _ in range(_MAX_SERIES_ITER):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * 1e-17:
                return min(1.0, total * math.exp(log_prefix))
        raise NumericError("incomplete gamma series did not converge")
    # Lentz continued fraction for the upper tail Q(a, x)
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b if b != 0 else 1.0 / tiny
    h = d
    for i in range(1, _MAX_SERIES_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            q = math.exp(log_prefix) * h
            return max(0.0, 1.0 - q)
    raise NumericError("incomplete gamma continued fraction did not converge")


def _chi2_cdf_scalar(x: float, dof: float) -> float:
    if x <= 0.0:
        return 0.0
    return _gammainc_lower_reg(dof / 2.0, x / 2.0)


def _ncx2_cdf_scalar(x: float, dof: int, delta: float) -> float:
    """Poisson mixture of central chi-square CDFs, absolute error < 1e-12.

    The mixture is walked outward from its modal index so that only terms
    carrying real probability mass are ever evaluated; the truncation error
    is bounded by the Poisson mass left unaccumulated.
    """
    if dof < 1:
        raise ConfigError("dof must be >= 1")
    if delta < 0:
        raise ConfigError("noncentrality must be nonnegative")
    if x <= 0.0:
        return 0.0
    lam = delta / 2.0
    if lam == 0.0:
        return _chi2_cdf_scalar(x, dof)
    xs = x / 2.0
    a0 = dof / 2.0
    j0 = int(lam)
    log_lam = math.log(lam)
    log_xs = math.log(xs)
    # central value, Poisson log-weight and log step term at the start index
    c0 = _gammainc_lower_reg(a0 + j0, xs)
    lw0 = -lam + j0 * log_lam - math.lgamma(j0 + 1)
    lt0 = (a0 + j0) * log_xs - xs - math.lgamma(a0 + j0 + 1.0)
    w = math.exp(lw0)
    total = w * c0
    wsum = w
    # upward sweep: P(a+1, xs) = P(a, xs) - t(a), t(a+1) = t(a) * xs / (a+1)
    c, lw, lt, j = c0, lw0, lt0, j0
    for _ in range(1_000_000):
        c -= math.exp(lt)
        if c < 0.0:
            c = 0.0
        j += 1
        lt += log_xs - math.log(a0 + j)
        lw += log_lam - math.log(j)
        w = math.exp(lw)
        total += w * c
        wsum += w
        # the third clause guards against stagnation: once the step term
        # underflows, c freezes at a rounding remnant (~1e-15) while the
        # unaccumulated mass bound still counts the downward sweep's share
        if (1.0 - wsum) * c < 5e-16 or wsum >= 1.0 or w < 1e-20:
            break
    else:
        raise NumericError("noncentral chi-square series exceeded iteration cap")
    # downward sweep: P(a-1, xs) = P(a, xs) + t(a-1), t(a-1) = t(a) * a / xs
    c, lw, lt = c0, lw0, lt0
    for j in range(j0 - 1, -1, -1):
        lt += math.log(a0 + j + 1) - log_xs
        c = min(1.0, c + math.exp(lt))
        lw += math.log(j + 1) - log_lam
        w = math.exp(lw)
        total += w * c
        wsum += w
        if (1.0 - wsum) < 5e-16 or w < 1e-20:
            break
    return min(1.0, max(0.0, total))


def ncx2_cdf(x, dof: int, delta) -> float | np.ndarray:
    """Noncentral chi-square CDF; broadcasts over x and delta."""
    x_arr = np.asarray(x, dtype=float)
    d_arr = np.asarray(delta, dtype=float)
    if x_arr.ndim == 0 and d_arr.ndim == 0:
        return _ncx2_cdf_scalar(float(x_arr), dof, float(d_arr))
    x_b, d_b = np.broadcast_arrays(x_arr, d_arr)
    out = np.empty(x_b.shape)
    flat_x, flat_d, flat_o = x_b.ravel(), d_b.ravel(), out.ravel()
    for i in range(flat_o.size):
        flat_o[i] = _ncx2_cdf_scalar(float(flat_x[i]), dof, float(flat_d[i]))
    return out


def ncx2_inv(p: float, dof: int, delta: float) -> float:
    """Inverse CDF by bracketing and bisection, |cdf(x) - p| <= 1e-9."""
    if not 0.0 < p < 1.0:
        raise ConfigError("probability must lie strictly inside (0, 1)")
    if delta < 0:
        raise ConfigError("noncentrality must be nonnegative")
    mean = dof + delta
    spread = math.sqrt(2.0 * (dof + 2.0 * delta))
    lo, hi = 0.0, mean + 10.0 * spread + 10.0
    for _ in range(200):
        if _ncx2_cdf_scalar(hi, dof, delta) >= p:
            break
        hi *= 2.0
    else:
        raise NumericError("could not bracket the requested quantile")
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            return mid
        c = _ncx2_cdf_scalar(mid, dof, delta)
        if abs(c - p) <= 1e-9:
            return mid
        if c < p:
            lo = mid
        else:
            hi = mid
        # the width cutoff must stay relative: an absolute floor would stop
        # far-left quantiles (tiny x, steep density) short of the 1e-9 contract
        if hi - lo <= 1e-13 * mid:
            return mid
    raise NumericError("quantile bisection did not converge")


@dataclass(frozen=True)
class NoncentralChi2:
    """Distribution object bundling degrees of freedom and noncentrality."""

    dof: int
    delta: float

    def __post_init__(self):
        if int(self.dof) < 1:
            raise ConfigError("dof must be a positive integer")
        if self.delta < 0:
            raise ConfigError("delta must be nonnegative")
        object.__setattr__(self, "dof", int(self.dof))
        object.__setattr__(self, "delta", float(self.delta))

    def cdf(self, x):
        return ncx2_cdf(x, self.dof, self.delta)

    def inv(self, p: float) -> float:
        return ncx2_inv(p, self.dof, self.delta)


def normal_upper_quantile(q: float) -> float:
    """z with P[Z > z] = q for standard normal Z, via the chi-square link."""
    if not 0.0 < q < 0.5:
        raise ConfigError("tail probability must lie in (0, 0.5)")
    return math.sqrt(ncx2_inv(1.0 - 2.0 * q, 1, 0.0))


# ---------------------------------------------------------------------------
# LLR test

def per_dim_variance(params: ScenarioParams, alpha_bar_I=None) -> np.ndarray:
    """Per-subcarrier variance of the test statistic's complex differences.

    sigma_n^2 = sigma2_I + sigma2_II + (1 - alpha_bar_I_n^2) + (1 - alpha_II_n^2)
    """
    a_bar = params.alpha_I if alpha_bar_I is None else np.asarray(alpha_bar_I, dtype=float)
    return (
        params.sigma2_I
        + params.sigma2_II
        + (1.0 - a_bar**2)
        + (1.0 - params.alpha_II**2)
    )


@dataclass(frozen=True)
class LlrTest:
    reference: ReferenceEstimate
    sigma2_n: np.ndarray
    theta: float

    def __post_init__(self):
        s = np.atleast_1d(np.asarray(self.sigma2_n, dtype=float))
        if s.shape != self.reference.h_bar.shape:
            raise ConfigError("sigma2_n must match the reference dimension")
        if np.any(s <= 0):
            raise SingularTestError("per-dimension variance must be strictly positive")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        object.__setattr__(self, "sigma2_n", s)


def llr_statistic(h_hat, test: LlrTest):
    """Psi = 2 * sum_n |h_hat_n - h_bar_n|^2 / sigma_n^2 (batched over rows)."""
    h_hat = np.asarray(h_hat, dtype=complex)
    diff = h_hat - test.reference.h_bar
    return 2.0 * np.sum(np.abs(diff) ** 2 / test.sigma2_n, axis=-1)


def noncentrality_mu(params: ScenarioParams, h_ab, alpha_bar_I=None) -> float:
    """Noncentrality of the statistic when the legitimate user transmits."""
    a_bar = params.alpha_I if alpha_bar_I is None else np.asarray(alpha_bar_I, dtype=float)
    s2 = per_dim_variance(params, a_bar)
    h_ab = np.asarray(h_ab, dtype=complex)
    return float(np.sum((2.0 / s2) * np.abs((params.alpha_II - a_bar) * h_ab) ** 2))


def noncentrality_beta(g, params: ScenarioParams, h_ab, alpha_bar_I=None) -> float:
    """Noncentrality when the adversary transmits the forged vector g."""
    a_bar = params.alpha_I if alpha_bar_I is None else np.asarray(alpha_bar_I, dtype=float)
    s2 = per_dim_variance(params, a_bar)
    g = np.asarray(g, dtype=complex)
    h_ab = np.asarray(h_ab, dtype=complex)
    return float(np.sum((2.0 / s2) * np.abs(g - a_bar * h_ab) ** 2))


def llr_decide(psi: float, theta: float) -> Hypothesis:
    """Accept (H0) if and only if the statistic does not exceed the threshold."""
    if not theta > 0:
        raise ConfigError("theta must be positive")
    return Hypothesis.H0 if psi <= theta else Hypothesis.H1


def analytic_pfa_pmd(theta: float, mu: float, beta, n_subcarriers: int):
    """Closed-form error rates of the LLR test at threshold theta.

    Returns (P_FA, P_MD) with 2*n_subcarriers degrees of freedom. beta may
    be an array of noncentralities, in which case P_MD is an array.
    """
    dof = 2 * n_subcarriers
    pfa = 1.0 - ncx2_cdf(theta, dof, mu)
    pmd = ncx2_cdf(theta, dof, beta)
    return pfa, pmd


# ---------------------------------------------------------------------------
# combined LLR + modulus test

def modulus_statistic(reference: ReferenceEstimate, h_hat):
    """Gamma = sum_n (|h_bar_n| - |h_hat_n|), batched over rows of h_hat."""
    h_hat = np.asarray(h_hat, dtype=complex)
    return np.sum(np.abs(reference.h_bar) - np.abs(h_hat), axis=-1)


@dataclass(frozen=True)
class CombinedTest:
    llr: LlrTest
    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be strictly positive")


def combined_decide(psi: float, gamma: float, test: CombinedTest) -> Hypothesis:
    """Accept only when both the LLR and the modulus conditions hold."""
    ok = psi <= test.llr.theta and -test.epsilon <= gamma <= test.epsilon
    return Hypothesis.H0 if ok else Hypothesis.H1


@dataclass(frozen=True)
class ThresholdResult:
    theta: float
    epsilon: float
    pfa_estimate: float
    pmd_estimate: float
    n_feasible: int


def _acceptance_counts(psi, gamma_abs, theta_grid, eps_grid):
    """counts[j, k] = #trials with psi <= theta_j and |gamma| <= eps_k."""
    j_idx = np.searchsorted(theta_grid, psi, side="left")
    k_idx = np.searchsorted(eps_grid, gamma_abs, side="left")
    hist = np.zeros((theta_grid.size + 1, eps_grid.size + 1), dtype=np.int64)
    np.add.at(hist, (j_idx, k_idx), 1)
    return hist[:-1, :-1].cumsum(axis=0).cumsum(axis=1)


def optimize_thresholds(
    scenario: ScenarioParams,
    target_pfa: float,
    n_mc: int,
    rng: Rng,
    attack=None,
    n_theta: int = 64,
    n_eps: int = 64,
) -> ThresholdResult:
    """Two-step Monte Carlo selection of (theta, epsilon).

    Step 1 enumerates grid pairs whose estimated false-alarm rate matches
    the target within its 95% binomial interval; step 2 returns the
    feasible pair with the smallest estimated missed-detection rate under
    the given attack (a callable mapping the adversary's two observations
    and the scenario to a forged vector; defaults to the scaled-replay
    strategy). Ties prefer the larger theta, then the larger epsilon.
    """
    if not 0.0 < target_pfa < 1.0:
        raise ConfigError("target_pfa must lie in (0, 1)")
    if target_pfa * n_mc < 100:
        raise ConfigError("n_mc too small for the requested false-alarm target")
    if attack is None:
        from .attacks import simplified_attack
        attack = simplified_attack

    n = scenario.n_subcarriers
    dof = 2 * n
    s2 = per_dim_variance(scenario)
    if np.any(s2 <= 0):
        raise SingularTestError("scenario gives zero per-dimension variance")

    # H0 calibration sample, fresh channel per trial
    r_h0 = rng.derive(0)
    h = sample_channel(scenario, r_h0, size=n_mc)
    fade_ref = sample_channel(scenario, r_h0, size=n_mc)
    noise_ref = complex_gaussian(r_h0, (n_mc, n), scenario.sigma2_I)
    a_bar = scenario.alpha_I
    h_bar = a_bar * h + np.sqrt(1.0 - a_bar**2) * fade_ref + noise_ref
    fade2 = sample_channel(scenario, r_h0, size=n_mc)
    noise2 = complex_gaussian(r_h0, (n_mc, n), scenario.sigma2_II)
    h_hat = scenario.alpha_II * h + np.sqrt(1.0 - scenario.alpha_II**2) * fade2 + noise2
    psi0 = 2.0 * np.sum(np.abs(h_hat - h_bar) ** 2 / s2, axis=-1)
    gam0 = np.abs(np.sum(np.abs(h_bar) - np.abs(h_hat), axis=-1))

    mu_nominal = float(np.sum((2.0 / s2) * (scenario.alpha_II - a_bar) ** 2 * scenario.power_delay))
    theta_grid = np.linspace(
        ncx2_inv(1.0 - min(2.0 * target_pfa, 1.0 - 1e-9), dof, mu_nominal),
        ncx2_inv(1.0 - target_pfa / 10.0, dof, mu_nominal),
        n_theta,
    )
    # the top of the epsilon grid must leave the modulus condition with a
    # false-alarm contribution well under the target, so reach out to the
    # Gaussian-approximate quantile at a tenth of it
    sig_g = float(np.sqrt(np.mean(gam0**2)))
    eps_hi = sig_g * normal_upper_quantile(min(target_pfa / 20.0, 0.25)) + 1e-12
    eps_grid = np.linspace(0.0, eps_hi, n_eps)

    acc0 = _acceptance_counts(psi0, gam0, theta_grid, eps_grid)
    pfa_est = 1.0 - acc0 / float(n_mc)
    ci = 1.96 * math.sqrt(target_pfa * (1.0 - target_pfa) / n_mc)
    feasible = np.abs(pfa_est - target_pfa) <= ci
    if not feasible.any():
        raise InfeasibleTargetError(
            f"no (theta, epsilon) grid point reaches P_FA={target_pfa:g} within its 95% interval"
        )

    # H1 sample under the configured attack
    r_h1 = rng.derive(1)
    h1 = sample_channel(scenario, r_h1, size=n_mc)
    fade_ref1 = sample_channel(scenario, r_h1, size=n_mc)
    noise_ref1 = complex_gaussian(r_h1, (n_mc, n), scenario.sigma2_I)
    h_bar1 = a_bar * h1 + np.sqrt(1.0 - a_bar**2) * fade_ref1 + noise_ref1
    h_ae, h_eb = eve_observations(h1, scenario, r_h1, size=n_mc)
    g = attack(h_ae, h_eb, scenario)
    # forged packets cross the epoch boundary too: keep the mean at g but
    # add the fading innovation so the closed forms stay exact at alpha_II < 1
    fade_g = sample_channel(scenario, r_h1, size=n_mc)
    h_hat1 = (g + np.sqrt(1.0 - scenario.alpha_II**2) * fade_g
              + complex_gaussian(r_h1, (n_mc, n), scenario.sigma2_II))
    psi1 = 2.0 * np.sum(np.abs(h_hat1 - h_bar1) ** 2 / s2, axis=-1)
    gam1 = np.abs(np.sum(np.abs(h_bar1) - np.abs(h_hat1), axis=-1))
    pmd_est = _acceptance_counts(psi1, gam1, theta_grid, eps_grid) / float(n_mc)

    best = None
    for j in range(n_theta):
        for k in range(n_eps):
            if not feasible[j, k]:
                continue
            cand = (pmd_est[j, k], -theta_grid[j], -eps_grid[k])
            if best is None or cand < best[0]:
                best = (cand, j, k)
    _, j, k = best
    return ThresholdResult(
        theta=float(theta_grid[j]),
        epsilon=float(eps_grid[k]) if eps_grid[k] > 0 else float(eps_grid[1] if n_eps > 1 else 1e-12),
        pfa_estimate=float(pfa_est[j, k]),
        pmd_estimate=float(pmd_est[j, k]),
        n_feasible=int(feasible.sum()),
    )


# ---------------------------------------------------------------------------
# ideal-knowledge bound

@dataclass(frozen=True)
class IdealBoundTest:
    reference: ReferenceEstimate
    eve_reference: np.ndarray
    sigma2: float
    sigma2_E: float
    theta_bar: float

    def __post_init__(self):
        if not (self.sigma2 > 0 and self.sigma2_E > 0):
            raise SingularTestError("ideal-bound variances must be positive")
        object.__setattr__(self, "eve_reference", np.asarray(self.eve_reference, dtype=complex))


def ideal_llr(h_hat, test: IdealBoundTest):
    """Log-likelihood ratio when the verifier also knows the forged reference.

    Accept when the value does not exceed theta_bar.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    n = test.reference.h_bar.shape[0]
    d0 = np.sum(np.abs(h_hat - test.reference.h_bar) ** 2, axis=-1)
    d1 = np.sum(np.abs(h_hat - test.eve_reference) ** 2, axis=-1)
    return (
        n * math.log(math.sqrt(test.sigma2) / math.sqrt(test.sigma2_E))
        + d0 / (2.0 * test.sigma2)
        - d1 / (2.0 * test.sigma2_E)
    )


def calibrate_threshold(samples, target_pfa: float) -> float:
    """Empirical threshold with P[statistic > threshold] <= target on the sample."""
    samples = np.asarray(samples, dtype=float)
    if samples.size * target_pfa < 1:
        raise ConfigError("not enough calibration samples for the target rate")
    return float(np.quantile(samples, 1.0 - target_pfa, method="higher"))
