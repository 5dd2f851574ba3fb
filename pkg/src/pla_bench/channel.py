"""Channel model: ground-truth links and every noisy observation of them.

All channel coefficients are circularly symmetric complex Gaussians. The
variance convention throughout is the *total* complex variance: a draw of
variance ``v`` has ``v/2`` per real dimension, so a unit-variance component
has a Rayleigh-distributed magnitude with second moment 1.

Two transmission phases exist. In the enrollment phase the verifier
collects ``M`` estimates of the legitimate link (noise variance
``sigma2_I``); in the classification phase individual packets arrive with
noise variance ``sigma2_II``. Time variation between the two phases is a
Gauss-Markov fade with per-subcarrier coefficients ``alpha_I``/``alpha_II``.
The adversary sees spatially correlated versions of the legitimate link,
with correlations ``rho_AE`` and ``rho_EB`` sharing a common innovation
term per observation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError
from .rng import Rng

ChannelVector = np.ndarray  # complex128, shape (N,) or batched (..., N)


def _as_alpha_vector(value, n: int, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.size == 1:
        arr = np.full(n, float(arr[0]))
    if arr.shape != (n,):
        raise ConfigError(f"{name} must be scalar or length-{n}, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ConfigError(f"{name} components must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class ScenarioParams:
    """All physical parameters of one authentication scenario.

    snr helpers: ``sigma2_I = 10**(-snr_db/10)`` so 15 dB -> 10**-1.5.
    """

    n_subcarriers: int
    m_training: int = 100
    sigma2_I: float = 10**-1.5
    sigma2_II: float = 10**-2.0
    alpha_I: np.ndarray | float = 1.0
    alpha_II: np.ndarray | float = 1.0
    rho_AE: float = 0.0
    rho_EB: float = 0.0
    rho_AB: float = 0.0
    sigma2_AE: float = 0.0
    sigma2_EB: float = 0.0
    power_delay: np.ndarray | None = field(default=None)

    def __post_init__(self):
        n = int(self.n_subcarriers)
        if n < 1:
            raise ConfigError("n_subcarriers must be a positive integer")
        object.__setattr__(self, "n_subcarriers", n)
        m = int(self.m_training)
        if m < 1:
            raise ConfigError("m_training must be a positive integer")
        object.__setattr__(self, "m_training", m)
        for name in ("sigma2_I", "sigma2_II", "sigma2_AE", "sigma2_EB"):
            v = float(getattr(self, name))
            if v < 0 or not math.isfinite(v):
                raise ConfigError(f"{name} must be finite and nonnegative")
            object.__setattr__(self, name, v)
        for name in ("rho_AE", "rho_EB", "rho_AB"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "alpha_I", _as_alpha_vector(self.alpha_I, n, "alpha_I"))
        object.__setattr__(self, "alpha_II", _as_alpha_vector(self.alpha_II, n, "alpha_II"))
        pd = self.power_delay
        if pd is None:
            pd = np.ones(n)
        else:
            pd = np.atleast_1d(np.asarray(pd, dtype=float))
            if pd.shape != (n,):
                raise ConfigError(f"power_delay must have length {n}")
            if np.any(pd <= 0):
                raise ConfigError("power_delay must be strictly positive componentwise")
        object.__setattr__(self, "power_delay", pd)
        self.alpha_I.setflags(write=False)
        self.alpha_II.setflags(write=False)
        self.power_delay.setflags(write=False)

    @classmethod
    def from_snr(cls, n_subcarriers: int, snr_I_db: float, snr_II_db: float, **kwargs) -> "ScenarioParams":
        return cls(
            n_subcarriers=n_subcarriers,
            sigma2_I=10 ** (-snr_I_db / 10.0),
            sigma2_II=10 ** (-snr_II_db / 10.0),
            **kwargs,
        )

    @property
    def snr_I_db(self) -> float:
        return -10.0 * math.log10(self.sigma2_I) if self.sigma2_I > 0 else math.inf

    @property
    def snr_II_db(self) -> float:
        return -10.0 * math.log10(self.sigma2_II) if self.sigma2_II > 0 else math.inf


@dataclass(frozen=True)
class ReferenceEstimate:
    """The verifier's enrollment-phase reference: averaged estimate plus
    the mean fading coefficient that produced it."""

    h_bar: ChannelVector
    alpha_bar_I: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.h_bar, dtype=complex)
        a = np.asarray(self.alpha_bar_I, dtype=float)
        if h.shape != a.shape or h.ndim != 1:
            raise ConfigError("h_bar and alpha_bar_I must be 1-d with equal length")
        if not np.all(np.isfinite(h.view(float))) or not np.all(np.isfinite(a)):
            raise ConfigError("reference estimate must be finite")
        object.__setattr__(self, "h_bar", h)
        object.__setattr__(self, "alpha_bar_I", a)


def complex_gaussian(rng: Rng, shape, variance=1.0) -> np.ndarray:
    """Circularly symmetric complex Gaussian, total variance per component."""
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return scale * (re + 1j * im)


def sample_channel(params: ScenarioParams, rng: Rng, size: int | None = None) -> ChannelVector:
    """Ground-truth link: independent components with variance power_delay[n]."""
    shape = (params.n_subcarriers,) if size is None else (size, params.n_subcarriers)
    return complex_gaussian(rng, shape, params.power_delay)


def bob_estimate_phase1(h_ab: ChannelVector, params: ScenarioParams, alpha_m,
                        rng: Rng, size: int | None = None) -> ChannelVector:
    """One enrollment-phase estimate: faded truth plus estimation noise.

    alpha_m is the fading coefficient in force for this packet. With
    ``size`` given, that many independent estimates of the same channel are
    returned as rows.
    """
    h_ab = np.asarray(h_ab, dtype=complex)
    alpha = _as_alpha_vector(alpha_m, params.n_subcarriers, "alpha_m")
    if h_ab.shape[-1] != alpha.shape[0]:
        raise ConfigError("alpha_m length must match channel dimension")
    shape = h_ab.shape if size is None else (size, params.n_subcarriers)
    fade = complex_gaussian(rng, shape, params.power_delay)
    noise = complex_gaussian(rng, shape, params.sigma2_I)
    return alpha * h_ab + np.sqrt(1.0 - alpha**2) * fade + noise


def average_estimates(estimates, alphas) -> ReferenceEstimate:
    """Arithmetic mean of enrollment estimates and of their fading coefficients."""
    est = [np.asarray(e, dtype=complex) for e in estimates]
    if len(est) == 0:
        raise ConfigError("average_estimates needs at least one estimate")
    n = est[0].shape
    if any(e.shape != n for e in est):
        raise ConfigError("estimates must share one dimension")
    al = [np.atleast_1d(np.asarray(a, dtype=float)) for a in alphas]
    if len(al) != len(est):
        raise ConfigError("one alpha vector per estimate is required")
    h_bar = np.mean(est, axis=0)
    alpha_bar = np.mean([np.full(n[0], a) if a.size == 1 else a for a in al], axis=0)
    return ReferenceEstimate(h_bar=h_bar, alpha_bar_I=alpha_bar)


def reference_estimate(h_ab: ChannelVector, params: ScenarioParams, rng: Rng) -> ReferenceEstimate:
    """Single-shot enrollment reference (one phase-I estimate, M=1).

    The statistical tests model the reference as one full-variance
    enrollment observation; this helper packages that convention.
    """
    est = bob_estimate_phase1(h_ab, params, params.alpha_I, rng)
    return ReferenceEstimate(h_bar=est, alpha_bar_I=np.array(params.alpha_I, copy=True))


def bob_training_set(h_ab: ChannelVector, params: ScenarioParams, rng: Rng) -> np.ndarray:
    """All M enrollment estimates as rows (used by the learned authenticators)."""
    return bob_estimate_phase1(h_ab, params, params.alpha_I, rng, size=params.m_training)


def alice_estimate_phase2(h_ab: ChannelVector, params: ScenarioParams,
                          rng: Rng, size: int | None = None) -> ChannelVector:
    """Classification-phase estimate of a genuine packet."""
    h_ab = np.asarray(h_ab, dtype=complex)
    alpha = params.alpha_II
    shape = h_ab.shape if size is None else (size, params.n_subcarriers)
    fade = complex_gaussian(rng, shape, params.power_delay)
    noise = complex_gaussian(rng, shape, params.sigma2_II)
    return alpha * h_ab + np.sqrt(1.0 - alpha**2) * fade + noise


def eve_observations(h_ab: ChannelVector, params: ScenarioParams,
                     rng: Rng, size: int | None = None,
                     independent_r: bool = False) -> tuple[ChannelVector, ChannelVector]:
    """The adversary's correlated estimates of the two links she can probe.

    Both observations share one innovation draw per packet, which is what
    couples them beyond their common dependence on the true channel. Pass
    ``independent_r=True`` to draw separate innovations per link instead
    (a sensitivity-check variant, not the default model).
    """
    h_ab = np.asarray(h_ab, dtype=complex)
    shape = h_ab.shape if size is None else (size, params.n_subcarriers)
    r = complex_gaussian(rng, shape, params.power_delay)
    r2 = complex_gaussian(rng, shape, params.power_delay) if independent_r else r
    w_ae = complex_gaussian(rng, shape, params.sigma2_AE)
    w_eb = complex_gaussian(rng, shape, params.sigma2_EB)
    h_ae = params.rho_AE * h_ab + np.sqrt(1.0 - params.rho_AE**2) * r + w_ae
    h_eb = params.rho_EB * h_ab + np.sqrt(1.0 - params.rho_EB**2) * r2 + w_eb
    return h_ae, h_eb


def forged_observation(g: ChannelVector, params: ScenarioParams, rng: Rng,
                       phase: str = "II") -> ChannelVector:
    """What the verifier estimates when the adversary transmits ``g``.

    phase "II" is the classification phase (the usual case); phase "I"
    models forged packets injected during enrollment, as used by the
    ideal-knowledge bound.
    """
    g = np.asarray(g, dtype=complex)
    if phase == "II":
        var = params.sigma2_II
    elif phase == "I":
        var = params.sigma2_I
    else:
        raise ConfigError(f"phase must be 'I' or 'II', got {phase!r}")
    return g + complex_gaussian(rng, g.shape, var)
