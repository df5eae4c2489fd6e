"""Gaussian noise schedules and the forward/posterior process algebra.

Steps are 1-indexed: ``beta[t]`` and ``alpha_bar[t]`` are valid for
``t in [1, T]``; index 0 holds the conventions ``beta[0] = 0`` and
``alpha_bar[0] = 1`` so the posterior formulas read naturally at ``t = 1``.

The arithmetic here is the single source of truth for the training loop:
the torch side consumes these coefficient tables rather than re-deriving
them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

__all__ = [
    "NoiseSchedule",
    "q_sample",
    "q_sample_iterated",
    "posterior_mean",
    "posterior_variance",
]


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step beta/alpha/alpha_bar tables of length T + 1."""

    T: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        for arr in (self.beta, self.alpha, self.alpha_bar):
            if arr.shape != (self.T + 1,):
                raise ValidationError("schedule arrays must have length T + 1")
            arr.setflags(write=False)
        core = self.beta[1:]
        if np.any(core <= 0) or np.any(core >= 1):
            raise ValidationError("betas must lie strictly in (0, 1)")
        # monotone betas are a property of DDPM-style linear schedules; the
        # sqrt schedule is U-shaped early on, so only linear enforces it
        if self.kind == "linear" and np.any(np.diff(core) < -1e-12):
            raise ValidationError("linear betas must be nondecreasing")
        if np.any(np.diff(self.alpha_bar) >= 0):
            raise ValidationError("alpha_bar must be strictly decreasing")

    @classmethod
    def from_betas(cls, betas: np.ndarray, kind: str = "custom",
                   check_terminal: bool = True) -> "NoiseSchedule":
        betas = np.asarray(betas, dtype=np.float64)
        T = len(betas)
        beta = np.concatenate([[0.0], betas])
        alpha = 1.0 - beta
        alpha_bar = np.cumprod(alpha)
        sched = cls(T, beta, alpha, alpha_bar, kind)
        # a usable chain must end in (near) pure noise; short hand-built
        # schedules for algebra checks may opt out
        if check_terminal and alpha_bar[T] >= 0.01:
            raise ValidationError(
                f"alpha_bar[T] = {alpha_bar[T]:.4f} >= 0.01; chain does not reach noise"
            )
        return sched

    @classmethod
    def sqrt(cls, T: int, s0: float = 1e-4) -> "NoiseSchedule":
        """alpha_bar tracks 1 - sqrt(t/T + s0); betas derived then clipped."""
        t = np.arange(T + 1, dtype=np.float64)
        raw_bar = 1.0 - np.sqrt(t / T + s0)
        betas = 1.0 - raw_bar[1:] / raw_bar[:-1]
        betas = np.clip(betas, 1e-8, 0.999)
        return cls.from_betas(betas, kind="sqrt")

    @classmethod
    def linear(cls, T: int, beta_1: float = 1e-4, beta_T: float = 0.02) -> "NoiseSchedule":
        return cls.from_betas(np.linspace(beta_1, beta_T, T), kind="linear")

    @classmethod
    def make(cls, kind: str, T: int) -> "NoiseSchedule":
        if kind == "sqrt":
            return cls.sqrt(T)
        if kind == "linear":
            return cls.linear(T)
        raise ValidationError(f"unknown schedule kind {kind!r}")

    def _check_t(self, t: int, lo: int = 1) -> None:
        if not lo <= t <= self.T:
            raise ValidationError(f"step t={t} outside [{lo}, {self.T}]")


def q_sample(x0, t: int, schedule: NoiseSchedule, rng: np.random.Generator,
             eps=None):
    """Closed-form forward sample x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps."""
    schedule._check_t(t)
    x0 = np.asarray(x0, dtype=np.float64)
    if eps is None:
        eps = rng.standard_normal(x0.shape)
    ab = schedule.alpha_bar[t]
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def q_sample_iterated(x0, t: int, schedule: NoiseSchedule,
                      rng: np.random.Generator):
    """One-step-at-a-time forward chain x0 -> x1 -> ... -> x_t.

    Marginally equivalent to :func:`q_sample`; kept as an independent
    sampler for verifying the closed form.
    """
    schedule._check_t(t)
    x = np.asarray(x0, dtype=np.float64)
    for s in range(1, t + 1):
        beta = schedule.beta[s]
        x = np.sqrt(1.0 - beta) * x + np.sqrt(beta) * rng.standard_normal(x.shape)
    return x


def posterior_mean(x_t, x0, t: int, schedule: NoiseSchedule):
    """Mean of q(x_{t-1} | x_t, x0).

    Valid for t in [2, T]; the t = 1 step is the decoder term and has no
    posterior. Works on numpy and torch tensors alike (the coefficients are
    python floats).
    """
    schedule._check_t(t, lo=2)
    ab_t = schedule.alpha_bar[t]
    ab_prev = schedule.alpha_bar[t - 1]
    beta_t = schedule.beta[t]
    alpha_t = schedule.alpha[t]
    coef_x0 = float(np.sqrt(ab_prev) * beta_t / (1.0 - ab_t))
    coef_xt = float(np.sqrt(alpha_t) * (1.0 - ab_prev) / (1.0 - ab_t))
    return coef_x0 * x0 + coef_xt * x_t


def posterior_variance(t: int, schedule: NoiseSchedule) -> float:
    """beta_tilde_t, the fixed reverse-process variance (0 at t = 1)."""
    schedule._check_t(t)
    ab_t = schedule.alpha_bar[t]
    ab_prev = schedule.alpha_bar[t - 1]
    return float(schedule.beta[t] * (1.0 - ab_prev) / (1.0 - ab_t))
