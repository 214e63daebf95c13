"""Monte Carlo simulation of the helper schemes, with exact small-instance oracles.

Trials are cut into fixed-size chunks; chunk ``i`` always draws from the
stream ``SeedSequence(master_seed, spawn_key=(i,))`` and partial tallies are
merged in chunk order. Results therefore depend only on (master_seed, trials,
config), never on how many worker processes ran the chunks.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np
from scipy import special, stats

from . import awgn, prob
from .awgn import AwgnParams, FlashDesign
from .modulo import ModuloParams, helper_set_member
from .values import ExponentValue

CHUNK_SIZE = 8192

HELPER_FAILURE = "helper_failure"
DECODE_ERROR = "decode_error"
NONE = "none"


@dataclass(frozen=True)
class RngPlan:
    master_seed: int
    stream_count: int = 1

    def __post_init__(self):
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master seed must be a 64-bit unsigned integer")
        if self.stream_count < 1:
            raise ValueError("need at least one stream")

    def chunk_rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=(index,)))


@dataclass
class Tally:
    """Additive partial result of a batch of trials."""

    trials: int = 0
    helper_failure: int = 0
    decode_error: int = 0
    power_sum: float = 0.0
    power_trials: int = 0
    max_residual_steps: float = 0.0
    power_bound_violations: int = 0

    def merge(self, other: Tally) -> Tally:
        return Tally(
            self.trials + other.trials,
            self.helper_failure + other.helper_failure,
            self.decode_error + other.decode_error,
            self.power_sum + other.power_sum,
            self.power_trials + other.power_trials,
            max(self.max_residual_steps, other.max_residual_steps),
            self.power_bound_violations + other.power_bound_violations,
        )


def clopper_pearson(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval."""
    alpha = 1.0 - level
    lo = 0.0 if errors == 0 else float(stats.beta.ppf(alpha / 2, errors, trials - errors + 1))
    hi = 1.0 if errors == trials else float(stats.beta.ppf(1 - alpha / 2, errors + 1, trials - errors))
    return lo, hi


@dataclass(frozen=True)
class ExponentEstimate:
    value: ExponentValue
    lower: float
    upper: float
    block_length: int
    censored: bool

    def to_dict(self) -> dict:
        return {
            "value": _json_float(self.value.value),
            "lower": _json_float(self.lower),
            "upper": _json_float(self.upper),
            "block_length": self.block_length,
            "censored": self.censored,
        }


@dataclass(frozen=True)
class SimResult:
    scheme: str
    trials: int
    block_length: int
    errors_by_cause: dict[str, int]
    realized_power_mean: float | None
    hard_checks: dict[str, bool]
    report: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.errors_by_cause.values()) != self.trials:
            raise ValueError("cause counts must add up to the number of trials")

    @property
    def errors_total(self) -> int:
        return self.trials - self.errors_by_cause[NONE]

    @property
    def error_rate(self) -> float:
        return self.errors_total / self.trials

    @property
    def ci95(self) -> tuple[float, float]:
        if self.errors_total == 0:
            return 0.0, min(1.0, 3.0 / self.trials)
        return clopper_pearson(self.errors_total, self.trials, 0.95)

    @property
    def exponent_estimate(self) -> ExponentEstimate:
        return estimate_exponent(self)

    @property
    def all_checks_passed(self) -> bool:
        return all(self.hard_checks.values())

    def to_dict(self) -> dict:
        lo, hi = self.ci95
        return {
            "scheme": self.scheme,
            "trials": self.trials,
            "block_length": self.block_length,
            "errors_total": self.errors_total,
            "errors_by_cause": dict(self.errors_by_cause),
            "error_rate": self.error_rate,
            "ci95": [lo, hi],
            "exponent_estimate": self.exponent_estimate.to_dict(),
            "realized_power_mean": self.realized_power_mean,
            "hard_checks": dict(self.hard_checks),
            "report": {k: _json_float(v) for k, v in self.report.items()},
        }


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "neg_inf"
    return x


def estimate_exponent(sr: SimResult, n: int | None = None) -> ExponentEstimate:
    """-ln(p_hat)/n with the error-probability CI mapped through the same transform.

    With no observed errors only a lower bound -ln(3/trials)/n is available
    and the estimate is marked censored.
    """
    if sr.trials <= 0:
        raise ValueError("no trials")
    n = sr.block_length if n is None else n
    k = sr.errors_total
    if k == 0:
        bound = max(-math.log(min(1.0, 3.0 / sr.trials)) / n, 0.0)
        return ExponentEstimate(ExponentValue.finite(bound), bound, math.inf, n, True)
    lo, hi = sr.ci95
    p_hat = k / sr.trials
    point = ExponentValue.finite(max(-math.log(p_hat) / n, 0.0))
    lower = max(-math.log(hi) / n, 0.0)
    upper = math.inf if lo == 0.0 else -math.log(lo) / n
    return ExponentEstimate(point, lower, upper, n, False)


def _run(kernel: Callable[[int, np.random.Generator], Tally], trials: int, rng: RngPlan) -> Tally:
    if trials < 1:
        raise ValueError("need at least one trial")
    sizes = [min(CHUNK_SIZE, trials - start) for start in range(0, trials, CHUNK_SIZE)]
    tasks = list(enumerate(sizes))
    job = partial(_run_chunk, kernel, rng)
    if rng.stream_count == 1 or len(tasks) == 1:
        parts = list(map(job, tasks))
    else:
        with ProcessPoolExecutor(max_workers=rng.stream_count) as pool:
            parts = list(pool.map(job, tasks))
    total = Tally()
    for part in parts:
        total = total.merge(part)
    return total


def _run_chunk(kernel, rng: RngPlan, task: tuple[int, int]) -> Tally:
    index, size = task
    return kernel(size, rng.chunk_rng(index))


# -- AWGN flash help -------------------------------------------------------------------------


@dataclass(frozen=True)
class AwgnFlashConfig:
    """With-help segment of the flash scheme: t noise samples, cube code of step Delta.

    ``amplitude`` bounds the per-coordinate codebook grid (default sqrt(P)).
    """

    awgn: AwgnParams
    design: FlashDesign
    t: int
    amplitude: float | None = None

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("segment length t must be >= 1")
        if self.amplitude is None:
            object.__setattr__(self, "amplitude", math.sqrt(self.awgn.power))
        if not self.step > 0:
            raise ValueError("quantizer step underflowed to zero")
        if self.amplitude < self.step / 2:
            raise ValueError("codebook amplitude must be at least half a quantizer step")

    @property
    def step(self) -> float:
        return self.design.step(self.awgn.sigma2)

    @property
    def levels(self) -> int:
        return math.floor(2.0 * self.amplitude / self.step) + 1

    @property
    def block_length(self) -> int:
        return max(round(self.t / self.design.tau), self.t)

    @property
    def sphere_radius2(self) -> float:
        return self.t * self.awgn.sigma2 * (1.0 + self.design.slack)


def quantize_to_centers(z: np.ndarray, step: float) -> np.ndarray:
    """Map each coordinate to the center (k + 1/2) step of its cell; residual in [-step/2, step/2)."""
    return (np.floor(z / step) + 0.5) * step


def _flash_chunk(cfg: AwgnFlashConfig, size: int, rng: np.random.Generator) -> Tally:
    t, step, levels = cfg.t, cfg.step, cfg.levels
    z = rng.standard_normal((size, t)) * math.sqrt(cfg.awgn.sigma2)
    msg = rng.integers(0, levels, size=(size, t))
    energy = np.einsum("ij,ij->i", z, z)
    if cfg.design.mode is awgn.HelperMode.VARIABLE:
        inside = np.ones(size, dtype=bool)
    else:
        inside = energy <= cfg.sphere_radius2
    z, msg = z[inside], msg[inside]

    q = quantize_to_centers(z, step)
    residual = np.abs(z - q).max() / step if z.size else 0.0
    offset = 0.5 * (levels - 1)
    codeword = (msg - offset) * step
    x = codeword - q
    y = x + z
    decoded = np.clip(np.floor(y / step + offset + 0.5), 0, levels - 1).astype(np.int64)
    decode_err = int(np.count_nonzero(np.any(decoded != msg, axis=1)))
    power = np.einsum("ij,ij->i", x, x) / t

    return Tally(
        trials=size,
        helper_failure=size - int(inside.sum()),
        decode_error=decode_err,
        power_sum=float(power.sum()),
        power_trials=int(inside.sum()),
        max_residual_steps=float(residual),
    )


def simulate_flash_awgn(cfg: AwgnFlashConfig, trials: int, rng: RngPlan) -> SimResult:
    """Flash-help segment over AWGN: quantize the noise, pre-subtract it, decode on the grid.

    Helper failures (noise outside the sphere) count as errors. Decode errors
    given a successful description are impossible and are checked as a hard
    invariant, as is the residual bound |z - q(z)| <= Delta/2.
    """
    tally = _run(partial(_flash_chunk, cfg), trials, rng)
    design, params = cfg.design, cfg.awgn
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", awgn.FlashRateWarning)
        sphere_rate = awgn.flash_rate(design.helper_rate, design.tau, design.slack, params.power, params.sigma2)
    power = tally.power_sum / tally.power_trials if tally.power_trials else None
    return SimResult(
        scheme="awgn-flash",
        trials=tally.trials,
        block_length=cfg.block_length,
        errors_by_cause={
            HELPER_FAILURE: tally.helper_failure,
            DECODE_ERROR: tally.decode_error,
            NONE: tally.trials - tally.helper_failure - tally.decode_error,
        },
        realized_power_mean=power,
        hard_checks={
            "conditional_decode_errors_zero": tally.decode_error == 0,
            "residual_within_half_step": tally.max_residual_steps <= 0.5 + 1e-12,
        },
        report={
            "step": cfg.step,
            "levels": float(cfg.levels),
            "cube_code_rate": cfg.t * math.log(cfg.levels) / cfg.block_length,
            "sphere_code_rate": sphere_rate,
            "max_residual_steps": tally.max_residual_steps,
            "power_reference": params.power + params.sigma2 * (1.0 + design.slack),
            "chernoff_bound": prob.chernoff_sphere_bound(cfg.t, design.slack),
        },
    )


# -- modulo-additive channel -----------------------------------------------------------------


def _draw_noise(p: prob.Pmf, shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p.probs)
    cdf[-1] = 1.0
    return np.searchsorted(cdf, rng.random(shape), side="right")


def _symbol_counts(z: np.ndarray, K: int) -> np.ndarray:
    return np.stack([np.count_nonzero(z == k, axis=1) for k in range(K)], axis=1)


def _fixed_chunk(mp: ModuloParams, theta: float, t: int, size: int, rng: np.random.Generator) -> Tally:
    K = mp.K
    z = _draw_noise(mp.noise, (size, t), rng)
    msg = rng.integers(0, K, size=(size, t))
    described = helper_set_member(prob.type_log_prob(_symbol_counts(z, K), mp.noise), t, theta)
    z_hat = np.where(described[:, None], z, 0)
    x = (msg - z_hat) % K
    y = (x + z) % K
    wrong = np.any(y != msg, axis=1)
    power = (x.astype(float) ** 2).mean(axis=1)
    return Tally(
        trials=size,
        helper_failure=int(np.count_nonzero(~described)),
        decode_error=int(np.count_nonzero(wrong & described)),
        power_sum=float(power.sum()),
        power_trials=size,
        power_bound_violations=int(np.count_nonzero(power > (K - 1) ** 2)),
    )


def simulate_modulo_fixed(mp: ModuloParams, theta: float, t: int, trials: int, rng: RngPlan,
                          n: int | None = None) -> SimResult:
    """Fixed-rate helper on the modulo channel.

    The helper describes z^t exactly iff P(z^t) >= e^{-t theta}; the encoder
    then cancels it mod K and the segment is error-free. Otherwise the helper
    fails and the trial is an error. ``n`` only sets the exponent normalization
    (default t).
    """
    if t < 1:
        raise ValueError("t must be >= 1")
    tally = _run(partial(_fixed_chunk, mp, theta, t), trials, rng)
    return SimResult(
        scheme="modulo-fixed",
        trials=tally.trials,
        block_length=t if n is None else n,
        errors_by_cause={
            HELPER_FAILURE: tally.helper_failure,
            DECODE_ERROR: tally.decode_error,
            NONE: tally.trials - tally.helper_failure - tally.decode_error,
        },
        realized_power_mean=tally.power_sum / tally.power_trials,
        hard_checks={
            "conditional_decode_errors_zero": tally.decode_error == 0,
            "power_within_constellation": tally.power_bound_violations == 0,
        },
        report={"theta": theta, "t": float(t)},
    )


def exact_error_modulo_fixed(mp: ModuloParams, theta: float, t: int, limit: int = prob.MAX_TYPES) -> float:
    """Exact Pr{P(z^t) < e^{-t theta}} by summing the mass of the excluded type classes."""
    counts = prob.type_array(mp.K, t, limit)
    log_p = prob.type_log_prob(counts, mp.noise)
    excluded = ~helper_set_member(log_p, t, theta) & np.isfinite(log_p)
    if not excluded.any():
        return 0.0
    log_mass = prob.log_multinomial_counts(counts[excluded]) + log_p[excluded]
    return float(min(1.0, np.exp(special.logsumexp(log_mass))))


def description_length(counts: np.ndarray, K: int, overhead: float = 1.0) -> np.ndarray:
    """Two-part code length t * H_emp(z^t) + c (K-1) ln(t+1), in nats."""
    counts = np.asarray(counts, dtype=float)
    t = counts.sum(axis=-1)
    freq = counts / t[..., None]
    emp_entropy = -special.xlogy(freq, freq).sum(axis=-1)
    return t * emp_entropy + overhead * (K - 1) * np.log(t + 1.0)


def overflows(length: np.ndarray, n: int, helper_rate: float) -> np.ndarray:
    return length >= n * helper_rate


def variable_segment_length(n: int, tau: float) -> int:
    t = round(n * tau)
    if t < 1:
        raise ValueError(f"n={n}, tau={tau} gives an empty with-help segment")
    return t


def _variable_chunk(mp: ModuloParams, helper_rate: float, n: int, t: int, overhead: float,
                    size: int, rng: np.random.Generator) -> Tally:
    z = _draw_noise(mp.noise, (size, t), rng)
    length = description_length(_symbol_counts(z, mp.K), mp.K, overhead)
    return Tally(trials=size, helper_failure=int(np.count_nonzero(overflows(length, n, helper_rate))))


def simulate_modulo_variable(mp: ModuloParams, helper_rate: float, tau: float, n: int, trials: int,
                             rng: RngPlan, overhead: float = 1.0) -> SimResult:
    """Variable-rate helper: the error event is a description longer than the n R_h buffer."""
    t = variable_segment_length(n, tau)
    tally = _run(partial(_variable_chunk, mp, helper_rate, n, t, overhead), trials, rng)
    checks = {}
    if zero_overflow_guaranteed(mp.K, helper_rate, tau, n, overhead):
        checks["zero_overflow_with_margin"] = tally.helper_failure == 0
    return SimResult(
        scheme="modulo-variable",
        trials=tally.trials,
        block_length=n,
        errors_by_cause={HELPER_FAILURE: tally.helper_failure, DECODE_ERROR: 0,
                         NONE: tally.trials - tally.helper_failure},
        realized_power_mean=None,
        hard_checks=checks,
        report={"t": float(t), "buffer": n * helper_rate,
                "length_bound": t * math.log(mp.K) + overhead * (mp.K - 1) * math.log(t + 1)},
    )


def exact_overflow_modulo(mp: ModuloParams, helper_rate: float, tau: float, n: int, overhead: float = 1.0,
                          limit: int = prob.MAX_TYPES) -> float:
    """Exact Pr{L(z^t) >= n R_h} over types, with the simulator's length formula."""
    t = variable_segment_length(n, tau)
    counts = prob.type_array(mp.K, t, limit)
    log_p = prob.type_log_prob(counts, mp.noise)
    hit = overflows(description_length(counts, mp.K, overhead), n, helper_rate) & np.isfinite(log_p)
    if not hit.any():
        return 0.0
    log_mass = prob.log_multinomial_counts(counts[hit]) + log_p[hit]
    return float(min(1.0, np.exp(special.logsumexp(log_mass))))


def zero_overflow_guaranteed(K: int, helper_rate: float, tau: float, n: int, overhead: float = 1.0) -> bool:
    """True when even the longest description fits strictly inside the buffer."""
    t = variable_segment_length(n, tau)
    return t * math.log(K) + overhead * (K - 1) * math.log(t + 1) < n * helper_rate
