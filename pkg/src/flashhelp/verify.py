"""Self-check suites: closed forms and duals against brute force and Monte Carlo.

Each suite returns a :class:`SuiteReport` with the largest observed deviation,
expressed in units of its tolerance so that ``max_deviation <= 1`` means pass.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from . import modulo, prob, sim
from .awgn import AwgnParams, FlashDesign
from .modulo import ModuloParams
from .prob import Pmf

DUAL_TOL = 2e-3
COUNTING_C = 2.0
MC_LEVEL = 0.999


@dataclass(frozen=True)
class SuiteReport:
    name: str
    passed: bool
    max_deviation: float
    checks: int
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{self.name}: {status} max_deviation={self.max_deviation:.3g} checks={self.checks} time={self.seconds:.2f}s"
        return f"{text} ({self.detail})" if self.detail else text


# -- brute-force simplex search --------------------------------------------------------------
def _simplex(K: int, resolution: int) -> np.ndarray:
    if K == 2:
        q = np.linspace(0.0, 1.0, resolution + 1)
        return np.column_stack([1.0 - q, q])
    i, j = np.triu_indices(resolution + 1)
    # pairs (i, j - i) with i + (j - i) <= resolution
    pts = np.column_stack([i, j - i, resolution - j]).astype(float)
    return pts / resolution


def _face(a: np.ndarray, theta: float, resolution: int) -> np.ndarray:
    """Simplex points with -E_Q ln P = theta, swept along every coordinate."""
    K = a.size
    sweep = np.linspace(0.0, 1.0, 4 * resolution + 1)
    chunks = []
    for i in range(K):
        for j in range(K):
            k = 3 - i - j if K == 3 else None
            if i == j or (K == 3 and k in (i, j)):
                continue
            if K == 2:
                if a[i] == a[j]:
                    continue
                qi = np.array([(theta - a[j]) / (a[i] - a[j])])
                block = np.empty((1, 2))
                block[:, i], block[:, j] = qi, 1.0 - qi
            else:
                if a[j] == a[k]:
                    continue
                qj = (theta - a[i] * sweep - a[k] * (1.0 - sweep)) / (a[j] - a[k])
                block = np.empty((sweep.size, 3))
                block[:, i], block[:, j], block[:, k] = sweep, qj, 1.0 - sweep - qj
            chunks.append(block)
    if not chunks:
        return np.empty((0, K))
    pts = np.vstack(chunks)
    return pts[np.all(pts >= 0.0, axis=1)]


def _rows(Q: np.ndarray, p: np.ndarray):
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.where(Q > 0, Q * np.log(Q), 0.0).sum(axis=1)
        div = np.where(Q > 0, Q * np.log(Q / p), 0.0).sum(axis=1)
        cross = np.where(Q > 0, -Q * np.log(p), 0.0).sum(axis=1)
    return ent, div, cross


def brute_r_and_e(p: Pmf, theta_r: float, theta_e: float, resolution: int) -> tuple[float, float]:
    """Grid search for max{H : cross <= theta_r} and min{D : cross >= theta_e}."""
    probs = p.probs
    a = -np.log(probs)
    Q = np.vstack([_simplex(p.K, resolution), _face(a, theta_r, resolution), _face(a, theta_e, resolution)])
    ent, div, cross = _rows(Q, probs)
    r = ent[cross <= theta_r + 1e-12]
    e = div[cross >= theta_e - 1e-12]
    return (float(r.max()) if r.size else -math.inf), (float(e.min()) if e.size else math.inf)


# -- suites ----------------------------------------------------------------------------------
def _timed(name: str, body: Callable[[], tuple[float, int, str]]) -> SuiteReport:
    start = time.perf_counter()
    dev, checks, detail = body()
    return SuiteReport(name, dev <= 1.0, dev, checks, time.perf_counter() - start, detail)


def dual_vs_grid(quick: bool = False, tol_scale: float = 1.0, seed: int = 0) -> SuiteReport:
    count, res3 = (12, 150) if quick else (50, 200)
    tol = DUAL_TOL * tol_scale

    def body():
        rng = np.random.default_rng(seed)
        worst = 0.0
        for i in range(count):
            K = 2 + i % 2
            x = np.maximum(rng.dirichlet(np.ones(K)), 0.02)
            p = Pmf(x / x.sum())
            lo, hi = modulo.theta_bounds(p)
            theta_r = rng.uniform(lo, hi)
            theta_e = rng.uniform(prob.shannon_entropy(p), float(np.max(-np.log(p.probs))))
            r_grid, e_grid = brute_r_and_e(p, theta_r, theta_e, 100000 if K == 2 else res3)
            worst = max(worst,
                        abs(modulo.r_of_theta(p, theta_r) - r_grid),
                        abs(modulo.helper_failure_exponent(p, theta_e).value - e_grid))
        return _ratio(worst, tol), 2 * count, f"abs error {worst:.2e}, tolerance {tol:.1e}"

    return _timed("dual-vs-grid", body)


def counting_law(quick: bool = False, tol_scale: float = 1.0) -> SuiteReport:
    p = Pmf([0.9, 0.1])
    theta = 1.0
    ts = range(8, 15) if quick else range(8, 21)
    c = COUNTING_C * tol_scale

    def body():
        exact_dev = abs(modulo.helper_set_log_size(p, 12, theta) - math.log(794))
        r = modulo.r_of_theta(p, theta)
        worst = max(abs(modulo.helper_set_log_size(p, t, theta) / t - r) * t / math.log(t) for t in ts)
        dev = max(_ratio(worst, c), _ratio(exact_dev, 1e-12 * tol_scale))
        return dev, len(ts) + 1, f"max |gap| t/ln t = {worst:.3f} vs C={c:g}; ln 794 error {exact_dev:.1e}"

    return _timed("counting-law", body)


def _binomial_deviation(k: int, trials: int, p: float, tol_scale: float) -> float:
    lo, hi = stats.binom.interval(MC_LEVEL, trials, p)
    mean = trials * p
    half = max(hi - mean, mean - lo, 1.0) * tol_scale
    return abs(k - mean) / half if half > 0 else math.inf


def mc_vs_exact(quick: bool = False, tol_scale: float = 1.0, seed: int = 1) -> SuiteReport:
    trials = 20000 if quick else 200000

    def body():
        mp = ModuloParams(Pmf([0.9, 0.1]))
        fixed = sim.simulate_modulo_fixed(mp, 1.0, 12, trials, sim.RngPlan(seed))
        exact_fixed = sim.exact_error_modulo_fixed(mp, 1.0, 12)
        var = sim.simulate_modulo_variable(mp, 0.2, 0.4, 100, trials, sim.RngPlan(seed + 1))
        exact_var = sim.exact_overflow_modulo(mp, 0.2, 0.4, 100)
        devs = [
            _binomial_deviation(fixed.errors_total, trials, exact_fixed, tol_scale),
            _binomial_deviation(var.errors_total, trials, exact_var, tol_scale),
        ]
        if not (fixed.all_checks_passed and var.all_checks_passed):
            devs.append(math.inf)
        return max(devs), 2, f"{MC_LEVEL:.1%} binomial intervals, {trials} trials"

    return _timed("mc-vs-exact", body)


def sphere_tail(quick: bool = False, tol_scale: float = 1.0, seed: int = 2) -> SuiteReport:
    trials = 20000 if quick else 200000

    def body():
        worst = 0.0
        for t in (50, 100, 200):
            for s in (0.5, 1.0, 2.0):
                worst = max(worst, prob.gaussian_sphere_tail(t, s) / prob.chernoff_sphere_bound(t, s))
        cfg = sim.AwgnFlashConfig(AwgnParams(1.0), FlashDesign(0.5, 0.1, 0.5), 50)
        res = sim.simulate_flash_awgn(cfg, trials, sim.RngPlan(seed))
        mc = _binomial_deviation(res.errors_by_cause[sim.HELPER_FAILURE], trials,
                                 prob.gaussian_sphere_tail(50, 0.5), tol_scale)
        dev = max(_ratio(worst, tol_scale), mc, 0.0 if res.all_checks_passed else math.inf)
        return dev, 10, f"max tail/Chernoff = {worst:.3g}"

    return _timed("sphere-tail", body)


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "dual-vs-grid": dual_vs_grid,
    "counting-law": counting_law,
    "mc-vs-exact": mc_vs_exact,
    "sphere-tail": sphere_tail,
}


def run_all(quick: bool = False, tamper: str | None = None) -> list[SuiteReport]:
    """Every suite once, in a fixed order. ``tamper`` shrinks one suite's tolerance to force a failure."""
    if tamper is not None and tamper not in SUITES:
        raise KeyError(tamper)
    return [fn(quick=quick, tol_scale=1e-9 if name == tamper else 1.0) for name, fn in SUITES.items()]


def _ratio(value: float, tol: float) -> float:
    if value == 0.0:
        return 0.0
    return value / tol if tol > 0 else math.inf
