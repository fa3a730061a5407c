"""Reductions composing the template into the full estimator.

The stack, in order: find a characteristic cost w_bar by sampling a cost
ladder and binary-searching it with approximate matching-size probes;
drop every edge above w_bar; round the survivors to integers in [1, C];
pad both sides with dummy vertices so a size-beta matching becomes an
(almost) perfect matching; run the template; undo the padding offset and
the rounding scale.  A budgeted max-matching search (grid over target
sizes with the estimator as a monotone certificate) sits on top.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from types import SimpleNamespace

import numpy as np

from .core import (
    UNMATCHED, BipartiteInstance, CostOracle, MatchingOracle,
    ThresholdedCostView, as_seed_sequence, seed_label,
)
from .mcm import Backend, ThresholdView
from .template import TemplateParams, run_template

__all__ = [
    "ReductionConfig", "CharacteristicCost", "find_characteristic_cost",
    "RoundedCost", "round_costs", "PaddedInstance", "pad_dummies",
    "PipelineResult", "estimate_min_weight_matching", "max_matching_under_budget",
    "DEFAULT_T", "DEFAULT_K",
]

#: practical-mode defaults when the caller does not pin (T, k); chosen so
#: the usable dual range T covers the rounded cost levels C = T - 1 with a
#: resolution fine enough for desk-scale accuracy at tolerable runtime
DEFAULT_T = 42
DEFAULT_K = 7


@dataclass(frozen=True)
class ReductionConfig:
    """Target window [alpha, beta] and the reduction slack gamma.

    The reduction lemmas need their internal slack strictly below
    (beta - alpha) / 4; ``gamma_effective`` derives a compliant value from
    the requested gamma, so callers may pass a coarser gamma (the knapsack
    and acceptance parameterizations do) without violating the range
    invariants.
    """

    alpha: float
    beta: float
    gamma: float
    xi_pad: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha < self.beta <= 1.0:
            raise ValueError("need 0 <= alpha < beta <= 1")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must be in (0, 1)")
        if self.xi_pad is not None and not 0.0 < self.xi_pad <= (self.beta - self.alpha) / 2:
            raise ValueError("xi_pad must be in (0, (beta - alpha) / 2]")

    @property
    def gamma_effective(self) -> float:
        return min(self.gamma, (self.beta - self.alpha) / 5.0)

    @property
    def padding_slack(self) -> float:
        if self.xi_pad is not None:
            return self.xi_pad
        # beta = 1, alpha = 1 - gamma is the EMD case: gamma/2 with margin
        return min(self.gamma / 2.0, (self.beta - self.alpha) / 2.0)


# ---------------------------------------------------------------------------
# Characteristic cost
# ---------------------------------------------------------------------------

@dataclass
class CharacteristicCost:
    w_bar: float
    ladder: np.ndarray = field(repr=False)
    probes: int = 0


def find_characteristic_cost(instance: BipartiteInstance, config: ReductionConfig,
                             backend: Backend, seed=0) -> CharacteristicCost:
    """Sample a cost ladder and binary-search the matching-size threshold.

    Returns the largest sampled cost w_i whose gamma*w_i threshold graph
    still has approximate matching size below (beta - 2*gamma) * n, or the
    smallest ladder value when none qualifies.
    """
    n = instance.n
    g = config.gamma_effective
    rng = np.random.default_rng(seed)
    s = max(1, math.ceil(n * math.log(max(n, 2)) / g))
    is_ = rng.integers(0, n, size=s)
    js = rng.integers(0, n, size=s)
    ladder = np.sort(instance.cost.pairs(is_, js))
    bar = (config.beta - 2.0 * g) * n
    probes = 0

    def sparse(idx: int) -> bool:
        nonlocal probes
        probes += 1
        view = ThresholdView(instance.cost, g * float(ladder[idx]))
        size, _ = backend.approx_match(view, g)
        return size < bar

    lo, hi = 0, s - 1
    if not sparse(lo):
        return CharacteristicCost(float(ladder[0]), ladder, probes)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if sparse(mid):
            lo = mid
        else:
            hi = mid - 1
    return CharacteristicCost(float(ladder[lo]), ladder, probes)


# ---------------------------------------------------------------------------
# Rounding
# ---------------------------------------------------------------------------

class RoundedCost(CostOracle):
    """Lazy integer rounding c_bar = ceil(2 c / (gamma^2 w)) + 1.

    Finite inputs above w are clamped to w and counted (the composed
    pipeline thresholds first, so none occur there); +inf passes through
    as a non-edge.  The scale-back factor gamma^2 w / 2 satisfies
    c <= (gamma^2 w / 2) * c_bar <= c + gamma^2 w edge by edge.
    """

    def __init__(self, base: CostOracle, gamma: float, w: float):
        super().__init__(base.n)
        self.base = base
        self.gamma = float(gamma)
        self.w = float(w)
        if self.w <= 0:
            raise ValueError("w must be positive")
        self.C = math.ceil(2.0 / gamma ** 2) + 2
        self.scale_back = gamma ** 2 * w / 2.0
        self.clamped = 0

    @property
    def counter(self):
        return self.base.counter

    def _round(self, vals):
        finite = np.isfinite(vals)
        over = finite & (vals > self.w)
        if over.any():
            self.clamped += int(over.sum())
            vals = np.where(over, self.w, vals)
        return np.where(finite, np.ceil(2.0 * vals / (self.gamma ** 2 * self.w)) + 1.0,
                        np.inf)

    def _block(self, rows, cols, counted):
        return self._round(self.base._block(rows, cols, counted))

    def _pairs(self, is_, js, counted):
        return self._round(self.base._pairs(is_, js, counted))


def round_costs(cost: CostOracle, gamma: float, w: float) -> RoundedCost:
    return RoundedCost(cost, gamma, w)


# ---------------------------------------------------------------------------
# Dummy padding
# ---------------------------------------------------------------------------

class _PaddedCost(CostOracle):
    """Dummy-real edges cost 1; dummy-dummy pairs are non-edges (+inf)."""

    def __init__(self, base: CostOracle, n_real: int, n_padded: int):
        super().__init__(n_padded)
        self.base = base
        self.n_real = n_real

    @property
    def counter(self):
        return self.base.counter

    def _block(self, rows, cols, counted):
        out = np.empty((len(rows), len(cols)), dtype=np.float64)
        r_real = rows < self.n_real
        c_real = cols < self.n_real
        out[np.ix_(r_real, ~c_real)] = 1.0
        out[np.ix_(~r_real, c_real)] = 1.0
        out[np.ix_(~r_real, ~c_real)] = np.inf
        if r_real.any() and c_real.any():
            out[np.ix_(r_real, c_real)] = self.base._block(
                rows[r_real], cols[c_real], counted)
        return out

    def _pairs(self, is_, js, counted):
        r_real = is_ < self.n_real
        c_real = js < self.n_real
        out = np.where(r_real ^ c_real, 1.0, np.inf)
        both = r_real & c_real
        if both.any():
            out[both] = self.base._pairs(is_[both], js[both], counted)
        return out


class FilteredMatching(MatchingOracle):
    """Unpadded view of a padded matching: any pair touching a dummy is dropped."""

    time_class = "lazy-overlay"
    cache_mates = True

    def __init__(self, base: MatchingOracle, n_real: int):
        super().__init__(n_real)
        self.base = base
        self.n_real = n_real

    def _mates_impl(self, us):
        out = self.base.mates(us)
        out = np.where((us >> 1) >= self.n_real, UNMATCHED, out)
        return np.where((out >> 1) >= self.n_real, UNMATCHED, out)


@dataclass
class PaddedInstance:
    instance: BipartiteInstance
    n_real: int
    dummies: int
    offset: float  # template-unit estimate correction

    def unpad_estimate(self, c_hat: float) -> float:
        return c_hat - self.offset

    def unpad_matching(self, matching: MatchingOracle) -> FilteredMatching:
        return FilteredMatching(matching, self.n_real)


def pad_dummies(instance: BipartiteInstance, beta: float, xi_pad: float) -> PaddedInstance:
    """Add (1 - beta + xi_pad) * n dummies per side (at least one).

    The estimate offset (2 - 2 beta + xi_pad) * n is expressed through the
    realized integer dummy count d as 2 d - xi_pad * n, so rounding d up
    never desynchronizes the correction.
    """
    if xi_pad <= 0:
        raise ValueError("xi_pad must be positive")
    n = instance.n
    d = max(1, math.ceil((1.0 - beta + xi_pad) * n))
    n_padded = n + d
    padded = BipartiteInstance(n_padded, _PaddedCost(instance.cost, n, n_padded))
    offset = 2.0 * d - xi_pad * n
    return PaddedInstance(padded, n, d, offset)


# ---------------------------------------------------------------------------
# The composed estimator
# ---------------------------------------------------------------------------

@dataclass
class PipelineResult:
    estimate: float
    matching: MatchingOracle
    report: dict
    stages: SimpleNamespace = field(repr=False, default=None)


def _matched_fraction(matching: MatchingOracle, n: int, rng) -> float:
    if n <= 2048:
        return matching.size() / n
    probes = rng.integers(0, n, size=256)
    from .core import v0
    return float(np.mean(matching.mates(v0(probes)) != UNMATCHED))


def estimate_min_weight_matching(instance: BipartiteInstance, config: ReductionConfig,
                                 backend: Backend, seed=0,
                                 T: int | None = None, k: int | None = None,
                                 parameter_mode: str = "practical",
                                 collect_trace: bool = False) -> PipelineResult:
    """Estimate the min cost of a size-beta*n matching down to size-alpha*n.

    Practical mode (the default) couples the rounding resolution to the
    iteration budget: with T template iterations the potentials span T
    levels, so costs are rounded to C = T - 1 integer values (the rounding
    gamma is back-derived from C).  Paper mode uses the paper formulas for
    every constant; those are astronomically large except for tiny gamma-C
    combinations, so it exists for inspection and micro-instances.
    """
    n = instance.n
    g = config.gamma_effective
    seq = as_seed_sequence(seed)
    seeds = seq.spawn(4)
    timings: dict[str, float] = {}
    t0 = time.perf_counter()

    if n < 1.0 / g:
        return _degenerate_estimate(instance, config, seed, timings, t0)

    characteristic = find_characteristic_cost(instance, config, backend, seeds[0])
    timings["characteristic"] = time.perf_counter() - t0
    w_bar = max(characteristic.w_bar, 1e-300)  # all-zero ladders stay usable

    t1 = time.perf_counter()
    thresholded = ThresholdedCostView(instance.cost, w_bar)
    if parameter_mode == "paper":
        rounding_gamma = g
        rounded = round_costs(thresholded, rounding_gamma, w_bar)
        tparams = TemplateParams.paper(g, rounded.C)
        if tparams.T * n * n > 10 ** 9:
            raise ValueError(
                f"paper-mode constants (T={tparams.T}, k={tparams.k}) are not "
                f"runnable at n={n}; use practical mode")
    else:
        T = DEFAULT_T if T is None else T
        k = DEFAULT_K if k is None else k
        if T < 4:
            raise ValueError("practical mode needs T >= 4")
        rounding_gamma = math.sqrt(2.0 / (T - 3))  # so C = ceil(2/g^2)+2 = T-1
        rounded = round_costs(thresholded, rounding_gamma, w_bar)
        tparams = TemplateParams.practical(g, rounded.C, T, k)
    padded = pad_dummies(BipartiteInstance(n, rounded), config.beta,
                         config.padding_slack)
    timings["reductions"] = time.perf_counter() - t1

    t2 = time.perf_counter()
    tres = run_template(padded.instance, tparams, backend,
                        seed=seeds[1], collect_trace=collect_trace)
    timings["template"] = time.perf_counter() - t2

    estimate = padded.unpad_estimate(tres.estimate) * rounded.scale_back
    matching = padded.unpad_matching(tres.matching)
    rng = np.random.default_rng(seeds[2])
    frac = _matched_fraction(matching, n, rng)
    report = {
        "alpha": config.alpha,
        "beta": config.beta,
        "gamma": config.gamma,
        "gamma_effective": g,
        "w_bar": w_bar,
        "C": rounded.C,
        "T": tparams.T,
        "k": tparams.k,
        "estimate": estimate,
        "matched_fraction": frac,
        "total_queries": instance.query_count,
        "backend": backend.variant,
        "seed": seed_label(seed),
        "stage_timings": timings,
        "degenerate": False,
    }
    stages = SimpleNamespace(
        characteristic=characteristic, rounded=rounded, padded=padded,
        template=tres, template_params=tparams, config=config)
    return PipelineResult(estimate, matching, report, stages)


def _degenerate_estimate(instance, config, seed, timings, t0):
    """n below 1/gamma: answer with the exact baseline directly."""
    from .baseline import exact_min_weight_k_matching
    from .core import ArrayMatching
    n = instance.n
    k_target = max(int(math.floor(config.beta * n)), 0)
    dense = instance.cost.dense()
    res = exact_min_weight_k_matching(dense, k_target)
    matching = ArrayMatching.from_pairs(n, res.witness)
    timings["baseline"] = time.perf_counter() - t0
    report = {
        "alpha": config.alpha, "beta": config.beta, "gamma": config.gamma,
        "gamma_effective": config.gamma_effective,
        "w_bar": None, "C": None, "T": 0, "k": 0,
        "estimate": res.value, "matched_fraction": k_target / n,
        "total_queries": instance.query_count, "backend": "baseline",
        "seed": seed_label(seed), "stage_timings": timings, "degenerate": True,
    }
    return PipelineResult(res.value, matching, report,
                          SimpleNamespace(baseline=res))


# ---------------------------------------------------------------------------
# Knapsack matching
# ---------------------------------------------------------------------------

def max_matching_under_budget(instance: BipartiteInstance, B: float, gamma: float,
                              backend: Backend, seed=0,
                              T: int | None = None, k: int | None = None) -> float:
    """Estimate the max size of a matching of total cost <= B, within gamma*n.

    Grid-search over target fractions xi in {0, gamma/4, gamma/2, ..., 1}:
    an estimator run at (alpha, beta) = (xi - gamma/4, xi) returning
    c_hat <= B certifies a size-(xi - gamma/4) n matching within budget,
    while c_hat > B certifies that no size-xi n matching fits.  The
    certificates are monotone in xi, so a binary search over the grid
    suffices; per-grid-point seeds depend only on the grid index, which
    makes the search monotone in B for a fixed master seed.
    """
    if B < 0:
        raise ValueError("budget must be nonnegative")
    n = instance.n
    step = gamma / 4.0
    m = int(math.floor(1.0 / step))
    grid = [i * step for i in range(m + 1)]
    if grid[-1] < 1.0:
        grid.append(1.0)
    seq = as_seed_sequence(seed)
    sub = seq.spawn(len(grid))

    def fits(idx: int) -> bool:
        xi = min(grid[idx], 1.0)  # guard float accumulation at the top point
        if xi <= 0.0:
            return True  # the empty matching always fits
        alpha = max(xi - step, 0.0)
        if alpha >= xi:
            return True
        config = ReductionConfig(alpha, xi, gamma)
        res = estimate_min_weight_matching(instance, config, backend,
                                           seed=sub[idx], T=T, k=k)
        return res.estimate <= B

    lo, hi = 0, len(grid) - 1
    if fits(hi):
        return grid[hi] * n
    while lo < hi - 1:
        mid = (lo + hi) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid
    return grid[lo] * n
