"""Expected-utility trade selection for event-contract portfolios.

A trader holds cash ``y`` plus an ``n x m`` matrix ``Z`` of contract
positions (rows are candidates, columns are jurisdictions; exactly one
candidate pays out per jurisdiction).  Given prices ``Q`` and beliefs over
joint outcomes, the trader picks a trade matrix ``X`` maximizing expected
CRRA utility of terminal wealth, subject to staying solvent in the worst
outcome.  The objective is concave, so the solver is cyclic coordinate
ascent with each scalar subproblem handled by safeguarded bisection on the
derivative.

``binary_log_closed_form`` is the hand-derived optimum for the one-event
log-utility case and serves as an independent check on the numeric path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

JOINT_ENUMERATION_CAP = 2 ** 20  # largest outcome space we will enumerate

_SOLVENCY_SLACK = 1e-9  # dollars of tolerance on worst-case wealth checks


class DecisionError(ValueError):
    pass


class ConvergenceError(DecisionError):
    """Raised when the trade optimizer fails to converge.

    Carries the sweep count and last coordinate update size for diagnosis.
    """

    def __init__(self, sweeps: int, last_delta: float):
        self.sweeps = sweeps
        self.last_delta = last_delta
        super().__init__(
            f"optimizer did not converge after {sweeps} sweeps "
            f"(last max coordinate update {last_delta:.3e})"
        )


@dataclass(frozen=True)
class UtilitySpec:
    """Constant-relative-risk-aversion preferences; rho=1 is log utility."""

    rho: float = 1.0

    def __post_init__(self):
        if self.rho < 0:
            raise DecisionError(f"risk aversion must be >= 0, got {self.rho}")


def crra(w: float, spec: UtilitySpec) -> float:
    """CRRA utility of terminal wealth: w**(1-rho)/(1-rho), log w at rho=1."""
    rho = spec.rho
    if rho >= 1:
        if w <= 0:
            raise DecisionError(f"wealth {w} outside utility domain for rho={rho}")
    elif w < 0:
        raise DecisionError(f"wealth {w} must be nonnegative for rho={rho}")
    if rho == 1:
        return math.log(w)
    return w ** (1.0 - rho) / (1.0 - rho)


def crra_prime(w: float, spec: UtilitySpec) -> float:
    """Marginal utility w**(-rho); +inf at zero wealth."""
    if w <= 0:
        return math.inf
    if spec.rho == 1:
        return 1.0 / w
    return w ** (-spec.rho)


@dataclass(frozen=True)
class OutcomeMatrix:
    """One joint realization: the winning candidate index per jurisdiction."""

    n: int
    winners: tuple[int, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DecisionError("need at least one candidate")
        for w in self.winners:
            if not 0 <= w < self.n:
                raise DecisionError(f"winner index {w} outside [0, {self.n})")

    @property
    def m(self) -> int:
        return len(self.winners)

    @classmethod
    def from_matrix(cls, s) -> "OutcomeMatrix":
        """Build from an n x m 0/1 matrix whose columns are one-hot."""
        arr = np.asarray(s)
        if arr.ndim != 2:
            raise DecisionError("outcome matrix must be 2-dimensional")
        if not np.all((arr == 0) | (arr == 1)):
            raise DecisionError("outcome matrix entries must be 0 or 1")
        if not np.all(arr.sum(axis=0) == 1):
            raise DecisionError("each jurisdiction must have exactly one winner")
        return cls(arr.shape[0], tuple(int(i) for i in arr.argmax(axis=0)))

    def matrix(self) -> np.ndarray:
        s = np.zeros((self.n, self.m), dtype=int)
        for j, w in enumerate(self.winners):
            s[w, j] = 1
        return s


@dataclass(frozen=True)
class JointBeliefs:
    """Explicit probability for each outcome; probabilities must sum to 1."""

    n: int
    m: int
    outcomes: dict[tuple[int, ...], float]

    def __post_init__(self):
        if not self.outcomes:
            raise DecisionError("joint beliefs need at least one outcome")
        total = 0.0
        for winners, p in self.outcomes.items():
            if len(winners) != self.m:
                raise DecisionError(f"outcome {winners} has wrong jurisdiction count")
            if any(not 0 <= w < self.n for w in winners):
                raise DecisionError(f"outcome {winners} has invalid winner index")
            if p < 0:
                raise DecisionError(f"negative probability {p}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise DecisionError(f"joint probabilities sum to {total}, expected 1")

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.outcomes)
        winners = np.array(keys, dtype=int).reshape(len(keys), self.m)
        probs = np.array([self.outcomes[k] for k in keys])
        return winners, probs


@dataclass(frozen=True)
class IndependentMarginals:
    """Per-jurisdiction probability vectors, treated as independent."""

    marginals: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        if not self.marginals:
            raise DecisionError("need at least one jurisdiction")
        n = len(self.marginals[0])
        for pj in self.marginals:
            if len(pj) != n:
                raise DecisionError("all jurisdictions must list the same candidate count")
            if any(p < 0 for p in pj):
                raise DecisionError("negative marginal probability")
            if abs(sum(pj) - 1.0) > 1e-9:
                raise DecisionError(f"marginal sums to {sum(pj)}, expected 1")

    @property
    def n(self) -> int:
        return len(self.marginals[0])

    @property
    def m(self) -> int:
        return len(self.marginals)

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Expand the product distribution over all outcome combinations."""
        size = self.n ** self.m
        if size > JOINT_ENUMERATION_CAP:
            raise DecisionError(
                f"outcome space {self.n}^{self.m} exceeds the enumeration cap; "
                "partition cash per jurisdiction instead"
            )
        winners = np.array(
            np.meshgrid(*[range(self.n)] * self.m, indexing="ij")
        ).reshape(self.m, size).T
        probs = np.ones(size)
        for j in range(self.m):
            pj = np.asarray(self.marginals[j])
            probs *= pj[winners[:, j]]
        return winners, probs


Beliefs = Union[JointBeliefs, IndependentMarginals]


@dataclass(frozen=True)
class PriceBoard:
    """Contract prices q[i, j] in [0, 1]; NaN marks an unlisted contract."""

    q: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "q", arr)
        if arr.ndim != 2:
            raise DecisionError("price board must be 2-dimensional")
        listed = arr[~np.isnan(arr)]
        if np.any(listed < 0) or np.any(listed > 1):
            raise DecisionError("prices must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def m(self) -> int:
        return self.q.shape[1]


@dataclass(frozen=True)
class Portfolio:
    """Cash plus contract holdings; negative holdings are short positions."""

    y: float
    z: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.z, dtype=float)
        object.__setattr__(self, "z", arr)
        if arr.ndim != 2:
            raise DecisionError("holdings must be an n x m matrix")
        worst = self.y + float(arr.min(axis=0).sum())
        if worst < -_SOLVENCY_SLACK:
            raise DecisionError(f"portfolio is insolvent in the worst case ({worst:.6g})")

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def m(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True)
class TradePlan:
    """Contracts to buy (positive) or sell (negative) per candidate/market."""

    x: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "x", arr)
        if arr.ndim != 2:
            raise DecisionError("trades must be an n x m matrix")

    @classmethod
    def zero(cls, n: int, m: int) -> "TradePlan":
        return cls(np.zeros((n, m)))


def terminal_wealth(portfolio: Portfolio, outcome: OutcomeMatrix) -> float:
    """Cash plus the $1 payout of each winning contract held."""
    if outcome.n != portfolio.n or outcome.m != portfolio.m:
        raise DecisionError("outcome and portfolio shapes differ")
    payout = sum(portfolio.z[w, j] for j, w in enumerate(outcome.winners))
    return portfolio.y + float(payout)


def _tradable_mask(prices: PriceBoard) -> np.ndarray:
    return ~np.isnan(prices.q)


def _check_plan_prices(plan: TradePlan, prices: PriceBoard):
    untraded = np.isnan(prices.q) & (plan.x != 0)
    if np.any(untraded):
        raise DecisionError("plan trades a contract with no listed price")


def _post_trade_wealths(portfolio: Portfolio, plan: TradePlan, prices: PriceBoard,
                        winners: np.ndarray) -> np.ndarray:
    """Terminal wealth per outcome row of ``winners`` after executing the plan."""
    q = np.nan_to_num(prices.q)
    cost = float((q * plan.x).sum())
    holdings = portfolio.z + plan.x
    # winners: K x m winner indices; pick the paying row per column
    payouts = holdings[winners, np.arange(winners.shape[1])].sum(axis=1)
    return portfolio.y - cost + payouts


def worst_case(portfolio: Portfolio, plan: TradePlan, prices: PriceBoard) -> float:
    """Minimum terminal wealth over every possible joint outcome.

    The minimum separates across jurisdictions, so it is the cash left after
    paying for the plan plus the worst row of each post-trade column.
    """
    _check_plan_prices(plan, prices)
    q = np.nan_to_num(prices.q)
    cost = float((q * plan.x).sum())
    holdings = portfolio.z + plan.x
    return portfolio.y - cost + float(holdings.min(axis=0).sum())


def expected_utility(portfolio: Portfolio, plan: TradePlan, prices: PriceBoard,
                     beliefs: Beliefs, spec: UtilitySpec) -> float:
    """Expected CRRA utility of terminal wealth after executing the plan."""
    _check_plan_prices(plan, prices)
    if worst_case(portfolio, plan, prices) < -_SOLVENCY_SLACK:
        raise DecisionError("plan violates the worst-case solvency constraint")
    winners, probs = beliefs.support()
    wealth = _post_trade_wealths(portfolio, plan, prices, winners)
    total = 0.0
    for p, w in zip(probs, wealth):
        if p == 0.0:
            continue
        total += p * crra(max(w, 0.0) if spec.rho < 1 else w, spec)
    return total


def expected_utility_gradient(portfolio: Portfolio, plan: TradePlan, prices: PriceBoard,
                              beliefs: Beliefs, spec: UtilitySpec) -> np.ndarray:
    """d E[u] / d x[i, j]; NaN-priced contracts get gradient 0."""
    _check_plan_prices(plan, prices)
    winners, probs = beliefs.support()
    wealth = _post_trade_wealths(portfolio, plan, prices, winners)
    with np.errstate(over="ignore", divide="ignore"):
        mu = np.where(wealth > 0, wealth ** (-spec.rho), np.inf)
    grad = np.zeros((portfolio.n, portfolio.m))
    mask = _tradable_mask(prices)
    for j in range(portfolio.m):
        ind = np.zeros((winners.shape[0], portfolio.n))
        ind[np.arange(winners.shape[0]), winners[:, j]] = 1.0
        for i in range(portfolio.n):
            if not mask[i, j]:
                continue
            slope = ind[:, i] - prices.q[i, j]
            grad[i, j] = float((probs * mu * slope).sum())
    return grad


def _bisect_root(g, lo: float, hi: float, xtol: float) -> float:
    """Root of a decreasing function g on [lo, hi]; clips at the endpoints.

    g(lo) <= 0 returns lo, g(hi) >= 0 returns hi (boundary optimum of the
    underlying concave objective).
    """
    if lo >= hi:
        return 0.5 * (lo + hi)
    a, b = lo, hi
    ga = g(a)
    if ga <= 0:
        return a
    gb = g(b)
    if gb >= 0:
        return b
    for _ in range(200):
        mid = 0.5 * (a + b)
        if b - a <= xtol:
            break
        gm = g(mid)
        if gm > 0:
            a = mid
        elif gm < 0:
            b = mid
        else:
            return mid
    return 0.5 * (a + b)


def single_bin_demand(y: float, z: Sequence[float], beliefs: Sequence[float],
                      bin_index: int, price: float, spec: UtilitySpec) -> float:
    """Optimal number of contracts to trade in one bin at a hypothetical price.

    Positive means buy, negative means sell.  Wealth if bin ``i`` wins is
    ``y + z_i + x - price * x``; if bin ``j`` wins it is ``y + z_j - price * x``.
    The result is clipped so that no outcome leaves wealth negative.
    """
    if not 0.0 < price < 1.0:
        raise DecisionError(f"price {price} must be strictly inside (0, 1)")
    n = len(beliefs)
    if len(z) != n:
        raise DecisionError("holdings and beliefs must have the same length")
    if not 0 <= bin_index < n:
        raise DecisionError(f"bin index {bin_index} out of range")
    if abs(sum(beliefs) - 1.0) > 1e-9:
        raise DecisionError("beliefs must sum to 1")

    if n < 2:
        raise DecisionError("need at least two bins for a meaningful market")
    i = bin_index
    others = [z[j] for j in range(n) if j != i]
    lo = -(y + z[i]) / (1.0 - price)
    hi = (y + min(others)) / price
    if lo > hi:
        raise DecisionError("no solvent trade exists for this portfolio")

    p_i = beliefs[i]
    rest = [(beliefs[j], z[j]) for j in range(n) if j != i]

    def g(x: float) -> float:
        w_i = y + z[i] + x * (1.0 - price)
        total = p_i * crra_prime(w_i, spec) * (1.0 - price) if p_i > 0 else 0.0
        for p_j, z_j in rest:
            if p_j == 0:
                continue
            total -= p_j * crra_prime(y + z_j - price * x, spec) * price
        return total

    # with a level portfolio the zero-demand price is exactly the belief;
    # return an exact zero there so no-information baselines stay at rest
    if price == p_i and all(zj == z[i] for zj in z):
        return 0.0
    if lo <= 0.0 <= hi and g(0.0) == 0.0:
        return 0.0

    span = hi - lo
    eps = 1e-13 * max(1.0, abs(lo), abs(hi))
    xtol = 1e-12 * max(1.0, abs(lo), abs(hi))
    return _bisect_root(g, lo + eps, hi - eps, xtol)


def binary_log_closed_form(p: float, q: float, y: float, z: float = 0.0) -> float:
    """Analytic optimal trade for one binary event under log utility.

    Solves ``p (1-q) / W1 = (1-p) q / W0`` where ``W1 = y + z + x (1-q)``
    and ``W0 = y - q x``, giving

        x* = (p (1-q) y - (1-p) q (y+z)) / (q (1-q))

    clipped to the solvent interval.  Serves as the independent oracle for
    the numeric optimizer.
    """
    if not 0.0 < q < 1.0:
        raise DecisionError(f"price {q} must be strictly inside (0, 1)")
    if not 0.0 <= p <= 1.0:
        raise DecisionError(f"belief {p} outside [0, 1]")
    lo = -(y + z) / (1.0 - q)
    hi = y / q
    if lo > hi:
        raise DecisionError("no solvent trade exists for this portfolio")
    x = (p * (1.0 - q) * y - (1.0 - p) * q * (y + z)) / (q * (1.0 - q))
    return min(max(x, lo), hi)


def _check_no_arbitrage(prices: PriceBoard):
    """Reject price boards with a Dutch book; no finite optimum exists there.

    Selling one contract of every listed bin in a jurisdiction collects the
    price sum and pays at most a dollar, so a sum above 1 is riskless
    profit.  When every bin is listed, a sum below 1 is the mirror-image
    buy-side arbitrage.  Either way expected utility is unbounded.
    """
    q = prices.q
    for j in range(prices.m):
        col = q[:, j]
        listed = col[~np.isnan(col)]
        if listed.size == 0:
            continue
        total = float(listed.sum())
        if total > 1.0 + 1e-9:
            raise DecisionError(
                f"jurisdiction {j}: listed prices sum to {total:.6g} > 1 "
                "(sell-side arbitrage, unbounded objective)"
            )
        if listed.size == prices.n and total < 1.0 - 1e-9:
            raise DecisionError(
                f"jurisdiction {j}: prices sum to {total:.6g} < 1 with every bin "
                "listed (buy-side arbitrage, unbounded objective)"
            )


def optimal_trades(portfolio: Portfolio, prices: PriceBoard, beliefs: Beliefs,
                   spec: UtilitySpec, max_sweeps: int = 500) -> TradePlan:
    """Maximize expected utility over trade matrices, subject to solvency.

    Cyclic coordinate ascent: each pass revisits every listed contract and
    solves the scalar concave subproblem by bisection on the derivative.
    Stops when the largest coordinate update falls below 1e-10 * (1 + |y|).
    """
    if prices.n != portfolio.n or prices.m != portfolio.m:
        raise DecisionError("price board and portfolio shapes differ")
    listed = list(zip(*np.nonzero(_tradable_mask(prices))))
    for i, j in listed:
        if not 0.0 < prices.q[i, j] < 1.0:
            raise DecisionError(
                f"listed price q[{i},{j}]={prices.q[i, j]} must be strictly inside (0, 1)"
            )
    _check_no_arbitrage(prices)
    winners, probs = beliefs.support()
    if winners.shape[1] != portfolio.m:
        raise DecisionError("beliefs and portfolio disagree on jurisdiction count")

    n, m = portfolio.n, portfolio.m
    x = np.zeros((n, m))
    holdings = portfolio.z.copy()
    cost = 0.0
    wealth = _post_trade_wealths(portfolio, TradePlan(x), prices, winners)
    if portfolio.y + float(portfolio.z.min(axis=0).sum()) < -_SOLVENCY_SLACK:
        raise DecisionError("starting portfolio is insolvent")

    # indicator of "candidate i wins jurisdiction j" per support outcome
    col_winner = [winners[:, j] for j in range(m)]
    tol = 1e-10 * (1.0 + abs(portfolio.y))
    # numpy overhead dominates on tiny outcome spaces; use plain floats there
    small = probs.size <= 32
    support = [(float(p), k) for k, p in enumerate(probs) if p > 0]
    support_mask = probs > 0
    rho = spec.rho

    last_delta = math.inf
    for sweep in range(max_sweeps):
        max_delta = 0.0
        for i, j in listed:
            q = float(prices.q[i, j])
            x0 = float(x[i, j])
            ind = (col_winner[j] == i).astype(float)
            slope = ind - q

            colmin_rest = sum(
                float(holdings[:, jj].min()) for jj in range(m) if jj != j
            )
            others_min = float(np.delete(holdings[:, j], i).min()) if n > 1 else math.inf
            rest = portfolio.y - (cost - q * x0) + colmin_rest
            z_ij = float(holdings[i, j]) - x0  # original holding in this contract
            lo = -(rest + z_ij) / (1.0 - q)
            hi = (rest + others_min) / q if n > 1 else rest / q
            if lo > hi:
                continue

            if small:
                terms = [(p, float(wealth[k]), float(slope[k])) for p, k in support]

                def g(cand: float) -> float:
                    total = 0.0
                    for p, w0, s in terms:
                        w = w0 + (cand - x0) * s
                        if w <= 0:
                            return math.inf if s > 0 else -math.inf
                        total += p * s * (1.0 / w if rho == 1 else w ** -rho)
                    return total
            else:
                def g(cand: float) -> float:
                    w = wealth + (cand - x0) * slope
                    with np.errstate(over="ignore", divide="ignore"):
                        mu = np.where(w > 0, w ** -rho, np.inf)
                    bad = np.isinf(mu) & support_mask
                    if bad.any():
                        signs = slope[bad]
                        if np.any(signs > 0) and np.any(signs < 0):
                            return 0.0
                        return math.inf if signs.sum() > 0 else -math.inf
                    return float((probs * mu * slope)[support_mask].sum())

            span_scale = max(1.0, abs(lo), abs(hi))
            new = _bisect_root(g, lo + 1e-13 * span_scale, hi - 1e-13 * span_scale,
                               1e-12 * span_scale)
            if not math.isfinite(new):
                raise ConvergenceError(sweep, math.inf)
            delta = new - x0
            if delta != 0.0:
                wealth = wealth + delta * slope
                holdings[i, j] += delta
                cost += q * delta
                x[i, j] = new
                max_delta = max(max_delta, abs(delta))
        last_delta = max_delta
        if max_delta < tol:
            plan = TradePlan(x)
            if worst_case(portfolio, plan, prices) < -_SOLVENCY_SLACK:
                raise DecisionError("optimizer produced an insolvent plan")
            return plan
    raise ConvergenceError(max_sweeps, last_delta)
