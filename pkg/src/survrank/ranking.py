"""Tournament construction and minimum-weight feedback arc set ranking.

A tournament over a cohort carries gamma[i, j] = |2 h_ij - 1| when the
estimated win probability h_ij = P(T_i > T_j) exceeds 1/2, else 0; at most one
direction of each pair is weighted. A ranking assigns rank 0 to the lowest
risk (statistically longest-lived) item, and its cost is the total weight of
pairs ordered against the majority direction:

    cost(sigma) = sum_{i, j} gamma[j, i] * 1(sigma(i) < sigma(j)).

Minimizing the cost over permutations is the (NP-hard) minimum-weight feedback
arc set problem. ``mwfas_exact`` solves it by subset dynamic programming for
n <= 20; ``mwfas_greedy`` places the largest net-outgoing-weight item first
and ``mwfas_local_search`` refines by single-item relocation. All solvers are
deterministic: ties resolve toward the smallest item index placed first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimators import PairwiseModel
from .models import SurvivalModel

__all__ = [
    "Tournament",
    "Ranking",
    "build_tournament",
    "tournament_from_probs",
    "ranking_cost",
    "mwfas_exact",
    "mwfas_greedy",
    "mwfas_local_search",
    "scores_from_ranking",
    "write_tournament_csv",
    "read_tournament_csv",
]

EXACT_MAX_N = 20


@dataclass(frozen=True)
class Tournament:
    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("gamma must be a square matrix")
        if not np.all(np.isfinite(g)):
            raise ValueError("gamma must be finite")
        if np.any(g < 0):
            raise ValueError("gamma must be non-negative")
        if np.any(np.diagonal(g) != 0):
            raise ValueError("gamma must have a zero diagonal")
        if np.any((g > 0) & (g.T > 0)):
            raise ValueError("at most one direction of each pair may carry weight")
        object.__setattr__(self, "gamma", g)

    @property
    def n(self) -> int:
        return self.gamma.shape[0]


@dataclass(frozen=True)
class Ranking:
    """perm[i] = rank of item i; rank 0 is the lowest risk."""

    perm: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=int)
        if p.ndim != 1 or not np.array_equal(np.sort(p), np.arange(p.size)):
            raise ValueError("perm must be a permutation of 0..n-1")
        object.__setattr__(self, "perm", p)

    @property
    def n(self) -> int:
        return self.perm.size

    def order(self) -> np.ndarray:
        """Item indices from rank 0 upward."""
        return np.argsort(self.perm, kind="stable")

    @classmethod
    def from_order(cls, order) -> "Ranking":
        order = np.asarray(order, dtype=int)
        perm = np.empty_like(order)
        perm[order] = np.arange(order.size)
        return cls(perm=perm)


def tournament_from_probs(pmat) -> Tournament:
    """Gate a win-probability matrix into feedback-arc weights.

    gamma[i, j] = |2 p_ij - 1| when p_ij > 1/2 else 0. Probabilities must lie
    in [0, 1]; the lower triangle is mirrored from the upper one (p_ji =
    1 - p_ij) so the one-direction invariant holds exactly.
    """
    p = np.asarray(pmat, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        raise ValueError("probability matrix must be square")
    if np.any(p < 0.0) or np.any(p > 1.0) or not np.all(np.isfinite(p)):
        raise ValueError("win probabilities must lie in [0, 1]")
    if not np.allclose(p + p.T, 1.0, atol=1e-6):
        raise ValueError("win probabilities must satisfy p_ij + p_ji = 1")
    n = p.shape[0]
    iu = np.triu_indices(n, k=1)
    upper = p[iu]
    gamma = np.zeros_like(p)
    gamma[iu] = np.where(upper > 0.5, 2.0 * upper - 1.0, 0.0)
    lower = 1.0 - upper
    gamma.T[iu] = np.where(lower > 0.5, 2.0 * lower - 1.0, 0.0)
    return Tournament(gamma=gamma)


def build_tournament(predictor, cohort) -> Tournament:
    """Tournament over a cohort from a pairwise predictor.

    ``predictor`` may be a fitted PairwiseModel, a survival model (exact win
    probabilities), or a callable h(x, x') -> probability. Only the upper
    triangle is evaluated; the mirror probability is 1 - h.
    """
    cohort = np.atleast_2d(np.asarray(cohort, dtype=float))
    n = cohort.shape[0]
    if n < 2:
        raise ValueError("a tournament needs at least two cohort members")
    if isinstance(predictor, PairwiseModel):
        pmat = predictor.prob_matrix(cohort)
    elif isinstance(predictor, SurvivalModel):
        pmat = predictor.pairwise_prob_matrix(cohort)
    elif callable(predictor):
        pmat = np.full((n, n), 0.5)
        for i in range(n):
            for j in range(i + 1, n):
                pmat[i, j] = float(predictor(cohort[i], cohort[j]))
                pmat[j, i] = 1.0 - pmat[i, j]
    else:
        raise TypeError("predictor must be a PairwiseModel, SurvivalModel, or callable")
    iu = np.triu_indices(n, k=1)
    pmat = np.asarray(pmat, dtype=float)
    pmat[np.diag_indices(n)] = 0.5
    pmat.T[iu] = 1.0 - pmat[iu]
    return tournament_from_probs(pmat)


def ranking_cost(t: Tournament, r: Ranking) -> float:
    """Total weight of pairs ranked against the majority direction."""
    if r.n != t.n:
        raise ValueError("ranking and tournament sizes differ")
    order = r.order()
    g = t.gamma[np.ix_(order, order)]
    # order[a] before order[b] for a < b: violated edges point later -> earlier
    return float(np.triu(g.T, k=1).sum())


def _placement_costs(gamma: np.ndarray, members: np.ndarray) -> np.ndarray:
    """Cost of placing each member first among ``members``: sum of incoming weights."""
    sub = gamma[np.ix_(members, members)]
    return sub.sum(axis=0)


def mwfas_exact(t: Tournament) -> Ranking:
    """Globally optimal ranking by dynamic programming over subsets (n <= 20).

    e[S] = min cost of the sub-tournament on S when S occupies the last |S|
    ranks; placing v first among S costs the weight into v from S. Memory and
    time are O(2^n * n); ties reconstruct to the smallest item index first.
    """
    n = t.n
    if n > EXACT_MAX_N:
        raise ValueError(
            f"exact search is limited to n <= {EXACT_MAX_N}; use the greedy or "
            "local-search solvers for larger cohorts"
        )
    if n == 0:
        return Ranking(perm=np.asarray([], dtype=int))
    gamma = t.gamma
    size = 1 << n
    # incoming[S, v] = total weight from members of S into v; built in chunks
    # to keep the bit matrix small for n near the limit
    incoming = np.empty((size, n))
    chunk = 1 << 16
    for lo in range(0, size, chunk):
        hi = min(lo + chunk, size)
        bits = ((np.arange(lo, hi)[:, None] >> np.arange(n)[None, :]) & 1).astype(float)
        incoming[lo:hi] = bits @ gamma
    e = np.full(size, np.inf)
    e[0] = 0.0
    for mask in range(1, size):
        best = np.inf
        m = mask
        while m:
            low = m & (-m)
            v = low.bit_length() - 1
            cand = incoming[mask, v] + e[mask ^ low]
            if cand < best:
                best = cand
            m ^= low
        e[mask] = best

    order = []
    mask = size - 1
    while mask:
        m = mask
        chosen = None
        while m:
            low = m & (-m)
            v = low.bit_length() - 1
            if incoming[mask, v] + e[mask ^ low] <= e[mask] + 1e-12:
                chosen = (v, low)
                break  # lowest set bit first => smallest index wins ties
            m ^= low
        v, low = chosen
        order.append(v)
        mask ^= low
    return Ranking.from_order(np.asarray(order))


def mwfas_greedy(t: Tournament) -> Ranking:
    """Net-weight greedy: repeatedly place the strongest remaining item next.

    The item with the largest outgoing-minus-incoming weight among the
    remaining sub-tournament takes the next (lowest available) rank; ties go
    to the smallest index. Zero cost on transitive tournaments.
    """
    n = t.n
    if n < 2:
        raise ValueError("need at least two items")
    gamma = t.gamma
    net = gamma.sum(axis=1) - gamma.sum(axis=0)
    alive = np.ones(n, dtype=bool)
    order = np.empty(n, dtype=int)
    for pos in range(n):
        masked = np.where(alive, net, -np.inf)
        v = int(np.argmax(masked))  # argmax returns the first (smallest) index on ties
        order[pos] = v
        alive[v] = False
        net += gamma[v, :] - gamma[:, v]
    return Ranking.from_order(order)


def mwfas_local_search(t: Tournament, start: Ranking, max_passes: int = 100) -> Ranking:
    """Best single-item relocation, swept until no move improves the cost.

    Each sweep visits items in index order and applies that item's best
    strictly improving relocation; the cost is monotone non-increasing and
    never exceeds the start cost. A sweep is O(n^2) with vectorized deltas.
    """
    if start.n != t.n:
        raise ValueError("ranking and tournament sizes differ")
    n = t.n
    gamma = t.gamma
    order = start.order().copy()
    pos_of = np.empty(n, dtype=int)
    pos_of[order] = np.arange(n)
    for _ in range(max_passes):
        improved = False
        for item in range(n):
            pos = pos_of[item]
            # net change per adjacent transposition with the item at each position
            row = gamma[item, order] - gamma[order, item]
            csum = np.cumsum(row)
            base_left = csum[pos - 1] if pos > 0 else 0.0
            deltas = np.empty(n)
            deltas[pos] = 0.0
            if pos + 1 < n:
                # move right, landing just after position q
                deltas[pos + 1 :] = csum[pos + 1 :] - csum[pos]
            if pos > 0:
                # move left, landing just before position q
                left = csum[: pos - 1] if pos > 1 else np.asarray([])
                deltas[1:pos] = left - base_left
                deltas[0] = -base_left
            q = int(np.argmin(deltas))
            if deltas[q] < -1e-15:
                v = order[pos]
                if q > pos:
                    order[pos:q] = order[pos + 1 : q + 1]
                else:
                    order[q + 1 : pos + 1] = order[q:pos]
                order[q] = v
                lo, hi = (pos, q) if pos < q else (q, pos)
                pos_of[order[lo : hi + 1]] = np.arange(lo, hi + 1)
                improved = True
        if not improved:
            break
    return Ranking.from_order(order)


def scores_from_ranking(r: Ranking) -> np.ndarray:
    """Risk scores equal to ranks; any strictly increasing relabeling is equivalent."""
    return r.perm.astype(float)


def write_tournament_csv(t: Tournament, path) -> None:
    np.savetxt(path, t.gamma, delimiter=",", fmt="%.17g")


def read_tournament_csv(path) -> Tournament:
    gamma = np.loadtxt(path, delimiter=",", ndmin=2)
    return Tournament(gamma=gamma)
