import numpy as np
import pytest
from itertools import permutations

import survrank as sr


def random_tournament(n, rng):
    p = np.full((n, n), 0.5)
    iu = np.triu_indices(n, k=1)
    p[iu] = rng.random(iu[0].size)
    p.T[iu] = 1.0 - p[iu]
    return sr.tournament_from_probs(p)


def brute_force_min_cost(t):
    best = np.inf
    for order in permutations(range(t.n)):
        best = min(best, sr.ranking_cost(t, sr.Ranking.from_order(np.asarray(order))))
    return best


def dice_tournament():
    return sr.tournament_from_probs(sr.DiscreteJitterCycle().group_prob_matrix())


# --- construction and validation -------------------------------------------------


def test_gamma_gate_invariants():
    t = dice_tournament()
    g = t.gamma
    assert np.all(np.diagonal(g) == 0)
    assert np.all(g * g.T == 0)
    for i, j in ((0, 1), (1, 2), (2, 0)):
        assert g[i, j] == pytest.approx(1.0 / 9.0, abs=0.03)
        assert g[j, i] == 0.0


def test_indifferent_probabilities_give_zero_tournament():
    cohort = np.zeros((4, 2))
    t = sr.build_tournament(lambda a, b: 0.5, cohort)
    assert np.all(t.gamma == 0.0)
    for order in permutations(range(4)):
        assert sr.ranking_cost(t, sr.Ranking.from_order(np.asarray(order))) == 0.0


def test_build_from_exact_model_is_acyclic():
    model = sr.CoxPH(beta=np.asarray([1.0]))
    cohort = np.linspace(-1, 1, 4)[:, None]
    t = sr.build_tournament(model, cohort)
    assert sr.detect_preference_cycle(model.pairwise_prob_matrix(cohort)) is None
    consistent = sr.Ranking(perm=np.asarray([0, 1, 2, 3]))  # increasing score = increasing risk
    assert sr.ranking_cost(t, consistent) == 0.0


def test_tournament_validation():
    with pytest.raises(ValueError, match="square"):
        sr.Tournament(gamma=np.zeros((2, 3)))
    with pytest.raises(ValueError, match="diagonal"):
        sr.Tournament(gamma=np.eye(2))
    with pytest.raises(ValueError, match="one direction"):
        sr.Tournament(gamma=np.asarray([[0.0, 0.1], [0.1, 0.0]]))
    with pytest.raises(ValueError, match="0, 1"):
        sr.tournament_from_probs(np.asarray([[0.5, 1.2], [-0.2, 0.5]]))
    with pytest.raises(ValueError, match="p_ij"):
        sr.tournament_from_probs(np.asarray([[0.5, 0.7], [0.6, 0.5]]))


def test_ranking_validation_and_order():
    with pytest.raises(ValueError):
        sr.Ranking(perm=np.asarray([0, 0, 1]))
    r = sr.Ranking.from_order(np.asarray([2, 0, 1]))
    assert np.array_equal(r.perm, [1, 2, 0])
    assert np.array_equal(r.order(), [2, 0, 1])


def test_cycle_cost_floor_is_one_violated_edge():
    # every linear order on a 3-cycle violates at least one edge; the aligned
    # orders violate exactly one (weight 1/9), the reversed ones two
    t = dice_tournament()
    costs = sorted(
        sr.ranking_cost(t, sr.Ranking.from_order(np.asarray(order)))
        for order in permutations(range(3))
    )
    assert min(costs) == pytest.approx(1.0 / 9.0, abs=0.03)
    assert all(c >= 1.0 / 9.0 - 0.03 for c in costs)
    assert max(costs) == pytest.approx(2.0 / 9.0, abs=0.03)


# --- exact solver ------------------------------------------------------------------


def test_exact_matches_brute_force_random():
    for seed in range(25):
        n = 2 + seed % 7
        t = random_tournament(n, np.random.default_rng(seed))
        cost = sr.ranking_cost(t, sr.mwfas_exact(t))
        assert cost == pytest.approx(brute_force_min_cost(t), abs=1e-12)


def test_exact_transitive_returns_unique_zero_cost():
    model = sr.CoxPH(beta=np.asarray([1.0]))
    cohort = np.asarray([[0.3], [-0.8], [1.2], [0.0]])
    t = sr.build_tournament(model, cohort)
    r = sr.mwfas_exact(t)
    assert sr.ranking_cost(t, r) == 0.0
    # rank 0 = lowest risk = smallest linear predictor
    assert np.array_equal(r.order(), np.argsort(cohort[:, 0]))


def test_exact_size_guard():
    with pytest.raises(ValueError, match="greedy"):
        sr.mwfas_exact(sr.Tournament(gamma=np.zeros((21, 21))))


def test_exact_deterministic_tie_break():
    t = sr.Tournament(gamma=np.zeros((4, 4)))  # all orders optimal
    r = sr.mwfas_exact(t)
    assert np.array_equal(r.order(), [0, 1, 2, 3])


# --- heuristics ---------------------------------------------------------------------


def test_greedy_zero_cost_on_transitive():
    model = sr.CoxPH(beta=np.asarray([1.0]))
    cohort = np.linspace(-2, 2, 9)[:, None]
    t = sr.build_tournament(model, cohort)
    assert sr.ranking_cost(t, sr.mwfas_greedy(t)) == 0.0


def test_greedy_on_cycle_is_optimal():
    t = dice_tournament()
    assert sr.ranking_cost(t, sr.mwfas_greedy(t)) == pytest.approx(1.0 / 9.0, abs=0.03)


def test_local_search_keeps_optimum():
    t = random_tournament(7, np.random.default_rng(3))
    best = sr.mwfas_exact(t)
    refined = sr.mwfas_local_search(t, best)
    assert sr.ranking_cost(t, refined) == pytest.approx(sr.ranking_cost(t, best), abs=1e-12)


def test_local_search_fixes_reversed_transitive():
    model = sr.CoxPH(beta=np.asarray([1.0]))
    cohort = np.linspace(-2, 2, 10)[:, None]
    t = sr.build_tournament(model, cohort)
    backwards = np.argsort(-cohort[:, 0])  # riskiest first = fully reversed
    start = sr.Ranking.from_order(backwards)
    assert sr.ranking_cost(t, start) > 0
    out = sr.mwfas_local_search(t, start)
    assert sr.ranking_cost(t, out) == 0.0


def test_chain_greedy_local_exact_never_increases():
    for seed in range(30):
        t = random_tournament(9, np.random.default_rng(100 + seed))
        g = sr.mwfas_greedy(t)
        gl = sr.mwfas_local_search(t, g)
        exact = sr.mwfas_exact(t)
        cg = sr.ranking_cost(t, g)
        cgl = sr.ranking_cost(t, gl)
        ce = sr.ranking_cost(t, exact)
        assert ce <= cgl + 1e-12
        assert cgl <= cg + 1e-12


# --- consistency with exact model probabilities --------------------------------------


@pytest.mark.parametrize(
    "model",
    [
        sr.CoxPH(beta=np.asarray([1.0, -0.5])),
        sr.HeteroscedasticAFT(beta=np.asarray([0.8, 0.4])),
        sr.WeibullShape(beta=np.asarray([0.7, -0.7])),
    ],
    ids=["cox", "afth", "weibull"],
)
def test_exact_solver_recovers_optimal_order_from_true_probabilities(model):
    rng = np.random.default_rng(17)
    cohort = rng.standard_normal((12, 2))
    t = sr.build_tournament(model, cohort)
    r = sr.mwfas_exact(t)
    assert sr.ranking_cost(t, r) == 0.0
    scores = model.optimal_ordering_score(cohort)
    assert np.array_equal(r.order(), np.argsort(scores, kind="stable"))
    # concordance of the recovered ranking matches the optimal score exactly
    times = model.sample_times(cohort, rng)
    c_rank = sr.harrell_c(sr.scores_from_ranking(r), times).value
    c_opt = sr.harrell_c(scores, times).value
    assert c_rank == pytest.approx(c_opt, abs=1e-12)


def test_marginal_reweighting_flips_cycle_order_but_not_transitive():
    dice = sr.DiscreteJitterCycle()
    heavy_first = sr.one_hot([0, 0, 0, 0, 1, 2])
    heavy_last = sr.one_hot([0, 1, 2, 2, 2, 2])

    def block_order(cohort):
        t = sr.build_tournament(dice, cohort)
        order = sr.mwfas_exact(t).order()
        seen = []
        for item in order:
            g = int(np.argmax(cohort[item]))
            if g not in seen:
                seen.append(g)
        return seen

    assert block_order(heavy_first) == [2, 0, 1]
    assert block_order(heavy_last) == [1, 2, 0]

    cox = sr.CoxPH(beta=np.asarray([1.0, 0.5, -0.5]))
    pts = np.asarray([[0.4, 0.0, 0.0], [0.0, 0.6, 0.0], [0.0, 0.0, 0.9]])

    def cox_block_order(cohort_rows):
        cohort = np.asarray(cohort_rows)
        t = sr.build_tournament(cox, cohort)
        order = sr.mwfas_exact(t).order()
        labels = [int(np.argmax(np.all(cohort[i] == pts, axis=1))) for i in order]
        seen = []
        for g in labels:
            if g not in seen:
                seen.append(g)
        return seen

    few = cox_block_order([pts[0]] * 4 + [pts[1], pts[2]])
    many = cox_block_order([pts[0], pts[1]] + [pts[2]] * 4)
    assert few == many


# --- scores and serialization ----------------------------------------------------------


def test_scores_from_ranking_identity_and_reversal():
    r = sr.Ranking(perm=np.arange(5))
    assert np.array_equal(sr.scores_from_ranking(r), np.arange(5.0))
    rng = np.random.default_rng(19)
    times = rng.exponential(1.0, size=5)
    c = sr.harrell_c(sr.scores_from_ranking(r), times).value
    flipped = sr.Ranking(perm=4 - np.arange(5))
    assert sr.harrell_c(sr.scores_from_ranking(flipped), times).value == pytest.approx(1.0 - c)


def test_rank_scores_monotone_relabeling_keeps_uno():
    rng = np.random.default_rng(20)
    u = rng.exponential(1.0, size=30)
    ds = sr.Dataset(x=np.zeros((30, 1)), u=u, delta=np.ones(30, dtype=np.uint8))
    curve = sr.fit_km_censoring(ds)
    perm = rng.permutation(30)
    scores = sr.scores_from_ranking(sr.Ranking(perm=perm))
    base = sr.uno_c(scores, ds, curve).value
    assert sr.uno_c(np.exp(scores / 7.0), ds, curve).value == base


def test_tournament_csv_round_trip(tmp_path):
    from survrank.ranking import read_tournament_csv, write_tournament_csv

    t = random_tournament(6, np.random.default_rng(21))
    path = tmp_path / "t.csv"
    write_tournament_csv(t, path)
    back = read_tournament_csv(path)
    assert np.allclose(back.gamma, t.gamma, atol=1e-15)
