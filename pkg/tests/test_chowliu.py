import itertools
import math

import numpy as np
import pytest

from wifiplaces.chowliu import (
    build_tree,
    estimate_stats,
    mutual_information,
    tree_joint,
)

import oracles


def test_stats_symmetric_counts():
    stats = estimate_stats([[1], [1], [0], [0]], alpha=0.0)
    assert stats.p1[0] == 0.5


def test_stats_perfect_correlation():
    stats = estimate_stats([[1, 1], [0, 0]], alpha=0.0)
    assert stats.p11(0, 1) == 0.5


def test_stats_smoothing_formulas():
    stats = estimate_stats([[1, 0], [1, 1], [0, 0]], alpha=0.5)
    assert stats.p1[0] == (2 + 0.5) / (3 + 1.0)
    assert stats.p11(0, 1) == (1 + 0.5) / (3 + 2.0)


def test_stats_independent_bernoulli_p11():
    rng = np.random.default_rng(77)
    bits = (rng.random((1000, 2)) < 0.3).astype(np.uint8)
    stats = estimate_stats(bits, alpha=0.5)
    # oracle: direct counting on the same sample
    c11 = sum(int(a & b) for a, b in bits)
    assert stats.p11(0, 1) == (c11 + 0.5) / (1000 + 2.0)
    assert abs(stats.p11(0, 1) - 0.09) < 0.03


def test_stats_reject_bad_input():
    with pytest.raises(ValueError):
        estimate_stats(np.empty((0, 3)))
    with pytest.raises(ValueError):
        estimate_stats([[0, 2]])
    with pytest.raises(ValueError):
        estimate_stats([[0, 1]], alpha=-1.0)


def test_stats_smoothed_probabilities_interior():
    bits = np.zeros((50, 6), dtype=np.uint8)
    bits[:, 2] = 1
    p1 = estimate_stats(bits, alpha=0.5).p1
    assert ((p1 > 0) & (p1 < 1)).all()


def test_mi_independent_is_zero():
    # all four combinations equally often: exact independence
    bits = np.array(list(itertools.product((0, 1), repeat=2)), dtype=np.uint8)
    stats = estimate_stats(bits, alpha=0.0)
    assert mutual_information(stats, 0, 1) == 0.0


def test_mi_correlated_fair_bits_ln2():
    stats = estimate_stats([[1, 1], [0, 0]], alpha=0.0)
    assert abs(mutual_information(stats, 0, 1) - math.log(2)) < 1e-12


def test_mi_hand_case():
    # p1q=0.6, p1v=0.5, p11=0.4: expected value frozen from the four-term sum
    bits = np.zeros((10, 2), dtype=np.uint8)
    bits[:6, 0] = 1
    bits[:4, 1] = 1
    bits[7, 1] = 1
    stats = estimate_stats(bits, alpha=0.0)
    assert stats.p1.tolist() == [0.6, 0.5]
    assert stats.p11(0, 1) == 0.4
    got = mutual_information(stats, 0, 1)
    assert abs(got - 0.08630462173553435) < 1e-14
    # independent oracle: explicit four-term sum
    expected = (
        0.4 * math.log(0.4 / 0.30)
        + 0.2 * math.log(0.2 / 0.30)
        + 0.1 * math.log(0.1 / 0.20)
        + 0.3 * math.log(0.3 / 0.20)
    )
    assert abs(got - expected) < 1e-14


def test_mi_symmetry_and_nonnegativity():
    rng = np.random.default_rng(8)
    bits = rng.integers(0, 2, size=(60, 6)).astype(np.uint8)
    stats = estimate_stats(bits, alpha=0.5)
    for q in range(6):
        for v in range(q + 1, 6):
            a = mutual_information(stats, q, v)
            b = mutual_information(stats, v, q)
            assert a == b
            assert a >= -1e-12
    with pytest.raises(ValueError):
        mutual_information(stats, 2, 2)


def _noisy_copy(rng, src, flip):
    out = src.copy()
    mask = rng.random(len(src)) < flip
    out[mask] ^= 1
    return out


def test_tree_structure_top_two_edges():
    rng = np.random.default_rng(13)
    z0 = rng.integers(0, 2, size=400).astype(np.uint8)
    bits = np.column_stack(
        [z0, _noisy_copy(rng, z0, 0.05), _noisy_copy(rng, z0, 0.3)]
    )
    stats = estimate_stats(bits, alpha=0.5)
    i01 = mutual_information(stats, 0, 1)
    i02 = mutual_information(stats, 0, 2)
    i12 = mutual_information(stats, 1, 2)
    assert i01 > i02 > i12  # construction precondition
    tree = build_tree(stats)
    edges = {
        (min(q, int(p)), max(q, int(p)))
        for q, p in enumerate(tree.parent)
        if p >= 0
    }
    assert edges == {(0, 1), (0, 2)}
    assert tree.roots.tolist() == [0]


def test_tree_weight_matches_bruteforce_battery():
    # oracle: enumerate all labeled spanning trees via Pruefer sequences
    rng = np.random.default_rng(99)
    for case in range(30):
        d = 4 if case % 2 == 0 else 5
        n = int(rng.integers(6, 40))
        bits = (rng.random((n, d)) < rng.uniform(0.15, 0.85, size=d)).astype(np.uint8)
        alpha = 0.5 if case % 3 else 1.0
        stats = estimate_stats(bits, alpha=alpha)
        tree = build_tree(stats)
        best = oracles.max_spanning_tree_weight(oracles.pairwise_mi(bits, alpha))
        assert tree.parent.tolist().count(-1) == 1  # smoothed graph is connected
        assert abs(tree.total_mi - best) <= 1e-12 * max(1.0, abs(best))


def test_independent_features_give_zero_weight_forest():
    bits = np.array(list(itertools.product((0, 1), repeat=4)), dtype=np.uint8)
    stats = estimate_stats(bits, alpha=0.0)
    tree = build_tree(stats)
    assert tree.total_mi == 0.0
    assert tree.roots.tolist() == [0, 1, 2, 3]  # no positive MI: all singletons
    for q in range(4):
        assert tree.cond[q].tolist() == [0.5, 0.5, 0.5, 0.5]


def test_conditional_rows_sum_to_one():
    rng = np.random.default_rng(41)
    bits = rng.integers(0, 2, size=(120, 9)).astype(np.uint8)
    tree = build_tree(estimate_stats(bits, alpha=0.5))
    rows = tree.cond.reshape(-1, 2, 2).sum(axis=2)
    assert np.abs(rows - 1.0).max() < 1e-12


def test_tree_joint_single_feature():
    stats = estimate_stats([[1]] * 7 + [[0]] * 3, alpha=0.0)
    tree = build_tree(stats)
    assert tree_joint(tree, [1]) == 0.7
    assert tree_joint(tree, [0]) == pytest.approx(0.3)


def test_tree_joint_normalizes():
    rng = np.random.default_rng(23)
    for d in (3, 8, 12):
        bits = rng.integers(0, 2, size=(40, d)).astype(np.uint8)
        tree = build_tree(estimate_stats(bits, alpha=0.5))
        total = sum(
            tree_joint(tree, z) for z in itertools.product((0, 1), repeat=d)
        )
        assert abs(total - 1.0) < 1e-9


def test_tree_joint_perfect_correlation():
    tree = build_tree(estimate_stats([[1, 1], [0, 0]], alpha=0.0))
    assert tree_joint(tree, [1, 1]) == 0.5
    assert tree_joint(tree, [1, 0]) == 0.0
    assert tree_joint(tree, [0, 0]) == 0.5


def test_tree_joint_length_checked():
    tree = build_tree(estimate_stats([[1, 0], [0, 1]], alpha=0.5))
    with pytest.raises(ValueError):
        tree_joint(tree, [1, 0, 1])


def _kl(p, q):
    total = 0.0
    for pi, qi in zip(p, q):
        if pi > 0:
            total += pi * math.log(pi / qi)
    return total


def test_learned_tree_beats_independence_kl():
    # ground truth: chain over 4 features with strong links
    rng = np.random.default_rng(6)
    n = 3000
    z0 = (rng.random(n) < 0.6).astype(np.uint8)
    z1 = np.where(rng.random(n) < 0.85, z0, 1 - z0).astype(np.uint8)
    z2 = np.where(rng.random(n) < 0.8, z1, 1 - z1).astype(np.uint8)
    z3 = np.where(rng.random(n) < 0.9, z2, 1 - z2).astype(np.uint8)
    bits = np.column_stack([z0, z1, z2, z3])

    def truth_prob(z):
        p = 0.6 if z[0] else 0.4
        for prev, cur, stay in ((0, 1, 0.85), (1, 2, 0.8), (2, 3, 0.9)):
            p *= stay if z[cur] == z[prev] else 1.0 - stay
        return p

    stats = estimate_stats(bits, alpha=0.5)
    tree = build_tree(stats)
    assignments = list(itertools.product((0, 1), repeat=4))
    truth = [truth_prob(z) for z in assignments]
    learned = [tree_joint(tree, z) for z in assignments]
    p1 = stats.p1
    indep = [
        math.prod(p1[i] if z[i] else 1 - p1[i] for i in range(4))
        for z in assignments
    ]
    assert _kl(truth, learned) <= _kl(truth, indep)
