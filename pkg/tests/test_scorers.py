import numpy as np
import pytest

from matrix_conformal import (
    FilledMatrix,
    ObservedMatrix,
    ScorerConfig,
    ScorerKind,
    dissimilarity_matrix,
    kernel_weight,
    ns_scores_over_grid,
    ns_weights,
    score_all,
    score_ns,
    score_svd,
    select_bandwidth,
    svd_scores_over_grid,
    usvt_estimate,
)
from matrix_conformal._stats import lower_quantile, rank_threshold
from matrix_conformal.scorers import ns_scores_from_weights


def sym(rng, order, scale=1.0):
    z = rng.uniform(-scale, scale, (order, order))
    return (z + z.T) / 2


def filled(rng, order, scale=1.0, bound=None):
    m = sym(rng, order, scale)
    return FilledMatrix(m, bound if bound is not None else scale * 2)


# ---------------------------------------------------------------------------
# thresholded-SVD estimator


def eig_reconstruction_oracle(matrix, threshold):
    """Full-spectrum eigendecomposition; keep components with |eigenvalue| > t."""
    w, q = np.linalg.eigh(matrix)
    out = np.zeros_like(matrix)
    for k in range(len(w)):
        if abs(w[k]) > threshold:
            out += w[k] * np.outer(q[:, k], q[:, k])
    return out


def test_usvt_zero_matrix():
    f = FilledMatrix(np.zeros((5, 5)), 1.0)
    assert np.array_equal(usvt_estimate(f, 0.5), np.zeros((5, 5)))


def test_usvt_rank_one_retained():
    v = np.array([1.0, 2.0, 1.0, -2.0])  # norm^2 = 10
    m = np.outer(v, v)
    f = FilledMatrix(m, 20.0)
    est = usvt_estimate(f, 1.0)
    assert np.abs(est - m).max() < 1e-10


def test_usvt_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(20)
    for _ in range(20):
        f = filled(rng, 6)
        t = rng.uniform(0, 2)
        est = usvt_estimate(f, t)
        oracle = eig_reconstruction_oracle(f.entries, t)
        assert np.abs(est - oracle).max() < 1e-10


def test_usvt_clip():
    v = np.ones(4)
    f = FilledMatrix(np.outer(v, v), 10.0)
    est = usvt_estimate(f, 0.5, clip=0.25)
    assert np.abs(est).max() <= 0.25


def test_usvt_permutation_equivariant():
    rng = np.random.default_rng(21)
    for _ in range(20):
        f = filled(rng, 7)
        t = rng.uniform(0, 2)
        perm = rng.permutation(7)
        permuted = FilledMatrix(f.entries[np.ix_(perm, perm)], f.bound)
        left = usvt_estimate(permuted, t)
        right = usvt_estimate(f, t)[np.ix_(perm, perm)]
        assert np.abs(left - right).max() < 1e-8


def test_score_svd_zero_threshold_reconstructs_exactly():
    rng = np.random.default_rng(22)
    f = filled(rng, 6)
    config = ScorerConfig(kind=ScorerKind.SVD, svd_threshold_scale=0.0)
    for j in range(f.n):
        assert score_svd(f, j, config) < 1e-8


def test_score_svd_constant_matrix_killed_by_large_threshold():
    c = 0.75
    order = 6
    f = FilledMatrix(np.full((order, order), c), 2.0)
    # top singular value is c * order; exceed it so the estimate is zero
    config = ScorerConfig(
        kind=ScorerKind.SVD, svd_threshold_scale=c * order + 1.0,
        svd_threshold_exponent=0.5, clip_estimates=False,
    )
    # scale * order^0.5 > c * order by construction
    for j in range(f.n):
        assert score_svd(f, j, config) == pytest.approx(c, abs=1e-12)


def test_score_svd_matches_oracle_residual():
    rng = np.random.default_rng(23)
    f = filled(rng, 8)
    config = ScorerConfig(kind=ScorerKind.SVD, clip_estimates=False)
    t = config.svd_threshold(8)
    oracle = eig_reconstruction_oracle(f.entries, t)
    n = f.n
    for j in range(n):
        expected = abs(f.entries[n, j] - oracle[n, j])
        assert score_svd(f, j, config) == pytest.approx(expected, abs=1e-10)


def test_svd_grid_path_matches_pointwise_scores():
    rng = np.random.default_rng(24)
    order = 8
    a = sym(rng, order)
    mask = np.zeros((order, order), bool)
    mask[0, 3] = mask[3, 0] = True
    obs = ObservedMatrix.from_dense(a, mask, bound=2.0)
    guess = sym(rng, order)
    config = ScorerConfig(kind=ScorerKind.SVD)
    zs = np.linspace(-2.0, 2.0, 9)
    batch = svd_scores_over_grid(obs, guess, zs, config)
    for g, z in enumerate(zs):
        pointwise = score_all(obs, guess, z, config)
        assert np.abs(batch[g] - pointwise).max() < 1e-10


# ---------------------------------------------------------------------------
# column dissimilarity and kernel weights


def dissimilarity_oracle(core, j, jp):
    """Triple loop over excluded columns with inner products spelled out."""
    n = core.shape[0]
    total = 0.0
    for ell in range(n):
        if ell in (j, jp):
            continue
        inner = 0.0
        for a in range(n):
            inner += (core[a, j] - core[a, jp]) * core[a, ell]
        total += abs(inner)
    return total / (n * (n - 2))


def test_kernel_weight_identical_columns():
    rng = np.random.default_rng(25)
    core = sym(rng, 5)
    core[:, 2] = core[:, 4]
    core[2, :] = core[:, 2]
    core[4, :] = core[:, 4]
    # force exact duplicate columns (symmetry is irrelevant to the kernel)
    core = rng.uniform(-1, 1, (5, 5))
    core[:, 4] = core[:, 2]
    assert kernel_weight(core, 2, 4, h=0.7) == 1.0


def test_kernel_weight_zero_outside_support():
    rng = np.random.default_rng(26)
    core = rng.uniform(-1, 1, (5, 5))
    d = dissimilarity_oracle(core, 0, 1)
    assert kernel_weight(core, 0, 1, h=d * 0.99) == 0.0
    assert kernel_weight(core, 0, 1, h=d * 2.0) == pytest.approx(0.5, abs=1e-9)


def test_dissimilarity_matches_triple_loop_oracle():
    rng = np.random.default_rng(27)
    for _ in range(10):
        core = rng.uniform(-1, 1, (5, 5))
        d = dissimilarity_matrix(core)
        for j in range(5):
            assert d[j, j] == 0.0
            for jp in range(5):
                if j != jp:
                    assert d[j, jp] == pytest.approx(
                        dissimilarity_oracle(core, j, jp), abs=1e-12
                    )


def test_kernel_weight_rejects_bad_args():
    core = np.zeros((4, 4))
    with pytest.raises(ValueError):
        kernel_weight(core, 1, 1, 0.5)
    with pytest.raises(ValueError):
        kernel_weight(np.zeros((2, 2)), 0, 1, 0.5)
    with pytest.raises(ValueError):
        kernel_weight(core, 0, 1, 0.0)


# ---------------------------------------------------------------------------
# bandwidth selection


def test_select_bandwidth_constant_dissimilarities():
    # the rule is the lower-q quantile of the dissimilarity sample, so a
    # constant sample yields that constant for every q
    for q in (0.1, 0.5, 1.0):
        assert lower_quantile(np.full(7, 0.42), q) == 0.42
    # scaled-identity columns have zero dissimilarity everywhere: the
    # selected bandwidth falls back to the positive floor
    core = np.eye(4) * 2.0
    d = dissimilarity_matrix(core)
    assert np.abs(d).max() == 0.0
    for q in (0.1, 0.5, 1.0):
        assert select_bandwidth(core, 0, q) == 1e-12


def test_select_bandwidth_q1_is_max():
    rng = np.random.default_rng(28)
    core = rng.uniform(-1, 1, (6, 6))
    d = dissimilarity_matrix(core)
    row = np.delete(d[2], 2)
    assert select_bandwidth(core, 2, 1.0) == pytest.approx(row.max())


def test_select_bandwidth_matches_sort_oracle():
    rng = np.random.default_rng(29)
    core = rng.uniform(-1, 1, (6, 6))
    d = dissimilarity_matrix(core)
    q = 0.5
    for j in range(6):
        row = sorted(np.delete(d[j], j))
        k = int(np.ceil(q * len(row)))
        assert select_bandwidth(core, j, q) == pytest.approx(row[k - 1])


# ---------------------------------------------------------------------------
# neighborhood-smoothing score


def ns_score_oracle(entries, j, bandwidths):
    """Direct double-loop evaluation of the smoothing score."""
    order = entries.shape[0]
    n = order - 1
    core = entries[:n, :n]
    total = 0.0
    for jp in range(n):
        if jp == j:
            continue
        w = kernel_weight(core, j, jp, bandwidths[j])
        total += w * abs(entries[n, j] - entries[n, jp])
    return total


def test_score_ns_constant_row_is_zero():
    rng = np.random.default_rng(30)
    order = 7
    m = sym(rng, order)
    m[order - 1, :] = 0.4
    m[:, order - 1] = 0.4
    f = FilledMatrix(m, 2.0)
    h = np.full(order - 1, 0.5)
    for j in range(order - 1):
        assert score_ns(f, j, h) == 0.0


def test_score_ns_tiny_bandwidth_empty_neighborhood():
    rng = np.random.default_rng(31)
    f = filled(rng, 7)
    h = np.full(6, 1e-9)
    for j in range(6):
        assert score_ns(f, j, h) == 0.0


def test_score_ns_matches_double_loop_oracle():
    rng = np.random.default_rng(32)
    for _ in range(10):
        f = filled(rng, 7)
        h = rng.uniform(0.05, 0.6, 6)
        for j in range(6):
            assert score_ns(f, j, h) == pytest.approx(
                ns_score_oracle(f.entries, j, h), abs=1e-12
            )


def test_ns_grid_cache_matches_naive_recompute():
    rng = np.random.default_rng(33)
    order = 9
    n = order - 1
    a = sym(rng, order)
    mask = np.zeros((order, order), bool)
    for i, j in [(0, 2), (1, 5), (3, 7)]:
        mask[i, j] = mask[j, i] = True
    obs = ObservedMatrix.from_dense(a, mask, bound=2.0)
    guess = sym(rng, order)
    config = ScorerConfig(kind=ScorerKind.NS)
    from matrix_conformal import fill_missing

    base = fill_missing(obs, guess)
    weights = ns_weights(base.entries[:n, :n], config)
    zs = np.linspace(-2, 2, 21)
    cached = ns_scores_over_grid(weights, base.entries[n, :n], zs)
    for g, z in enumerate(zs):
        naive = score_all(obs, guess, z, config)
        assert np.abs(cached[g] - naive).max() < 1e-12


# ---------------------------------------------------------------------------
# score_all


def test_score_all_smallest_case_svd():
    # order 2: a single reference column
    values = np.array([[0.5, np.nan], [np.nan, 0.25]])
    mask = np.zeros((2, 2), bool)
    obs = ObservedMatrix(values, mask, 1.0, (1, 0))
    scores = score_all(obs, np.zeros((2, 2)), 0.1, ScorerConfig(kind=ScorerKind.SVD))
    assert scores.shape == (1,)
    assert scores[0] >= 0


def test_score_all_zero_threshold_gives_zero_vector():
    rng = np.random.default_rng(34)
    a = sym(rng, 6)
    obs = ObservedMatrix.from_dense(a, np.zeros((6, 6), bool), bound=2.0)
    config = ScorerConfig(kind=ScorerKind.SVD, svd_threshold_scale=0.0)
    scores = score_all(obs, np.zeros((6, 6)), 0.3, config)
    assert np.abs(scores).max() < 1e-8


def test_score_all_ns_needs_three_columns():
    values = np.zeros((3, 3))
    obs = ObservedMatrix.from_dense(values, np.zeros((3, 3), bool), 1.0)
    with pytest.raises(ValueError, match="at least 3"):
        score_all(obs, np.zeros((3, 3)), 0.0, ScorerConfig(kind=ScorerKind.NS))


def test_score_all_rejects_noncanonical_target():
    values = np.zeros((5, 5))
    obs = ObservedMatrix.from_dense(values, np.zeros((5, 5), bool), 1.0, target=(0, 1))
    with pytest.raises(ValueError, match="relabel"):
        score_all(obs, np.zeros((5, 5)), 0.0, ScorerConfig(kind=ScorerKind.SVD))


# ---------------------------------------------------------------------------
# row-conditional symmetry: permuting reference labels permutes the scores


def scores_on_raw_matrix(entries, bound, config):
    order = entries.shape[0]
    obs = ObservedMatrix.from_dense(entries, np.zeros((order, order), bool), bound)
    return score_all(obs, np.zeros((order, order)), entries[order - 1, order - 2], config)


def permuted_matrix(entries, pi):
    order = entries.shape[0]
    full = np.append(pi, order - 1)
    inv = np.argsort(full)
    return entries[np.ix_(inv, inv)]


@pytest.mark.parametrize(
    "config,tol",
    [
        (ScorerConfig(kind=ScorerKind.SVD), 1e-8),
        (ScorerConfig(kind=ScorerKind.NS), 1e-12),
    ],
)
def test_row_conditional_symmetry(config, tol):
    rng = np.random.default_rng(35)
    order = 21
    n = order - 1
    worst = 0.0
    for _ in range(50):
        entries = sym(rng, order)
        pi = rng.permutation(n)
        base = scores_on_raw_matrix(entries, 1.0, config)
        permuted = scores_on_raw_matrix(permuted_matrix(entries, pi), 1.0, config)
        gap = np.abs(base - permuted[pi]).max()
        worst = max(worst, gap)
    assert worst <= tol


def test_scores_finite_nonnegative_random_inputs():
    rng = np.random.default_rng(36)
    for kind in (ScorerKind.SVD, ScorerKind.NS):
        config = ScorerConfig(kind=kind)
        for _ in range(10):
            order = rng.integers(4, 12)
            entries = sym(rng, order)
            scores = scores_on_raw_matrix(entries, 1.0, config)
            assert scores.shape == (order - 1,)
            assert np.isfinite(scores).all()
            assert (scores >= 0).all()


def test_ns_weights_fixed_bandwidths_override():
    rng = np.random.default_rng(37)
    core = rng.uniform(-1, 1, (5, 5))
    h = (0.3, 0.4, 0.5, 0.6, 0.7)
    w = ns_weights(core, ScorerConfig(kind=ScorerKind.NS, ns_bandwidths=h))
    assert np.array_equal(w.bandwidths, np.array(h))
    d = dissimilarity_matrix(core)
    for j in range(5):
        for jp in range(5):
            if j == jp:
                assert w.weights[j, jp] == 0.0
            else:
                assert w.weights[j, jp] == pytest.approx(
                    max(1 - d[j, jp] / h[j], 0.0), abs=1e-15
                )


def test_scorer_config_validation():
    with pytest.raises(ValueError):
        ScorerConfig(kind=ScorerKind.SVD, svd_threshold_exponent=1.5)
    with pytest.raises(ValueError):
        ScorerConfig(kind=ScorerKind.NS, ns_bandwidth_quantile=0.0)
    with pytest.raises(ValueError):
        ScorerConfig(kind=ScorerKind.NS, ns_bandwidths=(0.5, -0.1))
    config = ScorerConfig(kind="ns")
    assert config.kind is ScorerKind.NS


def test_lower_quantile_helper():
    assert lower_quantile(np.arange(1, 11), 0.9) == 9
    assert lower_quantile(np.array([3.0]), 0.2) == 3.0
    assert rank_threshold(1.0, 7) == 7
