import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from integral_gp import fusion, gp
from integral_gp.hyperopt import OptimConfig
from integral_gp.supports import Supports


def _stack(z_blocks, z_assays):
    epr = Supports([[0.0, 0.0, z] for z in z_blocks], [[15.0, 15.0, 10.0]] * len(z_blocks))
    bh = Supports([[0.0, 0.0, z] for z in z_assays], [[0.0, 0.0, 10.0]] * len(z_assays))
    return epr, bh


def test_bench_ranges_for_630():
    epr, bh = _stack([605.0, 610.0, 615.0, 620.0, 625.0], [615.0, 620.0, 620.5, 625.0, 630.0, 635.0])
    ei, bi = fusion.select_benches(epr, bh, 630.0)
    assert epr.centroids[ei, 2].tolist() == [610.0, 615.0, 620.0]
    assert bh.centroids[bi, 2].tolist() == [620.5, 625.0, 630.0]


def test_centroid_on_shared_bench_boundary_goes_to_lower_bench():
    epr, bh = _stack([620.0], [620.0, 621.0])
    ei, bi = fusion.select_benches(epr, bh, 630.0)
    assert ei.tolist() == [0]
    assert 0 not in bi


def test_empty_bench_reports_range():
    epr, bh = _stack([500.0], [625.0])
    with pytest.raises(fusion.EmptyBenchError, match=r"empty bench.*\[610, 620\]"):
        fusion.select_benches(epr, bh, 630.0)
    epr, bh = _stack([615.0], [500.0])
    with pytest.raises(fusion.EmptyBenchError, match=r"\(620, 630\]"):
        fusion.select_benches(epr, bh, 630.0)
    with pytest.raises(ValueError):
        fusion.select_benches(epr, bh, float("nan"))


def test_lattice_index_edges():
    idx = fusion.lattice_index([0.0, 0.5, 1.0, 1.0 + 1e-12, 2.0, -0.1], 0.0, 1.0)
    assert idx.tolist() == [0, 0, 0, 1, 1, -1]


def _grid(n=4, size=1.0):
    return fusion.BlockModel((size / 2, size / 2), (size, size), (n, n), np.arange(n * n, dtype=float))


def test_block_model_layout():
    bm = _grid(3)
    assert len(bm) == 9 and bm.dim == 2
    assert bm.centroids()[:4].tolist() == [[0.5, 0.5], [0.5, 1.5], [0.5, 2.5], [1.5, 0.5]]
    cells = bm.cells()
    assert np.all(cells.extents == 1.0)
    with pytest.raises(ValueError):
        fusion.BlockModel((0, 0), (1, 1), (2, 2), np.zeros(3))
    with pytest.raises(ValueError):
        fusion.BlockModel((0, 0), (1, -1), (2, 2), np.zeros(4))


def test_subdivision_tiles_each_block():
    bm = _grid(2)
    sub = bm.subdivided(3)
    assert len(sub) == 9 * len(bm)
    np.testing.assert_allclose(sub.extents, 1 / 3)
    # sub-block centroids average back to the parent centroid
    np.testing.assert_allclose(sub.centroids.reshape(len(bm), 9, 2).mean(axis=1), bm.centroids())
    bm3 = fusion.BlockModel((0, 0, 0), (15, 15, 10), (1, 1, 1), [1.0])
    s3 = bm3.subdivided(3)
    assert len(s3) == 9 and np.all(s3.extents[:, 2] == 10)
    with pytest.raises(ValueError):
        bm.subdivided(0)


def test_one_assay_at_centroid_counts():
    bm = _grid(3)
    bh = Supports([[1.5, 1.5]], [[0.0, 0.3]])
    c = fusion.count_bh_per_block(bm, np.arange(9), bh)
    assert c.tolist() == [0, 0, 0, 0, 1, 0, 0, 0, 0]


def test_assay_on_shared_edge_counts_in_lower_block_only():
    bm = _grid(3)
    bh = Supports([[1.0, 0.5], [1.5, 2.0], [0.0, 0.0]], None)
    c = fusion.count_bh_per_block(bm, np.arange(9), bh).reshape(3, 3)
    assert c[0, 0] == 2  # x = 1 edge and the outer corner
    assert c[1, 1] == 1 and c[1, 2] == 0
    assert c.sum() == 3


def test_uniform_layout_has_unit_density():
    bm = _grid(5)
    bh = Supports(bm.centroids(), None)
    c = fusion.count_bh_per_block(bm, np.arange(25), bh)
    assert np.all(c == 1)
    assert fusion.bh_density(c) == 1.0


def test_neighbourhood_counts_match_brute_force():
    bm = _grid(6)
    rng = np.random.default_rng(3)
    bh = Supports(rng.uniform(0, 6, (40, 2)), None)
    for r in (1, 2):
        c = fusion.count_bh_per_block(bm, np.arange(36), bh, radius=r)
        I = np.floor(bh.centroids).astype(int)
        ref = [np.sum(np.all(np.abs(I - ij) <= r, axis=1)) for ij in bm.indices()]
        assert c.tolist() == ref


def test_density_ignores_empty_blocks():
    assert fusion.bh_density([0, 2, 4, 0]) == 3.0
    assert fusion.bh_density([0, 0]) == 0.0


@pytest.mark.parametrize(
    "sigma, counts, rho, eps, expected",
    [
        ([1.0, 3.0], [1, 1], 2.0, 0.01, [4.0, 0.0]),
        ([0.5, 0.2, 0.9], [2, 0, 1], 1.5, 0.01, [0.6000000000000001, 0.01, 0.0]),
        ([0.3, 0.3], [0, 0], 0.0, 0.05, [0.05, 0.05]),
    ],
)
def test_assign_epr_noise_fixtures(sigma, counts, rho, eps, expected):
    out = fusion.assign_epr_noise(np.array(sigma), np.array(counts), rho, eps)
    assert out.tolist() == expected


def test_assign_epr_noise_errors():
    with pytest.raises(ValueError):
        fusion.assign_epr_noise([1.0], [1, 2], 1.0)
    with pytest.raises(ValueError):
        fusion.assign_epr_noise([-1.0], [1], 1.0)
    assert fusion.assign_epr_noise(np.array([]), np.array([]), 1.0).size == 0


@given(
    sigma=st.lists(st.integers(0, 1000), min_size=3, max_size=30, unique=True),
    rho=st.floats(0.5, 5),
)
@settings(max_examples=60, deadline=None)
def test_noise_is_strictly_decreasing_in_uncertainty(sigma, rho):
    s = np.array(sigma) / 100
    c = np.ones(len(s), dtype=int)
    n = fusion.assign_epr_noise(s, c, rho)
    assert np.all(n >= 0)
    assert n[np.argmax(s)] == 0.0
    assert stats.spearmanr(n, s)[0] == pytest.approx(-1.0)


@given(counts=st.lists(st.integers(0, 3), min_size=2, max_size=20), eps=st.floats(1e-4, 1.0))
@settings(max_examples=60, deadline=None)
def test_floor_exactly_where_unsampled(counts, eps):
    c = np.array(counts)
    s = np.linspace(0.1, 1.0, len(c))
    n = fusion.assign_epr_noise(s, c, fusion.bh_density(c), eps)
    assert np.all(n[c == 0] == eps)


def test_config_validation():
    for kw in ({"epsilon": 0.0}, {"neighborhood_radius": -1}, {"subdiv": 0}, {"bench_top": float("inf")}):
        with pytest.raises(ValueError):
            fusion.FusionConfig(**kw)


@pytest.fixture(scope="module")
def small_case():
    """10 x 10 unit blocks; assays cover the lower-left quarter only."""
    rng = np.random.default_rng(0)
    xs = np.arange(0, 5, 0.5) + 0.25
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    A = np.column_stack([X.ravel(), Y.ravel()])
    vals = np.sin(0.5 * A[:, 0]) + np.cos(0.4 * A[:, 1])
    bh = Supports(A, np.tile([0.0, 0.4], (len(A), 1)), vals + 0.02 * rng.normal(size=len(A)))
    bm = fusion.BlockModel((0.5, 0.5), (1.0, 1.0), (10, 10), np.full(100, 0.7))
    return bm, bh


OPT = OptimConfig(n_starts=3, seed=0)


def test_fuse_report_invariants(small_case):
    bm, bh = small_case
    rep = fusion.fuse(bm, bh, fusion.FusionConfig(), OPT)
    assert rep.mode == "fused"
    assert np.all(rep.epr_noise[rep.bh_count == 0] == 0.01)
    assert np.all(rep.epr_noise >= 0)
    assert rep.bh_count.sum() == len(bh)
    assert rep.bh_density == 4.0
    assert np.all(rep.bh_noise == rep.kernel.base_noise)
    with pytest.raises(ValueError):
        rep.epr_noise[0] = 1.0


def test_epr_preserved_away_from_assays(small_case):
    bm, bh = small_case
    rep = fusion.fuse(bm, bh, fusion.FusionConfig(), OPT)
    far = bm.centroids().min(axis=1) > 8
    assert np.all(np.abs(rep.field.mean[far] - 0.7) < 2 * 0.01)


def test_huge_block_noise_recovers_assay_only_posterior(small_case):
    bm, bh = small_case
    rep = fusion.fuse(bm, bh, fusion.FusionConfig(), OPT)
    k, E = rep.kernel, rep.epr_cells
    train = Supports.concat([bh, E])
    noise = np.concatenate([rep.bh_noise, np.full(len(E), 1e6)])
    # prior mean differs between the two fits, so compare the covariance only
    post = gp.fit(k, train, noise).predict(E)
    np.testing.assert_allclose(post.std, rep.bh_uncertainty, rtol=1e-6)


def test_bh_only_mode_and_subdivision(small_case):
    bm, bh = small_case
    rep = fusion.fuse(bm, bh, fusion.FusionConfig(use_epr=False, subdiv=3), OPT)
    assert rep.mode == "bh_only"
    assert len(rep.field) == 9 * len(bm)
    direct = gp.fit(rep.kernel, bh, rep.bh_noise).predict(bm.subdivided(3))
    np.testing.assert_allclose(rep.field.mean, direct.mean)


def test_known_assay_noise_is_kept(small_case):
    bm, bh = small_case
    nz = np.full(len(bh), 0.05)
    rep = fusion.fuse(bm, bh.with_noise(nz), fusion.FusionConfig(), OPT)
    np.testing.assert_array_equal(rep.bh_noise, nz)


def test_bench_selection_in_three_dimensions():
    rng = np.random.default_rng(1)
    bm = fusion.BlockModel((7.5, 7.5, 605.0), (15.0, 15.0, 10.0), (3, 3, 3), rng.uniform(55, 62, 27))
    xy = rng.uniform(0, 45, (30, 2))
    bh = Supports(
        np.column_stack([xy, np.full(30, 625.0)]),
        np.tile([0.0, 0.0, 10.0], (30, 1)),
        rng.uniform(55, 62, 30),
    )
    rep = fusion.fuse(bm, bh, fusion.FusionConfig(bench_top=630.0), OPT)
    assert len(rep.epr_cells) == 9
    assert np.all(rep.epr_cells.centroids[:, 2] == 615.0)
    assert len(rep.field) == 9
    with pytest.raises(fusion.EmptyBenchError):
        fusion.fuse(bm, bh, fusion.FusionConfig(bench_top=700.0), OPT)


def test_dimension_mismatch():
    bm = _grid(2)
    with pytest.raises(ValueError):
        fusion.fuse(bm, Supports([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]], None, [1.0, 2.0]))
