import numpy as np
import pytest

from heightproj import (
    ConfusionCounts,
    RayQuery,
    SemanticVoxelGrid,
    VoxelGridSpec,
    confusion,
    miou,
    ray_fan,
    ray_first_hit,
    ray_voxel_sequence,
    rayiou,
)

from oracles import brute_confusion, march_ray

FREE = 255


def _grid(spec, labels):
    return SemanticVoxelGrid(spec, np.asarray(labels, dtype=np.uint8), FREE)


def _random_grid(spec, seed, fill=0.02, classes=(1, 2, 3)):
    rng = np.random.default_rng(seed)
    labels = np.full(spec.shape, FREE, np.uint8)
    occupied = rng.random(spec.shape) < fill
    labels[occupied] = rng.choice(classes, size=int(occupied.sum()))
    return _grid(spec, labels)


@pytest.fixture(scope="module")
def ray_spec():
    return VoxelGridSpec(-4.0, 4.0, -4.0, 4.0, -2.0, 2.0, 0.5, 0.5)


# --- confusion / miou --------------------------------------------------------


def test_confusion_identical_grids(small_spec):
    g = _random_grid(small_spec, seed=0, fill=0.5)
    c = confusion(g, g)
    assert np.array_equal(c.intersection, c.pred_count)
    assert np.array_equal(c.intersection, c.gt_count)


def test_confusion_disjoint_labels(small_spec):
    a = np.full(small_spec.shape, FREE, np.uint8)
    b = np.full(small_spec.shape, FREE, np.uint8)
    a[0, 0, 0] = 1
    b[0, 0, 0] = 2
    c = confusion(_grid(small_spec, a), _grid(small_spec, b))
    assert (c.intersection == 0).all()
    assert set(c.classes) == {1, 2}


def test_confusion_two_voxel_worked_example():
    spec = VoxelGridSpec(0.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0)  # 2x1x1 voxels
    gt = _grid(spec, [[[0]], [[1]]])
    pred = _grid(spec, [[[0]], [[0]]])
    c = confusion(pred, gt)
    assert c.classes == (0, 1)
    assert c.intersection.tolist() == [1, 0]
    assert c.pred_count.tolist() == [2, 0]
    assert c.gt_count.tolist() == [1, 1]
    mean, per_class = miou(c)
    assert per_class[0] == 0.5
    assert per_class[1] == 0.0
    assert mean == 0.25


def test_confusion_matches_brute_force(small_spec):
    pred = _random_grid(small_spec, seed=1, fill=0.5)
    gt = _random_grid(small_spec, seed=2, fill=0.5)
    c = confusion(pred, gt)
    inter, pc, gc = brute_confusion(pred.labels, gt.labels, FREE)
    for i, cls in enumerate(c.classes):
        assert c.intersection[i] == inter.get(cls, 0)
        assert c.pred_count[i] == pc.get(cls, 0)
        assert c.gt_count[i] == gc.get(cls, 0)


def test_confusion_free_class_included_when_asked(small_spec):
    g = _random_grid(small_spec, seed=3, fill=0.5)
    with_free = confusion(g, g, ignore_free=False)
    assert FREE in with_free.classes
    without = confusion(g, g, ignore_free=True)
    assert FREE not in without.classes


def test_miou_identical_grids_is_one(small_spec):
    g = _random_grid(small_spec, seed=4, fill=0.5)
    mean, per_class = miou(confusion(g, g))
    assert mean == 1.0
    assert all(v == 1.0 for v in per_class.values())


def test_miou_symmetric_under_swap(small_spec):
    a = _random_grid(small_spec, seed=5, fill=0.4)
    b = _random_grid(small_spec, seed=6, fill=0.4)
    _, ab = miou(confusion(a, b))
    _, ba = miou(confusion(b, a))
    assert ab == ba


def test_miou_undefined_when_all_free(small_spec):
    empty = _grid(small_spec, np.full(small_spec.shape, FREE, np.uint8))
    with pytest.raises(ValueError):
        miou(confusion(empty, empty))


def test_confusion_spec_mismatch(small_spec, occ3d_spec):
    a = _random_grid(small_spec, seed=7)
    b = _random_grid(occ3d_spec, seed=8)
    with pytest.raises(ValueError):
        confusion(a, b)


def test_confusion_counts_invariants():
    with pytest.raises(ValueError):
        ConfusionCounts((1,), np.array([5]), np.array([2]), np.array([9]))
    with pytest.raises(ValueError):
        ConfusionCounts((1,), np.array([-1]), np.array([2]), np.array([2]))


# --- ray traversal -----------------------------------------------------------


def test_ray_first_hit_all_free(ray_spec):
    grid = _grid(ray_spec, np.full(ray_spec.shape, FREE, np.uint8))
    q = RayQuery(np.zeros(3), np.array([1.0, 0.0, 0.0]))
    assert ray_first_hit(grid, q) is None


def test_ray_first_hit_axis_aligned_analytic(ray_spec):
    labels = np.full(ray_spec.shape, FREE, np.uint8)
    labels[12, 8, 4] = 7  # cell x in [2.0, 2.5)
    grid = _grid(ray_spec, labels)
    origin = np.array([-4.0, 0.25, 0.25])  # x_min face, inside cell (8, 4) laterally
    q = RayQuery(origin, np.array([1.0, 0.0, 0.0]))
    hit = ray_first_hit(grid, q)
    assert hit is not None
    cls, depth = hit
    assert cls == 7
    assert depth == pytest.approx(6.0, abs=1e-9)  # entry plane x = 2.0

    seq, ocls, odepth = march_ray(labels, ray_spec.x_min, ray_spec.y_min, ray_spec.z_min,
                                  ray_spec.delta_xy, ray_spec.delta_z,
                                  origin, [1.0, 0.0, 0.0], FREE)
    assert ocls == 7
    assert abs(odepth - depth) <= 0.01 * ray_spec.delta_z


def test_ray_sequence_matches_marcher_axis_aligned(ray_spec):
    labels = np.full(ray_spec.shape, FREE, np.uint8)
    seq = ray_voxel_sequence(ray_spec, [-4.0, 0.25, 0.25], [1.0, 0.0, 0.0])
    oracle_seq, _, _ = march_ray(labels, ray_spec.x_min, ray_spec.y_min, ray_spec.z_min,
                                 ray_spec.delta_xy, ray_spec.delta_z,
                                 [-4.0, 0.25, 0.25], [1.0, 0.0, 0.0], FREE)
    assert [tuple(r) for r in seq] == oracle_seq
    assert len(seq) == ray_spec.nx


def _is_ordered_subsequence(needle, haystack):
    it = iter(haystack)
    return all(any(x == y for y in it) for x in needle)


def test_ray_sequence_matches_marcher_random(ray_spec):
    # The marcher can skip a voxel the ray clips for less than one step, so
    # the exact sequence must contain the sampled one in order; with the fine
    # step they almost always match outright.
    labels = np.full(ray_spec.shape, FREE, np.uint8)
    rng = np.random.default_rng(9)
    exact_matches = 0
    for _ in range(50):
        origin = rng.uniform([-3.5, -3.5, -1.5], [3.5, 3.5, 1.5])
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        seq = [tuple(r) for r in ray_voxel_sequence(ray_spec, origin, d)]
        oracle_seq, _, _ = march_ray(labels, ray_spec.x_min, ray_spec.y_min, ray_spec.z_min,
                                     ray_spec.delta_xy, ray_spec.delta_z, origin, d, FREE,
                                     step_scale=0.002)
        assert _is_ordered_subsequence(oracle_seq, seq)
        exact_matches += seq == oracle_seq
    assert exact_matches >= 45


def test_ray_first_hit_matches_marcher_1000_rays(ray_spec):
    grid = _random_grid(ray_spec, seed=10, fill=0.05)
    rng = np.random.default_rng(11)
    step_scale = 0.002
    step = step_scale * min(ray_spec.delta_xy, ray_spec.delta_z)
    checked_hits = 0
    for _ in range(1000):
        origin = rng.uniform([-6.0, -6.0, -3.0], [6.0, 6.0, 3.0])
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        got = ray_first_hit(grid, RayQuery(origin, d))
        _, ocls, odepth = march_ray(grid.labels, ray_spec.x_min, ray_spec.y_min, ray_spec.z_min,
                                    ray_spec.delta_xy, ray_spec.delta_z, origin, d, FREE,
                                    step_scale=step_scale)
        if ocls is None:
            assert got is None
        else:
            assert got is not None
            assert got[0] == ocls
            assert abs(got[1] - odepth) <= step + 1e-9
            checked_hits += 1
    assert checked_hits > 150  # the scene is dense enough to be a real test


def test_ray_query_validation():
    with pytest.raises(ValueError):
        RayQuery(np.zeros(3), np.array([1.0, 1.0, 0.0]))  # not unit
    with pytest.raises(ValueError):
        RayQuery(np.array([np.nan, 0, 0]), np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        RayQuery(np.zeros(3), np.array([1.0, 0.0, 0.0]), thresholds=(2.0, 1.0))
    with pytest.raises(ValueError):
        RayQuery(np.zeros(3), np.array([1.0, 0.0, 0.0]), thresholds=(-1.0,))


# --- ray iou -----------------------------------------------------------------


def test_rayiou_identical_grids(ray_spec):
    grid = _random_grid(ray_spec, seed=12, fill=0.05)
    queries = ray_fan(origin=(0, 0, 0), n_azimuth=24, n_elevation=4)
    res = rayiou(grid, grid, queries)
    assert res.mean == 1.0
    assert all(v == 1.0 for v in res.per_threshold.values())


def test_rayiou_empty_prediction(ray_spec):
    gt = _random_grid(ray_spec, seed=13, fill=0.2)
    pred = _grid(ray_spec, np.full(ray_spec.shape, FREE, np.uint8))
    queries = ray_fan(origin=(0, 0, 0), n_azimuth=24, n_elevation=4)
    res = rayiou(pred, gt, queries)
    assert res.mean == 0.0


def test_rayiou_depth_threshold_rule(ray_spec):
    # One ray along +x; same class on both sides, entry depths 5.0 vs 5.3.
    labels_gt = np.full(ray_spec.shape, FREE, np.uint8)
    labels_pred = np.full(ray_spec.shape, FREE, np.uint8)
    labels_gt[10, 8, 4] = 3   # entry x = 1.0
    labels_pred[11, 8, 4] = 3  # entry x = 1.5
    gt = _grid(ray_spec, labels_gt)
    pred = _grid(ray_spec, labels_pred)
    origin = np.array([-4.0, 0.25, 0.25])
    direction = np.array([1.0, 0.0, 0.0])

    res = rayiou(pred, gt, [RayQuery(origin, direction, (1.0, 2.0, 4.0))])
    assert all(v == 1.0 for v in res.per_threshold.values())
    assert res.mean == 1.0

    tight = rayiou(pred, gt, [RayQuery(origin, direction, (0.2,))])
    assert tight.per_threshold[0.2] == 0.0


def test_rayiou_monotone_in_threshold(ray_spec):
    pred = _random_grid(ray_spec, seed=14, fill=0.08)
    gt = _random_grid(ray_spec, seed=15, fill=0.08)
    thresholds = (0.25, 0.5, 1.0, 2.0, 4.0)
    queries = ray_fan(origin=(0, 0, 0), n_azimuth=36, n_elevation=6, thresholds=thresholds)
    res = rayiou(pred, gt, queries)
    vals = [res.per_threshold[t] for t in thresholds]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_rayiou_requires_queries(ray_spec):
    g = _random_grid(ray_spec, seed=16)
    with pytest.raises(ValueError):
        rayiou(g, g, [])


def test_rayiou_mixed_thresholds_rejected(ray_spec):
    g = _random_grid(ray_spec, seed=17)
    a = RayQuery(np.zeros(3), np.array([1.0, 0.0, 0.0]), (1.0,))
    b = RayQuery(np.zeros(3), np.array([1.0, 0.0, 0.0]), (2.0,))
    with pytest.raises(ValueError):
        rayiou(g, g, [a, b])


def test_ray_fan_shape():
    queries = ray_fan(origin=(1, 2, 0.5), n_azimuth=8, n_elevation=3)
    assert len(queries) == 24
    assert all(abs(np.linalg.norm(q.direction) - 1.0) <= 1e-12 for q in queries)
    assert all(q.origin.tolist() == [1.0, 2.0, 0.5] for q in queries)
