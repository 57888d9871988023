import itertools

import numpy as np
import pytest

from extremeseg.geodesic import (
    Label,
    STEP_EPSILON,
    SeedConfig,
    SeedError,
    build_seed_map,
    gradient_magnitude,
    shortest_path,
)
from extremeseg.morphology import ball, dilate
from extremeseg.points import ExtremePointSet
from extremeseg.volume import Mask, Volume


def vol(data, spacing=(1, 1, 1)):
    return Volume(data=np.asarray(data, dtype=np.float32), spacing=spacing)


def test_gradient_constant_is_zero():
    g = gradient_magnitude(vol(np.full((4, 4, 4), 2.5)))
    assert np.allclose(g.data, 0.0)


def test_gradient_linear_ramp():
    x = np.arange(6, dtype=np.float32)
    g = gradient_magnitude(vol(np.broadcast_to(x[:, None, None], (6, 4, 4)).copy()))
    assert np.allclose(g.data[1:-1], 1.0, atol=1e-6)


def test_gradient_plane_2x_3y_6z():
    gx, gy, gz = np.mgrid[0:6, 0:6, 0:6].astype(np.float32)
    f = 2 * gx + 3 * gy + 6 * gz
    g = gradient_magnitude(vol(f))
    # interior: sqrt(4+9+36) = 7
    assert np.allclose(g.data[1:-1, 1:-1, 1:-1], 7.0, atol=1e-6)


def test_gradient_respects_spacing():
    x = np.arange(5, dtype=np.float32) * 2  # values 0,2,4,... over 2 mm voxels
    g = gradient_magnitude(vol(np.broadcast_to(x[:, None, None], (5, 3, 3)).copy(),
                               spacing=(2, 1, 1)))
    assert np.allclose(g.data[1:-1], 1.0, atol=1e-6)


def test_path_zero_cost_straight_line():
    p = shortest_path(vol(np.zeros((4, 3, 3))), (0, 0, 0), (3, 0, 0))
    assert p.voxels == ((0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0))


def test_path_src_equals_dst():
    p = shortest_path(vol(np.zeros((3, 3, 3))), (1, 1, 1), (1, 1, 1))
    assert p.voxels == ((1, 1, 1),)


def test_path_consecutive_voxels_6_adjacent_no_repeats():
    rng = np.random.default_rng(0)
    c = vol(rng.random((8, 8, 4)))
    p = shortest_path(c, (0, 0, 0), (7, 7, 3))
    assert p.voxels[0] == (0, 0, 0) and p.voxels[-1] == (7, 7, 3)
    assert len(set(p.voxels)) == len(p.voxels)
    for a, b in zip(p.voxels, p.voxels[1:]):
        assert sum(abs(x - y) for x, y in zip(a, b)) == 1


def bellman_ford(cost, src):
    """Exhaustive relaxation oracle over the 6-connected grid."""
    dims = cost.shape
    dist = {p: np.inf for p in np.ndindex(dims)}
    dist[src] = 0.0
    changed = True
    while changed:
        changed = False
        for p in np.ndindex(dims):
            if dist[p] == np.inf:
                continue
            for step in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]:
                q = tuple(a + b for a, b in zip(p, step))
                if all(0 <= c < d for c, d in zip(q, dims)):
                    # edge weight formed first so float association matches
                    # a per-edge accumulation along the path
                    nd = dist[p] + (float(cost[q]) + STEP_EPSILON)
                    if nd < dist[q]:
                        dist[q] = nd
                        changed = True
    return dist


def test_path_through_wall_gap_matches_bellman_ford():
    cost = np.zeros((10, 10, 1), dtype=np.float32)
    cost[5, :, 0] = 100.0
    cost[5, 7, 0] = 0.0  # the gap
    v = vol(cost)
    src, dst = (0, 0, 0), (9, 0, 0)
    p = shortest_path(v, src, dst)
    assert (5, 7, 0) in p.voxels
    assert p.cost(v) == pytest.approx(bellman_ford(cost, src)[dst], abs=1e-12)


def test_path_cost_matches_bellman_ford_random_fields():
    rng = np.random.default_rng(42)
    for _ in range(10):
        cost = rng.random((10, 10, 1)).astype(np.float32)
        v = vol(cost)
        src = (int(rng.integers(10)), int(rng.integers(10)), 0)
        dst = (int(rng.integers(10)), int(rng.integers(10)), 0)
        p = shortest_path(v, src, dst)
        assert p.cost(v) == bellman_ford(cost, src)[dst]


def test_path_cost_not_worse_than_axis_aligned_route():
    rng = np.random.default_rng(7)
    cost = rng.random((6, 6, 6)).astype(np.float32)
    v = vol(cost)
    src, dst = (0, 0, 0), (5, 4, 3)
    p = shortest_path(v, src, dst)
    straight = []
    cur = list(src)
    for axis in range(3):
        while cur[axis] != dst[axis]:
            cur[axis] += 1 if dst[axis] > cur[axis] else -1
            straight.append(tuple(cur))
    straight_cost = sum(float(cost[q]) + STEP_EPSILON for q in straight)
    assert p.cost(v) <= straight_cost + 1e-12


def single_point_pts(p):
    return ExtremePointSet(*[p] * 6)


def test_seed_map_single_voxel_organ():
    v = vol(np.zeros((41, 41, 41)))
    pts = single_point_pts((20, 20, 20))
    seeds = build_seed_map(v, pts, SeedConfig(r_fg=2, r_bg=15))
    point = np.zeros((41, 41, 41), dtype=np.uint8)
    point[20, 20, 20] = 1
    fg_oracle = dilate(Mask(data=point, spacing=(1, 1, 1)), ball(2)).data.astype(bool)
    bg_oracle = ~dilate(Mask(data=point, spacing=(1, 1, 1)), ball(15)).data.astype(bool)
    assert np.array_equal(seeds.foreground, fg_oracle)
    assert np.array_equal(seeds.background, bg_oracle)


def test_seed_map_partition_and_disjointness():
    rng = np.random.default_rng(3)
    v = vol(rng.random((30, 30, 30)))
    pts = ExtremePointSet(
        x_min=(8, 15, 15), x_max=(22, 15, 15),
        y_min=(15, 8, 15), y_max=(15, 22, 15),
        z_min=(15, 15, 8), z_max=(15, 15, 22),
    )
    seeds = build_seed_map(v, pts, SeedConfig(r_fg=2, r_bg=10))
    fg, bg = seeds.foreground, seeds.background
    assert not (fg & bg).any()
    labels = seeds.data
    assert set(np.unique(labels)) <= {int(Label.UNLABELED), int(Label.FOREGROUND),
                                      int(Label.BACKGROUND)}
    for p in pts.points:
        assert labels[p] == Label.FOREGROUND


def test_seed_map_bright_sphere_fg_inside_dilated_gt():
    g = np.mgrid[0:40, 0:40, 0:40]
    inside = ((g[0] - 20) ** 2 + (g[1] - 20) ** 2 + (g[2] - 20) ** 2 <= 100)
    v = vol(inside.astype(np.float32))
    pts = ExtremePointSet(
        x_min=(10, 20, 20), x_max=(30, 20, 20),
        y_min=(20, 10, 20), y_max=(20, 30, 20),
        z_min=(20, 20, 10), z_max=(20, 20, 30),
    )
    seeds = build_seed_map(v, pts, SeedConfig(r_fg=2, r_bg=12))
    gt_dilated = dilate(Mask(data=inside.astype(np.uint8), spacing=(1, 1, 1)),
                        ball(2)).data.astype(bool)
    assert seeds.foreground.any()
    assert np.all(gt_dilated[seeds.foreground])


def test_seed_map_background_empty_raises():
    v = vol(np.zeros((5, 5, 5)))
    with pytest.raises(SeedError, match="padding"):
        build_seed_map(v, single_point_pts((2, 2, 2)), SeedConfig(r_fg=2, r_bg=30))
