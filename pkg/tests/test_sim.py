import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmphase import sim


def brute_neighbors(positions, radius, L, H):
    """Exhaustive pairwise minimum-image neighbor check."""
    n = len(positions)
    out = []
    for i in range(n):
        members = []
        for j in range(n):
            d = positions[i] - positions[j]
            d = d - np.array([2 * L, 2 * H]) * np.round(d / np.array([2 * L, 2 * H]))
            if np.hypot(*d) <= radius:
                members.append(j)
        out.append(members)
    return out


class TestNeighbors:
    def test_single_agent_is_own_neighbor(self):
        nbrs = sim.neighbors_within(np.array([[0.3, -0.2]]), 1.0, 8.0, 5.0)
        assert [list(a) for a in nbrs] == [[0]]

    def test_periodic_wrap_pair(self):
        # agents near opposite vertical edges are mutual neighbors through the wrap
        L = 8.0
        pos = np.array([[-L + 0.1, 0.0], [L - 0.1, 0.0]])
        nbrs = sim.neighbors_within(pos, 1.0, L, 5.0)
        assert list(nbrs[0]) == [0, 1]
        assert list(nbrs[1]) == [0, 1]

    def test_three_agents_example(self):
        pos = np.array([[0.0, 0.0], [0.5, 0.0], [2.0, 0.0]])
        nbrs = sim.neighbors_within(pos, 1.0, 8.0, 8.0)
        assert [list(a) for a in nbrs] == [[0, 1], [0, 1], [2]]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 15))
            L, H = 4.0, 3.0
            pos = np.column_stack((rng.uniform(-L, L, n), rng.uniform(-H, H, n)))
            got = sim.neighbors_within(pos, 1.2, L, H)
            want = brute_neighbors(pos, 1.2, L, H)
            assert [list(a) for a in got] == want

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        pos = np.column_stack((rng.uniform(-6, 6, 30), rng.uniform(-6, 6, 30)))
        nbrs = sim.neighbors_within(pos, 1.0, 6.0, 6.0)
        for i, members in enumerate(nbrs):
            for j in members:
                assert i in nbrs[j]

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            sim.neighbors_within(np.zeros((2, 2)), 0.0, 1.0, 1.0)


def single_agent_params(**kw):
    defaults = dict(
        n_agents=1,
        n_steps=2,
        half_width=8.0,
        half_height=5.0,
        speed_base=np.array([0.05]),
        speed_jitter=0.0,
        noise_low=np.array([0.0]),
        noise_high=np.array([0.0]),
        dt=0.05,
    )
    defaults.update(kw)
    return sim.SimParams(**defaults)


class TestStep:
    def test_single_agent_displacement(self):
        params = single_agent_params()
        rng = np.random.default_rng(0)
        w, u, h = sim.step(np.zeros((1, 2)), np.zeros((1, 2)), np.zeros(1), params, 0, rng)
        assert np.allclose(u, [[0.0025, 0.0]], atol=1e-15)
        assert h[0] == 0.0

    def test_two_neighbors_average_heading(self):
        params = single_agent_params(n_agents=2)
        pos = np.array([[0.0, 0.0], [0.1, 0.0]])
        headings = np.array([0.0, math.pi / 2])
        rng = np.random.default_rng(0)
        _, _, new_headings = sim.step(pos, pos.copy(), headings, params, 0, rng)
        assert np.allclose(new_headings, math.pi / 4, atol=1e-12)

    def test_displacement_norm_is_speed_times_dt(self):
        rng = np.random.default_rng(7)
        p = sim.scenario_split_rejoin(n_agents=10, n_steps=120, seed=7)
        ds = sim.simulate(p)
        steps = np.diff(ds.unwrapped, axis=0)
        norms = np.linalg.norm(steps, axis=2)
        assert np.all(norms <= (p.speed_base[:, None] + p.speed_jitter) * p.dt + 1e-12)
        assert np.all(norms >= (p.speed_base[:, None] - p.speed_jitter) * p.dt - 1e-12)

    def test_zero_alignment_keeps_heading(self):
        # two agents heading exactly opposite: the mean direction cancels
        params = single_agent_params(n_agents=2)
        pos = np.array([[0.0, 0.0], [0.1, 0.0]])
        headings = np.array([0.0, math.pi])
        rng = np.random.default_rng(0)
        _, _, new_headings = sim.step(pos, pos.copy(), headings, params, 0, rng)
        assert new_headings[0] == 0.0
        assert new_headings[1] == math.pi


class TestSchedules:
    def test_speed_switch_ranges(self):
        p = sim.scenario_speed_switch()
        # 1-based step t maps to index t-1
        assert p.speed_base[48] == 0.05
        assert p.speed_base[49] == 0.1
        assert p.speed_base[148] == 0.05
        assert p.speed_jitter == 0.01
        # realized speeds stay inside the scheduled bands
        ds = sim.simulate(p)
        norms = np.linalg.norm(np.diff(ds.unwrapped, axis=0), axis=2) / p.dt
        assert np.all(norms[48] >= 0.04) and np.all(norms[48] <= 0.06)
        assert np.all(norms[49] >= 0.09) and np.all(norms[49] <= 0.11)
        assert np.all(norms[148] >= 0.04) and np.all(norms[148] <= 0.06)

    def test_speed_switch_rejects_short_run(self):
        with pytest.raises(ValueError):
            sim.scenario_speed_switch(n_steps=99)

    def test_noise_switch_bounds(self):
        p = sim.scenario_noise_switch()
        assert p.noise_high[9] == 0.01 and p.noise_low[9] == -0.01
        assert p.noise_high[74] == 0.2 and p.noise_low[74] == -0.2
        assert p.noise_high[119] == 0.01
        with pytest.raises(ValueError):
            sim.scenario_noise_switch(n_steps=80)

    def test_split_rejects_odd_agents(self):
        with pytest.raises(ValueError):
            sim.scenario_split_rejoin(n_agents=49)

    def test_split_path_shape(self):
        path = sim.split_reference_path(220)
        assert path[-1, 0] == pytest.approx(6.0)
        spacing = np.diff(path[:, 0])
        assert np.allclose(spacing, 12.0 / 220)

    def test_split_halves_are_transposed_rotations(self):
        p = sim.scenario_split_rejoin(n_agents=50, n_steps=220)
        assert np.allclose(p.rotations[:, 0], np.transpose(p.rotations[:, -1], (0, 2, 1)))

    def test_flat_tangent_gives_zero_angle(self):
        path = np.column_stack((np.arange(5.0), np.ones(5)))
        assert np.allclose(sim.split_rotation_angles(path), 0.0)

    def test_rotation_matrices_orthogonal(self):
        p = sim.scenario_split_rejoin(n_agents=10, n_steps=120)
        rtr = np.einsum("...ji,...jk->...ik", p.rotations, p.rotations)
        assert np.allclose(rtr, np.eye(2), atol=1e-12)
        det = np.linalg.det(p.rotations.reshape(-1, 2, 2))
        assert np.allclose(det, 1.0, atol=1e-12)

    def test_literal_sigmoid_saturates(self):
        # the literal argument saturates both sigmoids immediately: flat path
        flat = sim.split_reference_path(220, literal_sigmoid=True)
        assert np.max(np.abs(flat[:, 1])) < 0.01
        bump = sim.split_reference_path(220)
        assert np.max(bump[:, 1]) > 3.0

    def test_make_scenario_unknown_name(self):
        with pytest.raises(ValueError, match="unknown scenario"):
            sim.make_scenario("zigzag")


class TestSimulate:
    def test_deterministic_for_seed(self):
        p1 = sim.scenario_speed_switch(n_agents=12, n_steps=110, seed=42)
        p2 = sim.scenario_speed_switch(n_agents=12, n_steps=110, seed=42)
        a, b = sim.simulate(p1), sim.simulate(p2)
        assert np.array_equal(a.wrapped, b.wrapped)
        assert np.array_equal(a.unwrapped, b.unwrapped)

    def test_initial_disk(self):
        p = sim.scenario_noise_switch(n_agents=40, n_steps=100 + 1, seed=9)
        ds = sim.simulate(p)
        center = np.array([-p.half_width + 2.0, 0.0])
        assert np.all(np.linalg.norm(ds.unwrapped[0] - center, axis=1) <= 2.0 + 1e-12)

    def test_zero_noise_stays_aligned(self):
        p = single_agent_params(
            n_agents=8,
            n_steps=40,
            speed_base=np.full(39, 0.05),
            noise_low=np.zeros(39),
            noise_high=np.zeros(39),
        )
        ds = sim.simulate(p)
        steps = np.diff(ds.unwrapped, axis=0)
        # all headings stay at zero: displacement is purely +x
        assert np.allclose(steps[:, :, 1], 0.0)
        assert np.all(steps[:, :, 0] > 0)
        # polarization of simulated velocities is exactly 1
        units = steps / np.linalg.norm(steps, axis=2, keepdims=True)
        pol = np.linalg.norm(units.sum(axis=1), axis=1) / p.n_agents
        assert np.allclose(pol, 1.0, atol=1e-12)

    def test_wrapped_inside_box_and_consistent(self):
        p = sim.scenario_speed_switch(n_agents=15, n_steps=120, seed=3, dt=5.0)
        ds = sim.simulate(p)
        L, H = p.half_width, p.half_height
        assert np.all(ds.wrapped[..., 0] >= -L) and np.all(ds.wrapped[..., 0] < L)
        assert np.all(ds.wrapped[..., 1] >= -H) and np.all(ds.wrapped[..., 1] < H)
        multiples = (ds.unwrapped - ds.wrapped) / np.array([2 * L, 2 * H])
        assert np.allclose(multiples, np.round(multiples), atol=1e-9)

    def test_phase_boundaries_attached(self):
        ds = sim.simulate(sim.scenario_speed_switch(n_agents=5, n_steps=110, seed=1))
        assert ds.phase_boundaries == (50, 100)

    def test_analysis_track_prefers_unwrapped(self):
        ds = sim.simulate(sim.scenario_speed_switch(n_agents=4, n_steps=105, seed=0))
        assert ds.analysis_track() is ds.unwrapped
        assert ds.analysis_track(prefer_unwrapped=False) is ds.wrapped


class TestParamValidation:
    def test_noise_bounds_must_be_ordered(self):
        with pytest.raises(ValueError, match="noise bounds"):
            single_agent_params(noise_low=np.array([0.2]), noise_high=np.array([0.1]))

    def test_rotations_must_be_orthogonal(self):
        bad = np.tile(np.array([[1.0, 0.0], [0.0, 2.0]]), (1, 1, 1, 1))
        with pytest.raises(ValueError, match="orthogonal"):
            single_agent_params(rotations=bad)

    def test_reflection_rejected(self):
        bad = np.tile(np.array([[1.0, 0.0], [0.0, -1.0]]), (1, 1, 1, 1))
        with pytest.raises(ValueError, match="determinant"):
            single_agent_params(rotations=bad)

    @pytest.mark.parametrize("field,value", [("n_agents", 0), ("n_steps", 1), ("dt", 0.0)])
    def test_basic_bounds(self, field, value):
        with pytest.raises(ValueError):
            single_agent_params(**{field: value})


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-100, 100),
    st.floats(-100, 100),
    st.floats(0.5, 20),
    st.floats(0.5, 20),
)
def test_wrap_round_trip(x, y, L, H):
    wrapped = sim.wrap_positions(np.array([[x, y]]), L, H)
    assert -L <= wrapped[0, 0] < L
    assert -H <= wrapped[0, 1] < H
    multiples = (np.array([x, y]) - wrapped[0]) / np.array([2 * L, 2 * H])
    assert np.allclose(multiples, np.round(multiples), atol=1e-6)


@settings(max_examples=50, deadline=None)
@given(
    st.floats(-50, 50),
    st.floats(-50, 50),
    st.floats(0.5, 10),
    st.floats(0.5, 10),
)
def test_minimum_image_is_shortest_representative(dx, dy, L, H):
    mi = sim.minimum_image(np.array([dx, dy]), L, H)
    assert abs(mi[0]) <= L * (1 + 1e-12)
    assert abs(mi[1]) <= H * (1 + 1e-12)
    shifts = (np.array([dx, dy]) - mi) / np.array([2 * L, 2 * H])
    assert np.allclose(shifts, np.round(shifts), atol=1e-6)
