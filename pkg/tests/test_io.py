import numpy as np
import pytest

from swarmphase import io as io_
from swarmphase import observables, sim
from swarmphase.mapping import CorrespondenceMap
from swarmphase.segment import PhaseSegmentation, Segment


class TestTrajectoryCsv:
    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        pos = rng.uniform(-8, 8, size=(5, 7, 2)) * np.exp(rng.normal(size=(5, 7, 2)))
        path = tmp_path / "traj.csv"
        io_.save_trajectory_csv(path, pos)
        loaded = io_.load_trajectory_csv(path)
        assert np.array_equal(loaded.wrapped, pos)

    def test_three_column_form(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,0.0,0.5\n1,1.0,0.5\n2,0.1,0.5\n2,1.1,0.5\n")
        ds = io_.load_trajectory_csv(path)
        assert ds.n_frames == 2 and ds.n_agents == 2
        assert np.allclose(ds.wrapped[1, 1], [1.1, 0.5])

    def test_four_column_orders_by_id(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,2,5.0,0.0\n1,1,1.0,0.0\n")
        ds = io_.load_trajectory_csv(path)
        assert np.allclose(ds.wrapped[0], [[1.0, 0.0], [5.0, 0.0]])

    def test_header_row_is_skipped(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("t,id,x,y\n1,1,0.0,0.0\n1,2,1.0,0.0\n")
        ds = io_.load_trajectory_csv(path)
        assert ds.n_agents == 2

    def test_ragged_frame_error_names_frame(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,0.0,0.0\n1,1.0,0.0\n2,0.0,0.0\n2,1.0,0.0\n2,2.0,0.0\n")
        with pytest.raises(ValueError, match="frame 2: expected 2 agents, found 3"):
            io_.load_trajectory_csv(path)

    def test_non_numeric_error_names_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,0.0,0.0\n1,oops,0.0\n")
        with pytest.raises(ValueError, match="line 2"):
            io_.load_trajectory_csv(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("1,0.0\n")
        with pytest.raises(ValueError, match="line 1"):
            io_.load_trajectory_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("\n")
        with pytest.raises(ValueError, match="no data rows"):
            io_.load_trajectory_csv(path)


class TestDistancePgm:
    def test_all_zero_matrix_is_black(self, tmp_path):
        path = tmp_path / "d.pgm"
        io_.save_distance_pgm(path, np.zeros((3, 3)))
        data = path.read_bytes()
        assert data.startswith(b"P5\n3 3\n255\n")
        assert data[len(b"P5\n3 3\n255\n"):] == bytes(9)

    def test_max_entry_is_white(self, tmp_path):
        delta = np.zeros((2, 2))
        delta[0, 1] = delta[1, 0] = 0.5
        path = tmp_path / "d.pgm"
        io_.save_distance_pgm(path, delta)
        pixels = path.read_bytes()[len(b"P5\n2 2\n255\n"):]
        assert list(pixels) == [0, 255, 255, 0]

    def test_symmetric_image(self, tmp_path):
        series = np.random.default_rng(1).random(20)
        delta = observables.distance_matrix(series)
        path = tmp_path / "d.pgm"
        io_.save_distance_pgm(path, delta)
        pixels = np.frombuffer(path.read_bytes()[len(b"P5\n20 20\n255\n"):], dtype=np.uint8)
        img = pixels.reshape(20, 20)
        assert np.array_equal(img, img.T)

    def test_byte_deterministic(self, tmp_path):
        delta = observables.distance_matrix(np.random.default_rng(2).random(9))
        p1, p2 = tmp_path / "a.pgm", tmp_path / "b.pgm"
        io_.save_distance_pgm(p1, delta)
        io_.save_distance_pgm(p2, delta)
        assert p1.read_bytes() == p2.read_bytes()


class TestOtherWriters:
    def test_observables_csv(self, tmp_path):
        series = observables.ObservableSeries(
            speed=np.array([0.5, 1.0]),
            polarization=np.array([1.0, 0.25]),
            components=np.array([1, 2]),
            coarse=np.array([0.5, 0.42]),
            weight_speed=1 / 3,
            weight_polarization=1 / 3,
            epsilon=1.5,
            n_agents=10,
        )
        path = tmp_path / "obs.csv"
        io_.save_observables_csv(path, series)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,speed,P,C,X"
        assert lines[1].startswith("1,0.5,1,1,0.5")

    def test_segments_csv(self, tmp_path):
        seg = PhaseSegmentation(
            segments=[Segment(1, 49, 0.5, label=1), Segment(50, 99, 0.66, label=2)],
            min_length=10,
            split_value=0.58,
            merge_tolerance=0.1,
        )
        path = tmp_path / "seg.csv"
        io_.save_segments_csv(path, seg, dimensions=[2, None])
        lines = path.read_text().splitlines()
        assert lines[0] == "start,end,mean_X,label,dstar"
        assert lines[1] == "1,49,0.5,1,2"
        assert lines[2] == f"50,99,{0.66:.17g},2,"

    def test_residual_and_embedding_csv(self, tmp_path):
        io_.save_residual_csv(tmp_path / "r.csv", np.array([0.5, 0.05]))
        assert (tmp_path / "r.csv").read_text().splitlines() == [
            "d,residual_variance",
            "1,0.5",
            f"2,{0.05:.17g}",
        ]
        io_.save_embedding_csv(tmp_path / "e.csv", np.array([[1.0, 2.0]]))
        assert (tmp_path / "e.csv").read_text().splitlines() == ["index,x1,x2", "1,1,2"]

    def test_correspondence_csv(self, tmp_path):
        m = CorrespondenceMap(
            step=1,
            permutation=np.array([1, 0]),
            bijective=np.array([True, False]),
            velocities=np.array([[0.1, 0.0], [0.0, -0.2]]),
            domain_mean_velocity=np.array([0.1, 0.0]),
            mean_velocity=np.array([0.05, -0.1]),
        )
        path = tmp_path / "c.csv"
        io_.save_correspondence_csv(path, [m])
        lines = path.read_text().splitlines()
        assert lines[0] == "t,source,target,bijective,vx,vy"
        assert lines[1] == f"1,1,2,1,{0.1:.17g},0"
        assert lines[2] == f"1,2,1,0,0,{-0.2:.17g}"


class TestConfigParsing:
    def test_key_value_with_comments(self):
        text = "# run setup\nscenario = speed-switch\nseed= 7  # fixed\n\nk =9\n"
        assert io_.parse_config_text(text) == {"scenario": "speed-switch", "seed": "7", "k": "9"}

    def test_malformed_line(self):
        with pytest.raises(ValueError, match="line 2"):
            io_.parse_config_text("a = 1\nnot a pair\n")
