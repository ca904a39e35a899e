import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sensorattack.datamatrix import (
    IoDataset,
    SensorSet,
    hankel,
    is_persistently_exciting,
    min_excitability_horizon,
    stack_z,
    windowed_hankel,
)
from sensorattack.errors import DataQualityError, ExcitationError, WindowError
from sensorattack.linalg import numerical_rank
from sensorattack.sysmodel import LtiSystem, extended_observability, simulate, toeplitz_io


def scalar(values):
    values = np.asarray(values, dtype=float)
    return IoDataset(values, values)


class TestSensorSet:
    def test_basic(self):
        g = SensorSet.of([5, 4], 5)
        assert g.indices == (4, 5)
        assert str(g) == "{4,5}"
        assert g.zero_based == [3, 4]
        assert g.complement() == SensorSet((1, 2, 3), 5)
        assert 4 in g and 1 not in g
        assert SensorSet.empty(5).complement() == SensorSet.full(5)

    def test_invalid(self):
        with pytest.raises(ValueError):
            SensorSet((0,), 3)
        with pytest.raises(ValueError):
            SensorSet((4,), 3)

    def test_enumerate_counts(self):
        assert len(list(SensorSet.enumerate(5, 2))) == 16
        assert len(list(SensorSet.enumerate(5, 5))) == 32
        assert len(list(SensorSet.enumerate(3, 3, proper=True))) == 7

    def test_enumerate_order(self):
        sets = list(SensorSet.enumerate(3, 2))
        assert [s.indices for s in sets] == [(), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]
        assert sets == sorted(sets, key=SensorSet.sort_key)


class TestIoDataset:
    def test_shapes_and_read_only(self):
        d = IoDataset(np.arange(4.0), np.ones((4, 2)))
        assert (d.N, d.m, d.p) == (4, 1, 2)
        with pytest.raises(ValueError):
            d.inputs[0, 0] = 1.0

    def test_length_mismatch(self):
        with pytest.raises(DataQualityError):
            IoDataset(np.zeros(3), np.zeros(4))

    def test_non_finite_location(self):
        y = np.zeros((5, 2))
        y[3, 1] = np.nan
        with pytest.raises(DataQualityError, match="k=3, channel 2"):
            IoDataset(np.zeros(5), y)

    def test_scaled(self):
        d = scalar([1, 2]).scaled(10.0)
        np.testing.assert_array_equal(d.outputs[:, 0], [10, 20])


class TestHankel:
    def test_scalar_depth_two(self):
        H = hankel(scalar([1, 2, 3, 4]), "u", 2).matrix
        np.testing.assert_array_equal(H, [[1, 2, 3], [2, 3, 4]])

    def test_depth_equals_length(self):
        H = hankel(scalar([1, 2, 3]), "y", 3).matrix
        np.testing.assert_array_equal(H, [[1], [2], [3]])

    def test_benchmark_dimensions(self, clean_run):
        assert hankel(clean_run.data, "y", 10).matrix.shape == (50, 491)

    def test_block_ordering(self):
        # two channels: column stacks [y_1(k), y_2(k), y_1(k+1), y_2(k+1)]
        y = np.array([[1, 10], [2, 20], [3, 30]], dtype=float)
        H = hankel(IoDataset(np.zeros(3), y), "y", 2).matrix
        np.testing.assert_array_equal(H[:, 0], [1, 10, 2, 20])

    def test_sensor_restriction(self):
        y = np.arange(15.0).reshape(5, 3)
        d = IoDataset(np.zeros(5), y)
        H = hankel(d, "y", 2, SensorSet((3,), 3)).matrix
        np.testing.assert_array_equal(H, [y[:4, 2], y[1:, 2]])

    def test_windowed(self):
        H = windowed_hankel(scalar([1, 2, 3, 4, 5]), "u", 2, 1, 2).matrix
        np.testing.assert_array_equal(H, [[2, 3], [3, 4]])

    def test_windowed_full_is_hankel(self, clean_run):
        d = clean_run.data
        np.testing.assert_array_equal(
            windowed_hankel(d, "y", 10, 0, d.N - 9).matrix, hankel(d, "y", 10).matrix
        )

    def test_windowed_slices(self, clean_run):
        d = clean_run.data
        full = hankel(d, "y", 10).matrix
        rng = np.random.default_rng(3)
        for _ in range(100):
            k = int(rng.integers(0, 490))
            T = int(rng.integers(1, 491 - k + 1))
            np.testing.assert_array_equal(windowed_hankel(d, "y", 10, k, T).matrix, full[:, k:k + T])

    def test_window_errors(self):
        d = scalar([1, 2, 3])
        with pytest.raises(WindowError):
            windowed_hankel(d, "u", 2, 1, 3)
        with pytest.raises(WindowError):
            hankel(d, "u", 4)
        with pytest.raises(WindowError):
            hankel(d, "u", 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_shift_property(self, d_ch, q, seed):
        sig = np.random.default_rng(seed).standard_normal((q + 8, d_ch))
        H = hankel(IoDataset(sig, sig), "y", q).matrix
        for j in range(H.shape[1] - 1):
            np.testing.assert_array_equal(H[d_ch:, j], H[:-d_ch, j + 1])
            np.testing.assert_array_equal(H[-d_ch:, j + 1], sig[j + q])


class TestStackZ:
    def test_shape(self, clean_run):
        d = clean_run.data
        keep = SensorSet((1, 2, 3), 5)
        assert stack_z(d, 10, keep).shape == ((1 + 3) * 10, 491)
        assert stack_z(d, 10, SensorSet.empty(5)).shape == (10, 491)
        assert stack_z(d, 10, window=(5, 60)).shape == (60, 60)

    def test_clean_rank(self, clean_run):
        assert numerical_rank(stack_z(clean_run.data, 10)) == 16

    def test_scenario1_attacked_sensors_removed(self, s1_run):
        keep = SensorSet((4, 5), 5).complement()
        assert numerical_rank(stack_z(s1_run.data, 10, keep=keep)) == 16

    def test_scenario1_attacked_sensor_kept(self, s1_run):
        # sensor 4 carries the injected sinusoid: two extra dimensions
        keep = SensorSet((1, 5), 5).complement()
        assert numerical_rank(stack_z(s1_run.data, 10, keep=keep)) == 18

    def test_model_oracle(self):
        """Rank matches the explicitly assembled [I 0; H O] [U; X] factorisation."""
        rng = np.random.default_rng(11)
        sys = LtiSystem([[0.8]], [[1.0]], [[1.0], [2.0]])
        u = rng.standard_normal(40)
        tr = simulate(sys, [0.3], u)
        d = tr.dataset()
        q = 3
        keep = SensorSet((2,), 2)
        U = hankel(d, "u", q).matrix
        X = tr.states[: d.N - q + 1].T
        O = extended_observability(sys, keep, q)
        H = toeplitz_io(sys, keep, q)
        model = np.vstack([U, O @ X + H @ U])
        np.testing.assert_allclose(stack_z(d, q, keep), model, atol=1e-12)
        assert numerical_rank(stack_z(d, q, keep)) == np.linalg.matrix_rank(model) == q + 1


class TestExcitation:
    def test_constant_input_not_pe(self):
        assert not is_persistently_exciting(scalar(np.ones(10)), 2)

    def test_random_input_pe(self):
        u = np.random.default_rng(0).standard_normal(500)
        assert is_persistently_exciting(scalar(u), 10)

    @pytest.mark.parametrize("q", [1, 5, 10, 20, 40])
    def test_benchmark_input_pe(self, clean_run, q):
        assert is_persistently_exciting(clean_run.data, q)

    def test_too_short(self):
        assert not is_persistently_exciting(scalar([1.0, 2.0]), 2)

    def test_horizon_not_pe(self):
        with pytest.raises(ExcitationError):
            min_excitability_horizon(scalar(np.ones(10)), 2)

    @pytest.mark.parametrize("q", [5, 10, 16])
    def test_benchmark_horizon(self, clean_run, q):
        assert min_excitability_horizon(clean_run.data, q) == q

    def test_dead_stretch_grows_horizon(self):
        rng = np.random.default_rng(4)
        q = 3
        base = rng.standard_normal(200)
        horizons = []
        for L in (0, 5, 10, 20):
            u = base.copy()
            u[100:100 + L] = 0.0
            horizons.append(min_excitability_horizon(scalar(u), q))
        assert horizons == sorted(horizons)
        assert horizons[-1] > horizons[0]
        # a dead stretch of length L needs a window reaching past it
        assert horizons[-1] >= 20 - q + 2

    def test_boundary_single_window(self):
        # N - q + 1 = m q: one square window, full rank iff mu = mq
        q = 3
        u = np.random.default_rng(1).standard_normal(2 * q - 1)
        assert min_excitability_horizon(scalar(u), q) == q
        u_bad = np.array([1.0, 1.0, 1.0, 1.0, 1.0])
        assert not is_persistently_exciting(scalar(u_bad), q)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_pe_monotone(self, seed, m):
        rng = np.random.default_rng(seed)
        N = 30
        u = rng.standard_normal((N, m))
        u[:, 0] = u[:, 0] if seed % 2 else np.sin(0.3 * np.arange(N))
        d = IoDataset(u, np.zeros((N, 1)))
        flags = [is_persistently_exciting(d, q) for q in range(1, N + 1)]
        first_false = flags.index(False) if False in flags else len(flags)
        assert not any(flags[first_false:])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_horizon_monotone_in_q(self, seed):
        u = np.random.default_rng(seed).standard_normal(60)
        d = scalar(u)
        mus = [min_excitability_horizon(d, q) for q in range(1, 8)]
        assert mus == sorted(mus)
