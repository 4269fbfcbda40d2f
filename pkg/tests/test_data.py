import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sok.data.dataset import DatasetFile, Normalizer, read_dataset, split_dataset, write_dataset
from sok.data.downsample import DownsampleStrategy, downsample, retained_modes
from sok.data.generate import ProblemSpec, generate_dataset
from sok.data.grf import GrfSpec, sample_grf, sample_grf_batch
from sok.data.pde import SolvabilityError, burgers_solve, burgers_step, heat_operator_exact, poisson_solve_exact
from sok.errors import FormatError, IntegrityError
from sok.spectral_ops import aliasing_fold, validate_nyquist
from sok.tensor_core import GridSpec, Layout, Spectrum, fftn, ifftn, mode_indices
from sok.train.physics import physics_residual_poisson


def periodic_x(n, length=2 * np.pi):
    return length * np.arange(n) / n


# random fields -------------------------------------------------------------


def test_grf_is_reproducible_and_real():
    spec = GrfSpec(64, k_max=12, seed=5)
    a, b = sample_grf(spec, 3), sample_grf(spec, 3)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample_grf(spec, 4))
    spectrum = np.fft.fft(a) * np.sqrt(64)
    full = np.fft.ifft(spectrum)
    assert np.max(np.abs(full.imag)) <= 1e-12


def test_grf_support_and_resolution_independence():
    spec = GrfSpec(64, k_max=10, seed=1)
    field = sample_grf(spec, 0)
    power = np.abs(np.fft.fft(field)) ** 2
    k = np.abs(mode_indices(64))
    assert np.max(power[k > 10]) <= 1e-20 * power.max()
    assert power[0] <= 1e-20 * power.max()
    fine = sample_grf(spec, 0, resolution=256)
    np.testing.assert_allclose(fine[::4], field, atol=1e-12)


def test_grf_ensemble_power_follows_power_law():
    gamma, k_max = 1.5, 16
    spec = GrfSpec(64, gamma=gamma, k_max=k_max, seed=2024)
    batch = sample_grf_batch(spec, 1000)
    # field = sum_k c_k exp(ikx), so the unnormalized DFT divided by N recovers c_k
    coeffs = np.fft.fft(batch, axis=-1) / 64
    mean_power = np.mean(np.abs(coeffs) ** 2, axis=0)
    k = np.arange(1, k_max + 1)
    ratio = mean_power[k] / k ** (-2 * gamma)
    assert np.all(np.abs(ratio - 1) <= 0.10), ratio


def test_grf_2d_is_real_and_band_limited():
    field = sample_grf(GrfSpec((32, 32), k_max=6, seed=0), 0)
    spec = np.abs(np.fft.fft2(field))
    k = np.abs(mode_indices(32))
    outside = (k[:, None] > 6) | (k[None, :] > 6)
    assert np.max(spec[outside]) <= 1e-10 * spec.max()


def test_grf_rejects_band_beyond_grid():
    with pytest.raises(ValueError):
        GrfSpec(32, k_max=16)


# heat ----------------------------------------------------------------------


def test_heat_single_mode_is_analytic():
    grid = GridSpec((64,))
    x = periodic_x(64)
    for k in (1, 3, 7):
        out = heat_operator_exact(np.sin(k * x), 0.1, 0.7, grid)
        assert np.max(np.abs(out - np.exp(-0.1 * k * k * 0.7) * np.sin(k * x))) <= 1e-12


def test_heat_identity_cases_and_semigroup():
    grid = GridSpec((64,))
    u0 = sample_grf(GrfSpec(64, k_max=16, seed=0))
    np.testing.assert_allclose(heat_operator_exact(u0, 0.0, 2.0, grid), u0, atol=1e-13)
    np.testing.assert_allclose(heat_operator_exact(u0, 0.3, 0.0, grid), u0, atol=1e-13)
    two = heat_operator_exact(heat_operator_exact(u0, 0.05, 0.4, grid), 0.05, 0.6, grid)
    assert np.max(np.abs(two - heat_operator_exact(u0, 0.05, 1.0, grid))) <= 1e-12


def test_heat_on_scaled_domain_uses_physical_wavenumbers():
    grid = GridSpec((32,), (1.0,))
    x = periodic_x(32, 1.0)
    out = heat_operator_exact(np.cos(2 * np.pi * 3 * x), 0.01, 0.5, grid)
    np.testing.assert_allclose(out, np.exp(-0.01 * (6 * np.pi) ** 2 * 0.5) * np.cos(6 * np.pi * x), atol=1e-12)


def test_heat_2d_separates():
    grid = GridSpec((16, 16))
    x = periodic_x(16)
    u0 = np.sin(2 * x)[:, None] * np.cos(3 * x)[None, :]
    np.testing.assert_allclose(heat_operator_exact(u0, 0.1, 1.0, grid), np.exp(-0.1 * 13) * u0, atol=1e-12)


# Poisson -------------------------------------------------------------------


def test_poisson_single_mode_and_residual():
    grid = GridSpec((64,))
    x = periodic_x(64)
    for k in (1, 4, 9):
        u = poisson_solve_exact(np.sin(k * x), grid)
        assert np.max(np.abs(u - np.sin(k * x) / k**2)) <= 1e-12
    f = sample_grf(GrfSpec(64, k_max=12, seed=3))
    u = poisson_solve_exact(f, grid)
    assert abs(u.mean()) <= 1e-14
    assert float(physics_residual_poisson(u, f, grid)) <= 1e-10


def test_poisson_rejects_nonzero_mean():
    with pytest.raises(SolvabilityError):
        poisson_solve_exact(np.ones(16) + np.sin(periodic_x(16)), GridSpec((16,)))


# Burgers -------------------------------------------------------------------


def burgers_initial(n):
    x = periodic_x(n)
    return np.sin(x) + 0.5 * np.cos(2 * x) - 0.3 * np.sin(3 * x) + 0.2


def test_burgers_conserves_mean_each_step():
    grid = GridSpec((128,))
    u = burgers_initial(128)
    start = u.mean()
    for _ in range(50):
        u = burgers_step(u, 0.02, 1e-3, grid)
        assert abs(u.mean() - start) <= 1e-10


def test_burgers_resolution_refinement():
    coarse = burgers_solve(burgers_initial(256), 0.05, 1e-3, 100, GridSpec((256,)))
    fine = burgers_solve(burgers_initial(512), 0.05, 1e-3, 100, GridSpec((512,)))
    assert np.max(np.abs(coarse - fine[::2])) <= 1e-6


def test_burgers_small_amplitude_follows_heat():
    grid = GridSpec((128,))
    u0 = 1e-6 * burgers_initial(128)
    steps, dt = 5, 1e-3
    out = burgers_solve(u0, 0.05, dt, steps, grid)
    ref = heat_operator_exact(u0, 0.05, steps * dt, grid)
    assert np.linalg.norm(out - ref) / np.linalg.norm(ref) <= 1e-8


def test_burgers_departure_from_heat_scales_with_amplitude():
    # the gap to the heat solution is the physical nonlinearity, linear in amplitude
    grid = GridSpec((128,))

    def gap(a):
        u0 = a * burgers_initial(128)
        out = burgers_solve(u0, 0.05, 1e-3, 50, grid)
        ref = heat_operator_exact(u0, 0.05, 0.05, grid)
        return np.linalg.norm(out - ref) / np.linalg.norm(ref)

    assert gap(1e-5) / gap(1e-6) == pytest.approx(10.0, rel=1e-3)


def test_burgers_keep_all_returns_trajectory():
    grid = GridSpec((64,))
    traj = burgers_solve(burgers_initial(64), 0.05, 1e-3, 4, grid, keep_all=True)
    assert traj.shape == (5, 64)
    np.testing.assert_array_equal(traj[0], burgers_initial(64))
    np.testing.assert_allclose(traj[-1], burgers_solve(burgers_initial(64), 0.05, 1e-3, 4, grid), atol=1e-15)


# downsampling --------------------------------------------------------------


@pytest.mark.parametrize("strategy", list(DownsampleStrategy))
def test_constant_survives_every_strategy(strategy):
    out = downsample(np.full((2, 1, 32), 1.25), strategy, 4)
    assert out.shape == (2, 1, 8)
    np.testing.assert_allclose(out, 1.25, atol=1e-14)


def test_spectral_downsample_resamples_band_limited_field_exactly():
    x = periodic_x(128)
    f = np.sin(3 * x) + 0.2 * np.cos(7 * x)
    np.testing.assert_allclose(downsample(f, "spectral", 4), f[::4], atol=1e-13)
    np.testing.assert_array_equal(downsample(f, "stride", 4), f[::4])


def fold_back_oracle(f, m):
    """Coarse-grid field made only of fine modes that alias onto coarse modes."""
    n = len(f)
    coeffs = np.fft.fft(f, norm="ortho")
    keep = set(retained_modes(n, m).tolist())
    out = np.zeros(m, complex)
    for idx, k in enumerate(mode_indices(n)):
        if int(k) not in keep:
            out[int(k) % m] += coeffs[idx] / np.sqrt(n // m)
    return np.fft.ifft(out, norm="ortho").real


@pytest.mark.parametrize("n,s", [(64, 2), (64, 4), (96, 3), (60, 5)])
def test_stride_minus_spectral_is_fold_back(n, s):
    f = np.random.default_rng(n + s).standard_normal(n)
    diff = downsample(f, "stride", s) - downsample(f, "spectral", s)
    assert np.max(np.abs(diff - fold_back_oracle(f, n // s))) <= 1e-12
    # stride is exactly the folded spectrum
    folded = aliasing_fold(Spectrum(fftn(f), Layout.NATURAL, (0,)), n // s).coeffs
    np.testing.assert_allclose(ifftn(folded).real, downsample(f, "stride", s), atol=1e-12)


def test_lowpass_then_stride_equals_spectral():
    f = np.random.default_rng(1).standard_normal((3, 64))
    for s in (2, 4, 8):
        np.testing.assert_allclose(downsample(f, "lowpass-stride", s), downsample(f, "spectral", s), atol=1e-12)


def test_pooling_and_interpolation_oracles():
    f = np.arange(12.0) ** 2
    np.testing.assert_allclose(downsample(f, "mean-pool", 3), [f[i:i + 3].mean() for i in range(0, 12, 3)])
    np.testing.assert_array_equal(downsample(f, "max-pool", 3), f[2::3])
    # coarse node i sits at fine coordinate 4i + 1.5
    lin = downsample(f, "linear-interp", 4)
    np.testing.assert_allclose(lin, [0.5 * (f[4 * i + 1] + f[4 * i + 2]) for i in range(3)])


def test_two_dimensional_downsample_per_axis():
    f = np.random.default_rng(2).standard_normal((1, 16, 12))
    assert downsample(f, "spectral", (2, 3)).shape == (1, 8, 4)
    np.testing.assert_array_equal(downsample(f, "stride", (2, 3)), f[:, ::2, ::3])


def test_non_divisor_factor_is_rejected():
    with pytest.raises(ValueError):
        downsample(np.zeros(30), "stride", 4)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([(64, 2), (64, 8), (48, 3), (50, 5)]))
def test_spectral_never_adds_energy_and_stride_keeps_nodes(seed, case):
    n, s = case
    f = np.random.default_rng(seed).standard_normal(n)
    coarse = downsample(f, "spectral", s)
    # mean square is the grid-independent energy
    assert np.mean(coarse**2) <= np.mean(f**2) * (1 + 1e-12)
    np.testing.assert_array_equal(downsample(f, "stride", s), f[::s])


# dataset files -------------------------------------------------------------


def small_dataset(count=6, n=16, channels=(2, 1)):
    rng = np.random.default_rng(0)
    return DatasetFile(
        rng.standard_normal((count, channels[0], n)),
        rng.standard_normal((count, channels[1], n)),
        GridSpec((n,), (3.0,)),
        metadata={"problem": "toy", "k": [1, 2]},
    ).fit_stats()


def test_dataset_round_trip_is_bit_identical(tmp_path):
    ds = small_dataset()
    path = tmp_path / "d.fnod"
    write_dataset(path, ds)
    back = read_dataset(path)
    assert back.inputs.tobytes() == ds.inputs.tobytes()
    assert back.outputs.tobytes() == ds.outputs.tobytes()
    assert back.grid == ds.grid and back.metadata == ds.metadata
    assert back.input_stats.mean.tobytes() == ds.input_stats.mean.tobytes()
    assert back.output_stats.std.tobytes() == ds.output_stats.std.tobytes()
    sidecar = json.loads((tmp_path / "d.fnod.json").read_text())
    assert sidecar["count"] == 6 and sidecar["input_shape"] == [2, 16] and sidecar["float32"] is False


def test_float32_payload_is_flagged(tmp_path):
    ds = small_dataset()
    path = tmp_path / "d.fnod"
    write_dataset(path, ds, float32=True)
    back = read_dataset(path)
    np.testing.assert_array_equal(back.inputs, ds.inputs.astype(np.float32).astype(float))
    assert json.loads((tmp_path / "d.fnod.json").read_text())["float32"] is True


def test_dataset_corruption_is_detected(tmp_path):
    path = tmp_path / "d.fnod"
    write_dataset(path, small_dataset())
    data = path.read_bytes()
    bad = tmp_path / "bad"
    bad.write_bytes(b"FNOX" + data[4:])
    with pytest.raises(FormatError):
        read_dataset(bad)
    bad.write_bytes(data[:-8])
    with pytest.raises(IntegrityError):
        read_dataset(bad)
    bad.write_bytes(data + b"\0" * 8)
    with pytest.raises(IntegrityError):
        read_dataset(bad)
    # bump the declared sample count
    bad.write_bytes(data[:7] + (7).to_bytes(4, "little") + data[11:])
    with pytest.raises(IntegrityError):
        read_dataset(bad)


# normalization -------------------------------------------------------------


def test_normalization_round_trip_and_train_statistics():
    ds = small_dataset(count=40)
    train, val = split_dataset(ds, 30)
    train.fit_stats()
    z = train.input_stats.normalize(train.inputs)
    axes = (0, 2)
    assert np.max(np.abs(z.mean(axis=axes))) <= 1e-10
    assert np.max(np.abs(z.std(axis=axes) - 1)) <= 1e-10
    np.testing.assert_allclose(train.input_stats.denormalize(z), train.inputs, atol=1e-12)
    val.with_stats_from(train)
    assert val.input_stats is train.input_stats
    manual = (val.inputs - train.inputs.mean(axis=axes)[None, :, None]) / train.inputs.std(axis=axes)[None, :, None]
    np.testing.assert_allclose(val.input_stats.normalize(val.inputs), manual, atol=1e-12)


def test_constant_channel_keeps_unit_scale():
    stats = Normalizer.fit(np.ones((4, 1, 8)))
    assert stats.std[0] == 1.0


# generation ----------------------------------------------------------------


def test_generated_heat_dataset_has_exact_spectral_ratio():
    spec = ProblemSpec("heat", count=4, resolution=64, seed=1, nu=0.05, t=1.0, k_max=16)
    ds = generate_dataset(spec)
    assert ds.inputs.shape == (4, 1, 64) and ds.metadata["nyquist_clean"]
    a = fftn(ds.inputs[:, 0], -1)
    u = fftn(ds.outputs[:, 0], -1)
    decay = np.exp(-0.05 * mode_indices(64) ** 2)
    assert np.max(np.abs(u - a * decay)) <= 1e-12
    assert validate_nyquist(2 * spec.k_max + 1, ds.grid).ok


def test_generation_is_split_invariant():
    whole = generate_dataset(ProblemSpec("poisson", count=6, resolution=32, seed=4, k_max=8))
    first = generate_dataset(ProblemSpec("poisson", count=2, resolution=32, seed=4, k_max=8))
    rest = generate_dataset(ProblemSpec("poisson", count=4, resolution=32, seed=4, k_max=8, start_index=2))
    assert np.concatenate([first.inputs, rest.inputs]).tobytes() == whole.inputs.tobytes()
    assert np.concatenate([first.outputs, rest.outputs]).tobytes() == whole.outputs.tobytes()


def test_generated_burgers_and_heat2d_shapes():
    b = generate_dataset(ProblemSpec("burgers", count=2, resolution=64, k_max=8, t=0.01, dt=1e-3))
    assert b.outputs.shape == (2, 1, 64)
    np.testing.assert_allclose(b.outputs.mean(axis=-1), b.inputs.mean(axis=-1), atol=1e-12)
    h = generate_dataset(ProblemSpec("heat2d", count=2, resolution=16, k_max=4))
    assert h.inputs.shape == (2, 1, 16, 16)


def test_downsampled_generation_matches_coarsening_the_fine_data():
    fine = generate_dataset(ProblemSpec("heat", count=3, resolution=128, seed=2, k_max=16))
    coarse = generate_dataset(ProblemSpec("heat", count=3, resolution=32, seed=2, k_max=16, downsample="stride", downsample_factor=4))
    np.testing.assert_array_equal(coarse.inputs, fine.inputs[..., ::4])
    assert not coarse.metadata["nyquist_clean"]
