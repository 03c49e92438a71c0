import numpy as np
import pytest

from otloc.arrays import steering_vector
from otloc.baselines import noncoherent_music, noncoherent_mvdr
from otloc.simulate import default_scenario, exact_covariances, generate_snapshots, sample_covariance
from otloc.spatial import make_grid

GRID = make_grid(((-0.6, 0.6), (-0.6, 0.6)), (20, 20))


def one_source_setup(position=(0.12, -0.08), power=50.0):
    scenario = default_scenario(sources=np.array([position]), powers=(power,),
                                noise_var=0.0)
    return scenario, exact_covariances(scenario)


class TestMusic:
    def test_single_source_peak_location(self):
        scenario, covariances = one_source_setup()
        spectrum = noncoherent_music(covariances, scenario.assumed_arrays, GRID, 1)
        peak = GRID.points[int(np.argmax(spectrum.values))]
        nearest = GRID.points[int(np.argmin(
            np.linalg.norm(GRID.points - scenario.sources[0], axis=1)))]
        np.testing.assert_array_equal(peak, nearest)

    def test_noise_subspace_orthogonal_at_source(self):
        scenario, covariances = one_source_setup()
        total = 0.0
        for cov, geometry in zip(covariances, scenario.assumed_arrays):
            _, vectors = np.linalg.eigh(cov)
            noise_basis = vectors[:, :-1]
            a = steering_vector(geometry, scenario.sources[0])
            a = a / np.linalg.norm(a)
            total += float(np.sum(np.abs(noise_basis.conj().T @ a) ** 2))
        assert total <= 1e-8

    def test_scaling_invariance_of_argmax(self):
        scenario, covariances = one_source_setup()
        base = noncoherent_music(covariances, scenario.assumed_arrays, GRID, 1)
        scaled = noncoherent_music([10.0 * c for c in covariances],
                                   scenario.assumed_arrays, GRID, 1)
        assert int(np.argmax(base.values)) == int(np.argmax(scaled.values))

    def test_rejects_too_many_sources(self):
        scenario, covariances = one_source_setup()
        with pytest.raises(ValueError, match="n_sources"):
            noncoherent_music(covariances, scenario.assumed_arrays, GRID, 7)

    def test_rejects_non_hermitian(self):
        scenario, covariances = one_source_setup()
        broken = covariances[0].copy()
        broken[0, 1] += 1.0
        with pytest.raises(ValueError, match="Hermitian"):
            noncoherent_music([broken, covariances[1]],
                              scenario.assumed_arrays, GRID, 1)

    def test_floor_untouched_on_noisy_data(self):
        scenario = default_scenario(seed=3)
        covariances = [sample_covariance(x) for x in generate_snapshots(scenario)]
        spectrum = noncoherent_music(covariances, scenario.assumed_arrays, GRID, 2)
        assert spectrum.values.max() < 1e12   # the 1e-12 floor never fired


class TestMvdr:
    def test_identity_covariances_flat(self):
        scenario = default_scenario()
        covariances = [np.eye(g.p) for g in scenario.assumed_arrays]
        spectrum = noncoherent_mvdr(covariances, scenario.assumed_arrays, GRID, 0.0)
        np.testing.assert_allclose(spectrum.values, 2.0, rtol=1e-10)

    def test_large_load_limit(self):
        scenario, covariances = one_source_setup()
        load = 1e9
        spectrum = noncoherent_mvdr(covariances, scenario.assumed_arrays, GRID, load)
        np.testing.assert_allclose(spectrum.values / load, 2.0, rtol=1e-6)

    def test_single_source_peak_location(self):
        # rank-1 noise-free covariances need a load on the noise-floor scale;
        # a near-zero load leaves a ridge whose grid argmax can sit cells away
        scenario, covariances = one_source_setup()
        spectrum = noncoherent_mvdr(covariances, scenario.assumed_arrays, GRID,
                                    diagonal_load=1.0)
        peak = GRID.points[int(np.argmax(spectrum.values))]
        cell = np.hypot(*GRID.cell_size)
        assert np.linalg.norm(peak - scenario.sources[0]) <= cell

    def test_singular_unloaded_covariance_raises(self):
        scenario, covariances = one_source_setup()    # rank-1, singular
        with pytest.raises(ValueError, match="singular"):
            noncoherent_mvdr(covariances, scenario.assumed_arrays, GRID, 0.0)

    def test_rejects_negative_load(self):
        scenario, covariances = one_source_setup()
        with pytest.raises(ValueError, match="load"):
            noncoherent_mvdr(covariances, scenario.assumed_arrays, GRID, -1.0)
