import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import free_gaussian, two_slit_screen
from pilotwave.errors import (BoundaryMassError, ConfigError, GeometryError, GridMismatch,
                              PhaseWrapRisk, ZeroBranch)
from pilotwave.evolution import (EvolutionSpec, Potential, SlitConfig, boundary_mass,
                                 decoherence_overlap, evolve, evolve_snapshots,
                                 interference_decomposition, pointer_measure, prepare_double_slit)
from pilotwave.experiments import double_slit_setup
from pilotwave.wavefn import Grid, WaveFunction, density, gaussian_wavefunction, normalize, overlap


def moments(wf):
    x = wf.grid.axis()
    w = np.abs(wf.values) ** 2 * wf.grid.cell_volume
    mean = np.sum(w * x)
    return mean, np.sqrt(np.sum(w * (x - mean) ** 2))


class TestEvolve:
    def test_free_gaussian_against_closed_form(self, line40):
        psi = gaussian_wavefunction(line40, 0.0, 1.0, 2.0)
        out = evolve(psi, EvolutionSpec(0.001, 1000))
        ref = free_gaussian(line40.axis(), 1.0, 1.0, 2.0)
        assert np.max(np.abs(out.values - ref)) < 1e-10

    def test_free_gaussian_moments(self, line40):
        sigma, k, t = 1.0, 2.0, 1.0
        out = evolve(gaussian_wavefunction(line40, 0.0, sigma, k), EvolutionSpec(0.001, 1000))
        mean, width = moments(out)
        assert mean == pytest.approx(k * t, rel=1e-3)
        assert width == pytest.approx(np.sqrt(sigma**2 + t**2 / (4 * sigma**2)), rel=1e-3)

    def test_harmonic_ground_state_period(self):
        g = Grid.line(-16, 16, 512)
        x = g.axis()
        ground = WaveFunction(g, np.pi**-0.25 * np.exp(-x**2 / 2))
        out = evolve(ground, EvolutionSpec(2 * np.pi / 4000, 4000, potential=Potential.harmonic()))
        assert np.max(np.abs(np.abs(out.values) ** 2 - np.abs(ground.values) ** 2)) < 1e-6

    def test_zero_steps_identity(self, line20):
        psi = gaussian_wavefunction(line20, 1.0, 1.0, 1.0)
        assert evolve(psi, EvolutionSpec(0.01, 0)).values.tobytes() == psi.values.tobytes()

    def test_norm_over_many_steps(self):
        g = Grid.line(-16, 16, 512)
        psi = gaussian_wavefunction(g, 1.0, 0.8, 1.0)
        out = evolve(psi, EvolutionSpec(0.01, 10_000, potential=Potential.harmonic()))
        assert abs(out.norm() - 1) < 1e-8

    @given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
           st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
    @settings(max_examples=15, deadline=None)
    def test_linearity(self, alpha, beta):
        g = Grid.line(-16, 16, 256)
        f = gaussian_wavefunction(g, -2.0, 1.0, 1.0)
        h = gaussian_wavefunction(g, 1.5, 0.7, -0.5)
        spec = EvolutionSpec(0.01, 100, potential=Potential.harmonic(0.5))
        lhs = evolve(alpha * f + beta * h, spec, guard=False).values
        rhs = alpha * evolve(f, spec).values + beta * evolve(h, spec).values
        assert np.max(np.abs(lhs - rhs)) < 1e-8

    @pytest.mark.parametrize("potential", [Potential.zero(), Potential.harmonic(0.7),
                                           Potential.linear(0.2)])
    def test_time_reversal(self, potential):
        g = Grid.line(-20, 20, 512)
        psi = gaussian_wavefunction(g, 0.5, 1.0, 1.0)
        spec = EvolutionSpec(0.005, 400, potential=potential)
        back = evolve(evolve(psi, spec), spec.reversed())
        assert np.max(np.abs(back.values - psi.values)) < 1e-8

    def test_strang_second_order(self):
        g = Grid.line(-8, 8, 128)
        psi = gaussian_wavefunction(g, 1.0, 1.0, 0.5)
        pot = Potential.harmonic(1.0, 0.3)
        ref = evolve(psi, EvolutionSpec(0.001, 1000, potential=pot)).values
        err = [np.max(np.abs(evolve(psi, EvolutionSpec(dt, round(1 / dt), potential=pot)).values - ref))
               for dt in (0.04, 0.02)]
        assert 3.5 < err[0] / err[1] < 4.5

    def test_phase_wrap_guard(self):
        g = Grid.line(-16, 16, 256)
        with pytest.raises(PhaseWrapRisk):
            evolve(gaussian_wavefunction(g), EvolutionSpec(0.1, 1, potential=Potential.harmonic(2.0)))

    def test_power_of_two_required(self):
        g = Grid.line(-16, 16, 200)
        with pytest.raises(GridMismatch):
            evolve(gaussian_wavefunction(g), EvolutionSpec(0.01, 1))

    def test_boundary_guard(self):
        g = Grid.line(-8, 8, 256)
        psi = gaussian_wavefunction(g, 0.0, 1.0, 8.0)
        with pytest.raises(BoundaryMassError):
            evolve(psi, EvolutionSpec(0.01, 100))

    @pytest.mark.parametrize("kwargs", [dict(dt=0.0, steps=1), dict(dt=0.1, steps=-1),
                                        dict(dt=0.1, steps=1, mass=0.0)])
    def test_spec_validation(self, kwargs):
        with pytest.raises(ConfigError):
            EvolutionSpec(**kwargs)

    def test_snapshots(self, line20):
        snaps = evolve_snapshots(gaussian_wavefunction(line20), EvolutionSpec(0.01, 20), 5)
        assert len(snaps) == 5
        single = evolve(gaussian_wavefunction(line20), EvolutionSpec(0.01, 20))
        assert np.max(np.abs(snaps[-1].values - single.values)) < 1e-13


class TestPotential:
    def test_slit_barrier(self):
        g = Grid.line(-8, 8, 256)
        v = Potential.slit_barrier(50.0, 4.0, 0.5).on(g)
        x = g.axis()
        assert v[np.argmin(np.abs(x - 2))] == 0 and v[np.argmin(np.abs(x + 2))] == 0
        assert v[np.argmin(np.abs(x))] == 50.0

    def test_barrier_height_positive(self):
        with pytest.raises(ConfigError):
            Potential.slit_barrier(0.0, 4.0, 0.5)


class TestPointer:
    @pytest.fixture
    def psi0(self, line40):
        return gaussian_wavefunction(line40)

    def test_single_branch(self, psi0, line40):
        sf = pointer_measure(1.0, 0.0, psi0, 1.0, 3.0)
        assert sf.down.norm() == 0.0
        ref = gaussian_wavefunction(line40, 3.0)
        assert np.max(np.abs(sf.up.values - ref.values)) < 1e-12

    def test_even_split_decoheres(self, psi0):
        r = np.sqrt(0.5)
        sf = pointer_measure(r, r, psi0, 1.0, 10.0)  # each branch moved 10 sigma
        m1, m2 = sf.branch_masses()
        assert m1 == pytest.approx(0.5, abs=1e-8) and m2 == pytest.approx(0.5, abs=1e-8)
        assert decoherence_overlap(sf) < 1e-10

    def test_born_weights(self, psi0):
        sf = pointer_measure(np.sqrt(0.3), 1j * np.sqrt(0.7), psi0, 1.0, 10.0)
        m1, m2 = sf.branch_masses()
        assert abs(m1 - 0.3) < 1e-8 and abs(m2 - 0.7) < 1e-8

    def test_overlap_before_measurement(self, psi0):
        r = np.sqrt(0.5)
        assert decoherence_overlap(pointer_measure(r, r, psi0, 1.0, 0.0)) == pytest.approx(1, abs=1e-9)

    def test_overlap_closed_form(self, psi0):
        r = np.sqrt(0.5)
        sf = pointer_measure(r, r, psi0, 0.5, 1.0)  # displacement sigma
        assert decoherence_overlap(sf) == pytest.approx(np.exp(-1 / 8), abs=1e-3)

    def test_overlap_monotone(self, psi0):
        r = np.sqrt(0.5)
        vals = [decoherence_overlap(pointer_measure(r, r, psi0, 1.0, t))
                for t in np.linspace(0, 4, 17)]
        assert np.all(np.diff(vals) < 0)

    def test_zero_branch(self, psi0):
        with pytest.raises(ZeroBranch):
            decoherence_overlap(pointer_measure(1.0, 0.0, psi0, 1.0, 2.0))

    def test_unnormalized_coefficients(self, psi0):
        with pytest.raises(ConfigError):
            pointer_measure(1.0, 1.0, psi0, 1.0, 1.0)

    def test_with_free_dynamics_keeps_masses(self, psi0):
        sf = pointer_measure(np.sqrt(0.3), np.sqrt(0.7), psi0, 1.0, 5.0, mass=1.0)
        assert abs(sf.branch_masses()[0] - 0.3) < 1e-8


class TestDoubleSlit:
    def test_mirror_symmetry(self):
        grid, cfg1, spec, _ = double_slit_setup("slit1")
        _, cfg2, _, _ = double_slit_setup("slit2")
        d1 = density(prepare_double_slit(grid, cfg1, spec)).weights
        d2 = density(prepare_double_slit(grid, cfg2, spec)).weights
        np.testing.assert_allclose(d2, d1[grid.mirror_index()], atol=1e-9)

    def test_slit_plane_disjoint(self):
        grid, both, _, _ = double_slit_setup("both")
        spec0 = EvolutionSpec(0.005, 0)
        d = density(prepare_double_slit(grid, both, spec0)).weights
        g1 = np.abs(gaussian_wavefunction(grid, 2.0, 0.25).values) ** 2
        g2 = np.abs(gaussian_wavefunction(grid, -2.0, 0.25).values) ** 2
        np.testing.assert_allclose(d, 0.5 * g1 + 0.5 * g2, atol=1e-9)

    def test_screen_matches_direct_sum(self):
        grid, both, spec, _ = double_slit_setup("both")
        psi = prepare_double_slit(grid, both, spec)
        x = grid.axis()
        ref = two_slit_screen(x, spec.duration, both.separation, both.packet_sigma)
        ref = np.abs(ref) ** 2
        ref /= ref.sum() * grid.cell_volume
        dens = density(psi).weights
        assert np.max(np.abs(dens - ref)) < 1e-9
        centre = np.argmin(np.abs(x))
        window = slice(centre - 20, centre + 21)
        assert np.argmax(dens[window]) == 20  # central maximum at x = 0
        # first minima either side of the centre sit at mirror positions
        right = centre + np.argmax(np.diff(dens[centre:]) > 0)
        left = centre - np.argmax(np.diff(dens[centre::-1]) > 0)
        assert x[right] == pytest.approx(-x[left], abs=1e-9)

    def test_geometry_errors(self):
        with pytest.raises(GeometryError):
            SlitConfig("both", separation=0.4, width=0.5)
        g = Grid.line(-2, 2, 256)
        with pytest.raises(GeometryError):
            prepare_double_slit(g, SlitConfig("both"), EvolutionSpec(0.01, 1))


class TestDecomposition:
    def test_zero_partner(self, line20):
        psi = gaussian_wavefunction(line20, 1.0, 1.0, 2.0)
        dec = interference_decomposition(psi, 0 * psi)
        assert not dec.cross_term.any()
        np.testing.assert_allclose(dec.sum_density.weights, dec.no_interference_density.weights)

    def test_quadrature_partner(self, line20):
        psi = gaussian_wavefunction(line20, 1.0, 1.0, 2.0)
        dec = interference_decomposition(psi, 1j * psi)
        assert np.max(np.abs(dec.cross_term)) < 1e-15
        assert dec.sum_density.weights.max() > 0

    def test_fringes(self):
        grid, c1, spec, _ = double_slit_setup("slit1")
        _, c2, _, _ = double_slit_setup("slit2")
        dec = interference_decomposition(prepare_double_slit(grid, c1, spec),
                                         prepare_double_slit(grid, c2, spec))
        assert dec.identity_residual() < 1e-12
        assert abs(dec.cross_term.sum() * grid.cell_volume) < 1e-6
        assert np.max(np.abs(dec.cross_term)) > 0.1 * dec.raw_sum.max()

    @given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.5, 2))
    @settings(max_examples=25, deadline=None)
    def test_identity_random(self, a, b, sigma):
        g = Grid.line(-16, 16, 256)
        dec = interference_decomposition(gaussian_wavefunction(g, a, sigma, 1.3),
                                         gaussian_wavefunction(g, b, 1.0, -0.4))
        assert dec.identity_residual() < 1e-12

    def test_grid_mismatch(self, line20, line40):
        with pytest.raises(GridMismatch):
            interference_decomposition(gaussian_wavefunction(line20), gaussian_wavefunction(line40))


def test_boundary_mass_reading(line40):
    assert boundary_mass(gaussian_wavefunction(line40)) < 1e-100
    assert boundary_mass(gaussian_wavefunction(line40, 37.0)) > 0.1


def test_gaussian_overlap_unchanged_by_common_evolution(line40):
    f = gaussian_wavefunction(line40, -1.0)
    g = gaussian_wavefunction(line40, 1.0)
    spec = EvolutionSpec(0.01, 200, potential=Potential.harmonic(0.5))
    assert abs(overlap(evolve(f, spec), evolve(g, spec))) == pytest.approx(abs(overlap(f, g)), abs=1e-10)
