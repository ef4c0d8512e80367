import numpy as np
import pytest

from halfline4nls.cli import make_profile
from halfline4nls.forcing import trace_value
from halfline4nls.fractional import TimeSignal
from halfline4nls.ibvp import (BoundaryData, ContractionError, NormInflationError, SingularMatrixError, SolveParams,
                               WindowError, build_forcing_config, check_window, determinant, entries, extend_initial,
                               mass_balance, picard_solve, rescale_data)
from halfline4nls.propagator import Field, GridSpec, SpaceSignal, trace_time
from halfline4nls.special import PoleError

SMALL = GridSpec(80.0, 256, 1.0, 129)


def test_entries():
    for lam in (-0.5, 0.0, 0.25, 1 / 3):
        a, b = entries(lam)
        assert a == trace_value(lam)
        # Neumann constant is minus the Dirichlet constant one order down
        assert abs(b + trace_value(lam - 1)) < 1e-12
    assert abs(entries(0.0)[1]) < 1e-15
    for lam in (1.0, -2.0, 2.0, -3.0):
        with pytest.raises(PoleError):
            entries(lam)


def test_determinant():
    assert abs(determinant(0.0, 1 / 3)) > 0.1
    for lam in (0.0, 0.1, 1 / 3, -0.7):
        assert abs(determinant(lam, lam)) < 1e-14
    with pytest.raises(SingularMatrixError):
        build_forcing_config(0.25, 0.25)


def test_window():
    check_window(0.0, 0.0, 0.45)
    check_window(1 / 3, 0.0, 0.45)
    with pytest.raises(WindowError):
        check_window(-0.5, 0.0, 0.45)
    with pytest.raises(WindowError):
        check_window(0.55, 0.0, 0.45)
    with pytest.raises(WindowError):
        build_forcing_config(0.0, 0.6)


def test_config_solve_inverts_matrix():
    cfg = build_forcing_config()
    g1, g2 = np.array([1.0 + 2j]), np.array([-0.5j])
    r = cfg.matrix @ np.array([g1[0], g2[0]])
    s1, s2 = cfg.solve(np.array([r[0]]), np.array([r[1]]))
    assert np.allclose([s1[0], s2[0]], [g1[0], g2[0]])


def test_solve_params_validation():
    with pytest.raises(ValueError):
        SolveParams(s=0.5)
    with pytest.raises(ValueError):
        SolveParams(b=0.5)
    with pytest.raises(ValueError):
        SolveParams(gamma_disp=1.0)


def test_extend_initial():
    x = SMALL.x
    phi = SpaceSignal(np.exp(-x**2), SMALL)
    ext = extend_initial(phi, 0.25)
    assert np.all(ext.samples[x < 0] == 0) and np.array_equal(ext.samples[x >= 0], phi.samples[x >= 0])
    jump = SpaceSignal(np.where(x >= 0, np.exp(-x**2 / 50), 0.0), SMALL)
    extend_initial(jump, 0.45)
    with pytest.raises(NormInflationError):
        extend_initial(jump, 0.45, factor=0.5)
    with pytest.raises(ValueError):
        extend_initial(phi, 0.5)


def test_zero_data_gives_zero():
    u, diag = picard_solve(BoundaryData.zeros(SMALL), build_forcing_config(), SolveParams(lam_nl=1.0))
    assert np.all(u.samples == 0) and diag.converged and diag.iterations == 1


def test_manufactured_linear_small_grid():
    data, exact = make_profile("manufactured-linear", SMALL)
    u, diag = picard_solve(data, build_forcing_config(), SolveParams())
    m = (SMALL.x >= 0) & (SMALL.x <= 20)
    err = np.linalg.norm((u.samples - exact.samples)[:, m]) / np.linalg.norm(exact.samples[:, m])
    assert err < 1e-3
    assert np.max(np.abs(trace_time(u, 0.0, 0, side="right").samples - data.f.samples)) < 1e-3
    assert mass_balance(u) < 1e-2


def test_nonlinear_contracts_and_matches_boundary_data():
    data, _ = make_profile("manufactured-linear", SMALL, 0.3)
    u, diag = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0))
    assert diag.converged and max(diag.ratios[1:]) <= 0.5
    assert np.max(np.abs(trace_time(u, 0.0, 0, side="right").samples - data.f.samples)) < 1e-3
    assert np.max(np.abs(trace_time(u, 0.0, 1, side="right").samples - data.g.samples)) < 1e-2


def test_large_data_loses_contraction():
    data, _ = make_profile("manufactured-linear", SMALL, 4.0)
    with pytest.raises(ContractionError):
        picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0, max_iters=10))


def test_delta_target_rescales_data():
    data, _ = make_profile("manufactured-linear", SMALL, 4.0)
    u, diag = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0, delta_target=2.0))
    assert diag.converged and diag.data_scale < 1
    assert diag.z_norm == pytest.approx(2.0, rel=0.1)


def test_scaling_symmetry():
    data, _ = make_profile("manufactured-linear", SMALL, 0.3)
    u, _ = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0))
    mu = 0.9
    scaled = rescale_data(data, mu)
    assert scaled.grid.T == pytest.approx(mu**-4)
    v, _ = picard_solve(scaled, build_forcing_config(), SolveParams(lam_nl=1.0))
    assert np.max(np.abs(v.samples - mu**2 * u.samples)) < 1e-4 * np.max(np.abs(u.samples))
    with pytest.raises(ValueError):
        rescale_data(data, 1.5)


def test_boundary_data_validation():
    with pytest.raises(ValueError):
        BoundaryData(TimeSignal(np.zeros(5), 0.1), TimeSignal(np.zeros(5), 0.1),
                     SpaceSignal(np.zeros(SMALL.nx), SMALL))
