import pytest

from wavelab.diagnostics import ChainConfig, check_chain, compute_M, select_t2_delta
from wavelab.profiles import bump_profile, zero_profile
from wavelab.solver import CharGrid, Problem, linear_radial, solve_march

RHO = 1.0


def blowup_problem(grid, amplitude=10.0, p=2.0, A=1.0, rho=RHO):
    gr = grid.r_values()
    return Problem(p, A, zero_profile(rho, gr), bump_profile(amplitude, rho, gr), rho)


@pytest.fixture(scope="session")
def blowup_run_coarse():
    """Reference blow-up run at h = rho/32, cheap enough for unit tests."""
    grid = CharGrid(RHO / 32, RHO + 16.0, 16.0)
    prob = blowup_problem(grid)
    field = solve_march(prob, grid, residual_nodes=0)
    assert field.status == "blown_up"
    return prob, field


@pytest.fixture(scope="session")
def crit4_run():
    """The acceptance blow-up run at h = rho/128."""
    grid = CharGrid(RHO / 128, RHO + 16.0, 16.0)
    prob = blowup_problem(grid)
    field = solve_march(prob, grid, residual_nodes=0)
    return prob, field


@pytest.fixture(scope="session")
def crit4_chain(crit4_run):
    """Selected cone base, constants, and full chain report for the run."""
    prob, field = crit4_run
    u0 = linear_radial(prob.f_profile, prob.g_profile, field.grid)
    t2, delta = select_t2_delta(field, u0, prob.rho)
    cfg = ChainConfig(prob.p, prob.A, t2, delta)
    cfg = cfg.with_constants(compute_M(field, t2, delta, prob.p))
    report = check_chain(field, cfg)
    return field, report
