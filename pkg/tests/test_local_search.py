import itertools
from fractions import Fraction

import numpy as np
import pytest
from helpers import line_instance, random_instance

from stableclust import (
    EUCLIDEAN,
    BudgetExceeded,
    Instance,
    InstanceError,
    SearchConfig,
    cost_drop_witness,
    is_nearly_good,
    lift_penalties,
    psi,
    rho_swap_search,
    solve_exact,
)
from stableclust.local_search import neighbourhood_size


def test_line_search_rho_one():
    sol, trace = rho_swap_search(line_instance(), SearchConfig(rho=1, seed_solution={0, 1}))
    assert sol.cost == 2
    assert sol.centres in solve_exact(line_instance())
    assert trace.terminated_reason == "local_opt"
    assert trace.swaps == 1


def test_k_equals_c_returns_immediately():
    base = line_instance()
    inst = Instance("kmedian", base.points, base.centres, EUCLIDEAN, 4)
    sol, trace = rho_swap_search(inst)
    assert sol.centres == frozenset(base.centre_ids)
    assert trace.swaps == 0


@pytest.mark.parametrize("seed", range(5))
def test_lifted_search_keeps_dummy_and_finds_penalty_optimum(seed):
    inst = random_instance(np.random.default_rng(100 + seed), 9, 6, 2, "kmedian", penalties=True)
    aug = lift_penalties(inst)
    sol, _ = rho_swap_search(aug, SearchConfig(rho=2))
    assert aug.dummy_id in sol.centres
    assert aug.restrict(sol.centres) in solve_exact(inst)


def test_costs_strictly_decrease():
    inst = random_instance(np.random.default_rng(1), 14, 9, 3, "kmeans")
    _, trace = rho_swap_search(inst, SearchConfig(rho=1))
    costs = [st.cost for st in trace.iterations]
    assert all(b < a for a, b in zip(costs, costs[1:]))
    for a, b in zip(trace.iterations, trace.iterations[1:]):
        assert len(a.solution - b.solution) <= 1


def test_best_improvement_move():
    inst = random_instance(np.random.default_rng(2), 10, 7, 2)
    _, trace = rho_swap_search(inst, SearchConfig(rho=1, max_iters=1))
    S0, S1 = trace.iterations[0].solution, trace.iterations[1].solution
    best = min(inst.cost((S0 - {o}) | {i}) for o in S0 for i in set(inst.centre_ids) - S0)
    assert inst.cost(S1) == best
    assert trace.terminated_reason == "max_iters"


def test_pins_are_kept():
    inst = random_instance(np.random.default_rng(3), 10, 7, 3)
    pin = inst.centre_ids[-1]
    sol, _ = rho_swap_search(inst, SearchConfig(rho=2, pin_centres={pin}))
    assert pin in sol.centres


def test_invalid_pins():
    inst = line_instance()
    with pytest.raises(InstanceError):
        rho_swap_search(inst, SearchConfig(pin_centres={99}))
    with pytest.raises(InstanceError):
        rho_swap_search(inst, SearchConfig(pin_centres={0, 1, 4}))


def test_bad_seed_solution():
    with pytest.raises(InstanceError):
        rho_swap_search(line_instance(), SearchConfig(seed_solution={0}))


def test_config_validation():
    with pytest.raises(InstanceError):
        SearchConfig(rho=0)
    with pytest.raises(InstanceError):
        SearchConfig(max_iters=0)


def test_neighbourhood_limit():
    assert neighbourhood_size(3, 10, 0, 1) == 3 * 7
    assert neighbourhood_size(3, 10, 0, 2) == 21 + 3 * 21
    inst = random_instance(np.random.default_rng(0), 60, 60, 30)
    with pytest.raises(BudgetExceeded):
        rho_swap_search(inst, SearchConfig(rho=10))


def test_trace_text():
    _, trace = rho_swap_search(line_instance(), SearchConfig(rho=1, seed_solution={0, 1}))
    text = trace.to_text()
    assert text.splitlines()[0] == "rho 1"
    assert "iter 0 in - out - cost 7 solution 0,1" in text
    assert "iter 1 in 4 out 0 cost 2 solution 1,4" in text


def test_optimal_is_nearly_good():
    inst = line_instance()
    opt = solve_exact(inst)
    for S in opt.solutions:
        assert is_nearly_good(inst, S, opt, Fraction(1, 10))[0]


def test_suboptimal_not_nearly_good_at_zero_eps():
    inst = line_instance()
    good, witness = is_nearly_good(inst, {0, 1}, solve_exact(inst), 0)
    assert not good and witness is not None


def test_nearly_good_matches_direct_inequality():
    inst = line_instance()
    opt = solve_exact(inst)
    eps = Fraction(1, 10)
    S = frozenset({0, 5})
    direct = all(inst.cost(S) <= inst.cost(F) + 2 * eps * psi(inst, S, F) for F in opt.solutions)
    assert is_nearly_good(inst, S, opt, eps)[0] == direct


def test_nearly_good_needs_optima():
    with pytest.raises(InstanceError):
        is_nearly_good(line_instance(), {0, 4}, [], 0)


def test_cost_drop_witness_same_solution():
    assert cost_drop_witness(line_instance(), {0, 4}, {0, 4}, Fraction(1, 10), 1) is None


def test_cost_drop_witness_line():
    inst = line_instance()
    S, O, eps = frozenset({0, 1}), frozenset({0, 4}), Fraction(1, 10)
    w = cost_drop_witness(inst, S, O, eps, 1)
    assert w is not None and len(S - w) == 1
    bound = inst.cost(S) + (inst.cost(O) - inst.cost(S) + eps * psi(inst, S, O)) / inst.k
    assert inst.cost(w) <= bound
    # by hand: 1-swap neighbours of {0,1}
    ok = [T for T in ({0, 4}, {0, 5}, {1, 4}, {1, 5}) if inst.cost(T) <= bound]
    assert frozenset(w) in {frozenset(T) for T in ok}


@pytest.mark.parametrize("seed", range(4))
def test_cost_drop_witness_exists_at_rho_k(seed):
    inst = random_instance(np.random.default_rng(50 + seed), 9, 6, 3)
    eps = Fraction(1, 10)
    O = solve_exact(inst).solutions[0]
    for S in itertools.combinations(inst.centre_ids, 3):
        S = frozenset(S)
        if inst.cost(S) > inst.cost(O) + eps * psi(inst, S, O):
            assert cost_drop_witness(inst, S, O, eps, inst.k) is not None
