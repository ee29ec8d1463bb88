import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from builders import brute_force_makespan, random_instance
from cellopt.errors import ScheduleError
from cellopt.scheduler import gantt, schedule_exact, schedule_list, verify


def chain(t):
    p = np.zeros((t, t), dtype=int)
    for i in range(t - 1):
        p[i, i + 1] = 1
    return p


def test_chain_single_agent():
    s = schedule_list(chain(3), ((0,), (0,), (0,)), [2, 3, 4])
    assert s.start.tolist() == [0, 2, 5]
    assert s.makespan == 9


def test_parallel_agents():
    p = np.zeros((2, 2), dtype=int)
    assert schedule_list(p, ((0,), (1,)), [5, 3]).makespan == 5
    assert schedule_list(p, ((0,), (0,)), [5, 3]).makespan == 8


def test_contention_instance_matches_exact():
    # two chains alternating between the agents; agent 0 must idle once
    p = np.zeros((6, 6), dtype=int)
    p[0, 1] = p[1, 2] = p[3, 4] = p[4, 5] = 1
    alloc = ((0,), (1,), (0,), (0,), (1,), (0,))
    tau = [1.0, 1.0, 1.0, 1.0, 2.0, 2.0]
    lst = schedule_list(p, alloc, tau)
    ex = schedule_exact(p, alloc, tau)
    assert lst.makespan == ex.makespan == brute_force_makespan(p, alloc, tau, 2) == 6.0


def test_list_can_be_suboptimal():
    # the list rule commits agent 0 to the collaborative op before the short one
    p = np.zeros((6, 6), dtype=int)
    p[0, 1] = p[1, 2] = p[3, 4] = p[4, 5] = 1
    alloc = ((0,), (1,), (0,), (0,), (1,), (0, 1))
    tau = [2.0, 4.0, 1.0, 3.0, 2.0, 2.5]
    assert schedule_list(p, alloc, tau).makespan == 14.5
    assert schedule_exact(p, alloc, tau).makespan == brute_force_makespan(p, alloc, tau, 2) == 10.5


def test_single_agent_exact_is_sum():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p, _, tau, _ = random_instance(rng, t_max=7)
        alloc = tuple((0,) for _ in tau)
        assert schedule_exact(p, alloc, tau).makespan == pytest.approx(tau.sum())


def test_even_partition():
    p = np.zeros((4, 4), dtype=int)
    alloc = ((0,), (0,), (1,), (1,))
    assert schedule_exact(p, alloc, [1.0, 2.0, 2.0, 1.0]).makespan == 3.0


def test_too_large():
    t = 13
    with pytest.raises(ScheduleError) as err:
        schedule_exact(np.zeros((t, t), dtype=int), tuple((0,) for _ in range(t)), np.ones(t))
    assert err.value.code == "TOO_LARGE"
    assert schedule_exact(np.zeros((t, t), dtype=int), tuple((0,) for _ in range(t)), np.ones(t), max_ops=13).makespan == 13


def test_cycle_rejected():
    p = np.array([[0, 1], [1, 0]])
    with pytest.raises(ScheduleError) as err:
        schedule_list(p, ((0,), (0,)), [1.0, 1.0])
    assert err.value.code == "CYCLE"


def test_nonpositive_tau_rejected():
    with pytest.raises(ValueError):
        schedule_list(np.zeros((1, 1), dtype=int), ((0,),), [0.0])


def test_gantt_rows():
    s = schedule_list(chain(3), ((0,), (0,), (0, 1)), [2, 3, 4])
    rows = gantt(s, ((0,), (0,), (0, 1)))
    assert [(b.op, b.start, b.end) for b in rows[0]] == [(0, 0, 2), (1, 2, 5), (2, 5, 9)]
    assert [(b.op, b.start, b.end) for b in rows[1]] == [(2, 5, 9)]


def test_fixture_collaborative_on_both_rows(estop):
    from cellopt.feasibility import sample
    from cellopt.surrogate import plan_all

    x = sample(estop, np.random.default_rng(2))
    tau, _ = plan_all(estop, x)
    rows = gantt(schedule_list(estop, x.allocation, tau), x.allocation)
    assert all(any(b.op == 12 for b in row) for row in rows)


def test_exact_on_fixture_dominates_list(estop):
    from cellopt.feasibility import sample
    from cellopt.surrogate import plan_all

    rng = np.random.default_rng(4)
    for _ in range(5):
        x = sample(estop, rng)
        tau, _ = plan_all(estop, x)
        lst = schedule_list(estop, x.allocation, tau)
        ex = schedule_exact(estop, x.allocation, tau, max_ops=13)
        assert ex.makespan <= lst.makespan
        assert verify(estop.precedence_matrix, x.allocation, tau, ex) == []


seeds = st.integers(0, 2**32 - 1)


@given(seeds)
@settings(max_examples=150, deadline=None)
def test_list_schedule_is_feasible_and_tight(seed):
    p, alloc, tau, n = random_instance(np.random.default_rng(seed))
    s = schedule_list(p, alloc, tau, n)
    assert verify(p, alloc, tau, s) == []
    # no idle insertion: replaying the dispatch order reproduces every start exactly
    done, free = np.zeros(len(tau)), np.zeros(n)
    for j in s.order:
        start = max([done[i] for i in np.flatnonzero(p[:, j])] + [free[a] for a in alloc[j]] + [0.0])
        assert s.start[j] == start
        done[j] = start + tau[j]
        for a in alloc[j]:
            free[a] = done[j]


@given(seeds)
@settings(max_examples=100, deadline=None)
def test_exact_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    p, alloc, tau, n = random_instance(rng, t_max=6)
    ex = schedule_exact(p, alloc, tau, n_agents=n)
    assert verify(p, alloc, tau, ex) == []
    assert ex.makespan == brute_force_makespan(p, alloc, tau, n)
    assert ex.makespan <= schedule_list(p, alloc, tau, n).makespan


@given(seeds)
@settings(max_examples=60, deadline=None)
def test_exact_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    p, alloc, tau, n = random_instance(rng, t_max=7)
    perm = rng.permutation(len(tau))
    inv = np.argsort(perm)
    p2 = p[np.ix_(perm, perm)]
    alloc2 = tuple(alloc[i] for i in perm)
    m1 = schedule_exact(p, alloc, tau, n_agents=n).makespan
    m2 = schedule_exact(p2, alloc2, tau[perm], n_agents=n).makespan
    assert m1 == pytest.approx(m2, abs=1e-9)
    assert np.array_equal(perm[inv], np.arange(len(tau)))
