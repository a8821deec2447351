"""Weighted A* engine: penalty arithmetic, oracle optimality, termination."""

import numpy as np
import pytest

from braidc.baselines import BfsHeuristic, BfsTable, bfs_distance
from braidc.errors import EmptyGateSet
from braidc.gateset import (ACTIONS, Action, BraidWord, default_gateset,
                            word_to_unitary)
from braidc.search import (CompileReport, SearchConfig, SearchNode, _NodeStore,
                           compile_with_accuracy, complexity_config,
                           decimal_penalty, evaluate_f, search)
from braidc.su2 import (UnitQuaternion, Unitary2, quaternion_distance,
                        random_su2, unitary_to_quaternion)

from conftest import dist_up_to_phase


@pytest.fixture(scope="module")
def table():
    return BfsTable.build(8)


@pytest.fixture(scope="module")
def oracle(table):
    return BfsHeuristic(table)


def random_reduced_word(rng, length):
    word = []
    while len(word) < length:
        a = ACTIONS[rng.integers(0, 4)]
        if word and a is word[-1].inverse_action:
            continue
        word.append(a)
    return BraidWord(tuple(word))


# ---- decimal penalty and f


def test_penalty_integral_j_is_zero():
    assert decimal_penalty(3.0, 400.0) == 0.0


def test_penalty_half_integer():
    assert abs(decimal_penalty(1.5, 400.0) - 200.0 / 3.0) < 1e-12


def test_penalty_j_2_4():
    assert abs(decimal_penalty(2.4, 400.0) - 80.0 / 3.0) < 1e-12


def test_penalty_near_goal_is_zero():
    assert decimal_penalty(1e-9, 400.0) == 0.0
    assert decimal_penalty(0.0, 400.0) == 0.0
    assert decimal_penalty(5e-10, 400.0) == 0.0


def test_penalty_maximized_near_half_integers():
    js = np.linspace(2.05, 2.95, 19)
    pens = [decimal_penalty(float(j), 400.0) for j in js]
    assert np.argmax(pens) == 9    # J = 2.5


def test_evaluate_f_examples():
    node = SearchNode(state=None, G=4.0, J=2.0)
    assert evaluate_f(node, SearchConfig(lam=1.0, gamma=400.0)) == 6.0
    node = SearchNode(state=None, G=123.0, J=2.0)
    assert evaluate_f(node, SearchConfig(lam=0.0, gamma=400.0)) == 2.0
    node = SearchNode(state=None, G=0.0, J=1.5)
    f = evaluate_f(node, SearchConfig(lam=1.0, gamma=400.0))
    assert abs(f - (1.5 + 200.0 / 3.0)) < 1e-12


# ---- search behaviour


def test_identity_target_empty_word(oracle, fib):
    rep = search(Unitary2(np.eye(2)), oracle, fib, SearchConfig())
    assert rep.word.to_text() == ""
    assert rep.distance == 0.0
    assert rep.terminated_by == "Accuracy"
    assert rep.depth_reached == 0
    assert rep.length == 0


def test_sigma1_target_single_token(oracle, fib):
    rep = search(fib.unitary(Action.S1), oracle, fib, SearchConfig())
    assert rep.word.to_text() == "s1"
    assert rep.terminated_by == "Accuracy"


def test_oracle_search_returns_optimal_words(table, oracle, fib):
    """Perfect heuristic, lambda=1, gamma=0: optimal length at depth <= 8."""
    rng = np.random.default_rng(404)
    cfg = SearchConfig(gamma=0.0)
    for depth in range(1, 9):
        at_depth = np.flatnonzero(table.depth == depth)
        for idx in rng.choice(at_depth, size=3, replace=False):
            target = word_to_unitary(table.word_for(int(idx)), fib)
            rep = search(target, oracle, fib, cfg)
            assert rep.terminated_by == "Accuracy"
            assert rep.length == depth
            realized = word_to_unitary(rep.word, fib)
            assert dist_up_to_phase(realized.matrix, target.matrix) < 1e-9


def test_root_states_cover_brute_force_radius(table, oracle, fib):
    """Targets within D_bf actions terminate with zero search iterations."""
    rng = np.random.default_rng(7)
    for depth in range(1, 6):
        word = random_reduced_word(rng, depth)
        target = word_to_unitary(word, fib)
        rep = search(target, oracle, fib, SearchConfig(D_bf=5))
        assert rep.depth_reached == 0
        assert rep.terminated_by == "Accuracy"
        assert rep.length == bfs_distance(unitary_to_quaternion(target), table)


def test_word_reproduces_distance(oracle, fib):
    """Re-measuring the reported word's distance agrees to 1e-10."""
    rng = np.random.default_rng(11)
    for _ in range(5):
        target = random_su2(rng)
        rep = search(target, oracle, fib, SearchConfig(D_max=10))
        realized = word_to_unitary(rep.word, fib)
        re_measured = quaternion_distance(unitary_to_quaternion(realized),
                                          unitary_to_quaternion(target))
        assert abs(re_measured - rep.distance) < 1e-10
        assert rep.length == len(rep.word)


def test_distance_non_increasing_in_depth_cap(oracle, fib):
    rng = np.random.default_rng(29)
    target = random_su2(rng)
    dists = [search(target, oracle, fib, SearchConfig(D_max=d, gamma=0.0)).distance
             for d in (1, 4, 8, 16)]
    assert all(a >= b - 1e-12 for a, b in zip(dists, dists[1:]))


def test_eviction_keeps_reports_valid(oracle, fib):
    rng = np.random.default_rng(31)
    target = random_su2(rng)
    cfg = SearchConfig(D_max=12, N=16, max_open=32)
    rep = search(target, oracle, fib, cfg)
    realized = word_to_unitary(rep.word, fib)
    re_measured = quaternion_distance(unitary_to_quaternion(realized),
                                      unitary_to_quaternion(target))
    assert abs(re_measured - rep.distance) < 1e-10
    assert rep.nodes_expanded <= cfg.N * cfg.D_max


def test_epsilon_one_terminates_in_bruteforce_phase(oracle, fib):
    rng = np.random.default_rng(47)
    cfg = SearchConfig(epsilon_T=1.0)
    rep = compile_with_accuracy(random_su2(rng), oracle, fib, cfg)
    assert rep.terminated_by == "Accuracy"
    assert rep.depth_reached <= cfg.D_bf


def test_epsilon_zero_always_depth_cap(oracle, fib):
    cfg = SearchConfig(epsilon_T=0.0, D_max=3)
    rep = compile_with_accuracy(random_su2(5), oracle, fib, cfg)
    assert rep.terminated_by == "DepthCap"
    # even an exactly reachable target cannot beat a zero accuracy goal
    rep = search(default_gateset().unitary(Action.S1), oracle, fib, cfg)
    assert rep.terminated_by == "DepthCap"


def test_compile_with_accuracy_requires_epsilon(oracle, fib):
    with pytest.raises(ValueError):
        compile_with_accuracy(random_su2(1), oracle, fib, SearchConfig())


def test_complexity_config_preset():
    cfg = complexity_config(1e-3)
    assert cfg.D_max == 1000
    assert cfg.epsilon_T == 1e-3
    assert cfg.lam == 1.0


def test_non_unitary_target_rejected(oracle, fib):
    from braidc.errors import NonUnitaryInput
    with pytest.raises(NonUnitaryInput):
        search(np.array([[1.0, 1.0], [0.0, 1.0]]), oracle, fib, SearchConfig())


def test_empty_gate_set_rejected(oracle):
    class Hollow:
        unitaries = {}

    with pytest.raises(EmptyGateSet):
        search(Unitary2(np.eye(2)), oracle, Hollow(), SearchConfig())


def test_depth_reached_counts_iterations(oracle, fib):
    rng = np.random.default_rng(59)
    rep = search(random_su2(rng), oracle, fib, SearchConfig(D_max=4, epsilon_T=0.0))
    assert rep.depth_reached == 4


# ---- dedupe grid geometry


def test_grid_keys_separate_distant_states():
    """States further apart than 2*sqrt(2)*grid never share a grid key."""
    grid = 1e-9
    store = _NodeStore(grid)
    rng = np.random.default_rng(73)
    base = rng.standard_normal(4)
    base /= np.linalg.norm(base)
    for scale in (3e-9, 1e-8, 1e-6, 1e-2):
        bump = rng.standard_normal(4)
        bump -= base * (base @ bump)
        bump *= scale / np.linalg.norm(bump)
        other = base + bump
        other /= np.linalg.norm(other)
        d = quaternion_distance(UnitQuaternion.from_components(base.copy()),
                                UnitQuaternion.from_components(other))
        keys = store.keys_of(np.stack([base, other]))
        if d > 2.0 * np.sqrt(2.0) * grid:
            assert keys[0] != keys[1]


def test_identical_states_share_grid_key():
    store = _NodeStore(1e-9)
    rng = np.random.default_rng(79)
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    keys = store.keys_of(np.stack([q, q.copy()]))
    assert keys[0] == keys[1]


# ---- report serialization


def test_report_json_round_trip():
    rep = CompileReport(word=BraidWord.from_text("s1 s2i"), distance=0.25,
                        length=2, nodes_expanded=7, depth_reached=3,
                        wall_time=0.5, terminated_by="DepthCap",
                        config={"lambda": 1.0})
    doc = rep.to_json()
    assert set(doc) == {"word", "distance", "length", "nodes_expanded",
                        "depth_reached", "wall_time_s", "terminated_by",
                        "config"}
    back = CompileReport.from_json(doc)
    assert back.word.to_text() == "s1 s2i"
    assert back.distance == 0.25
    assert back.terminated_by == "DepthCap"
