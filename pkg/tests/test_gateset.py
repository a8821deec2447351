"""Oracle tests for the Fibonacci gate set and braid-word algebra."""

import numpy as np
import pytest

from braidc import su2
from braidc.gateset import (ACTIONS, Action, BraidWord, GateSet, apply_action,
                            default_gateset, fibonacci_gateset, free_reduce,
                            invert_word, word_to_unitary)
from braidc.su2 import quaternion_distance, quaternion_to_unitary, unitary_to_quaternion

from conftest import mat_mul_2x2, dist_up_to_phase


def random_word(rng, length):
    return BraidWord(tuple(ACTIONS[i] for i in rng.integers(0, 4, size=length)))


class TestActions:
    def test_exactly_four(self):
        assert len(ACTIONS) == 4
        assert len({a for a in Action}) == 4

    def test_fields(self):
        assert Action.S1.generator == 1 and not Action.S1.inverse
        assert Action.S2I.generator == 2 and Action.S2I.inverse

    def test_inverse_pairing(self):
        for a in ACTIONS:
            assert a.inverse_action.inverse_action is a
            assert a.inverse_action.generator == a.generator

    def test_tokens(self):
        assert [a.token for a in ACTIONS] == ["s1", "s1i", "s2", "s2i"]
        assert Action.from_token("s2i") is Action.S2I
        with pytest.raises(ValueError):
            Action.from_token("s3")


class TestFibonacciGateSet:
    def test_sigma1_diagonal_entries(self, fib):
        s1 = fib.unitary(Action.S1).matrix
        assert abs(s1[0, 0] - np.exp(-4j * np.pi / 5)) < 1e-15
        assert abs(s1[1, 1] - np.exp(3j * np.pi / 5)) < 1e-15
        assert abs(s1[0, 1]) == 0.0 and abs(s1[1, 0]) == 0.0

    def test_inverse_closure(self, fib):
        for a in ACTIONS:
            prod = mat_mul_2x2(fib.unitary(a).matrix, fib.unitary(a.inverse_action).matrix)
            assert np.linalg.norm(np.array(prod) - np.eye(2)) < 1e-12

    def test_braid_relation(self, fib):
        # sigma1 sigma2 sigma1 = sigma2 sigma1 sigma2, via an independent
        # entry-by-entry 2x2 multiply
        s1 = fib.unitary(Action.S1).matrix
        s2 = fib.unitary(Action.S2).matrix
        lhs = mat_mul_2x2(mat_mul_2x2(s1, s2), s1)
        rhs = mat_mul_2x2(mat_mul_2x2(s2, s1), s2)
        assert np.linalg.norm(np.array(lhs) - np.array(rhs)) < 1e-12

    def test_sigma1_tenth_power_is_identity(self, fib):
        p = np.eye(2, dtype=complex)
        for _ in range(10):
            p = np.array(mat_mul_2x2(fib.unitary(Action.S1).matrix, p))
        assert np.linalg.norm(p - np.eye(2)) < 1e-12

    def test_f_conjugation_and_involution(self, fib):
        phi = (np.sqrt(5) + 1) / 2
        f = np.array([[1 / phi, phi ** -0.5], [phi ** -0.5, -1 / phi]])
        assert np.linalg.norm(np.array(mat_mul_2x2(f, f)) - np.eye(2)) < 1e-12
        s1 = fib.unitary(Action.S1).matrix
        s2 = fib.unitary(Action.S2).matrix
        assert np.linalg.norm(np.array(mat_mul_2x2(mat_mul_2x2(f, s1), f)) - s2) < 1e-12

    def test_default_costs_are_one(self, fib):
        for a in ACTIONS:
            assert fib.cost(a) == 1.0

    def test_rejects_non_closed_set(self):
        bad = {
            Action.S1: su2.named_gate("X"),
            Action.S1I: su2.named_gate("Y"),
            Action.S2: su2.named_gate("Z"),
            Action.S2I: su2.named_gate("Z"),
        }
        with pytest.raises(ValueError):
            GateSet(unitaries=bad)

    def test_default_gateset_cached(self):
        assert default_gateset() is default_gateset()


class TestApplyAction:
    def test_identity_state(self, fib):
        q0 = su2.UnitQuaternion.identity()
        got = apply_action(q0, Action.S1, fib)
        want = unitary_to_quaternion(fib.unitary(Action.S1))
        assert np.allclose(got.components, want.components, atol=1e-12)

    def test_inverse_cancels(self, fib):
        rng = np.random.default_rng(20)
        q = unitary_to_quaternion(su2.random_su2(rng))
        for a in ACTIONS:
            back = apply_action(apply_action(q, a, fib), a.inverse_action, fib)
            assert np.linalg.norm(back.components - q.components) < 1e-12

    def test_matches_matrix_oracle(self, fib):
        rng = np.random.default_rng(21)
        for _ in range(100):
            q = unitary_to_quaternion(su2.random_su2(rng))
            a = ACTIONS[rng.integers(0, 4)]
            got = quaternion_to_unitary(apply_action(q, a, fib))
            want = mat_mul_2x2(fib.unitary(a).matrix, quaternion_to_unitary(q).matrix)
            assert dist_up_to_phase(got.matrix, np.array(want)) < 1e-10


class TestWords:
    def test_text_round_trip(self):
        w = BraidWord.from_text("s1 s2i s2i s1")
        assert w.to_text() == "s1 s2i s2i s1"
        assert len(w) == 4
        assert BraidWord.from_text("").tokens == ()

    def test_empty_word_is_identity(self, fib):
        assert np.allclose(word_to_unitary(BraidWord(), fib).matrix, np.eye(2))

    def test_cancelling_pair(self, fib):
        u = word_to_unitary(BraidWord.from_text("s1 s1i"), fib)
        assert np.linalg.norm(u.matrix - np.eye(2)) < 1e-12

    def test_time_order_convention(self, fib):
        # leftmost acts first: "s1 s2" realizes sigma2 @ sigma1
        u = word_to_unitary(BraidWord.from_text("s1 s2"), fib)
        want = mat_mul_2x2(fib.unitary(Action.S2).matrix, fib.unitary(Action.S1).matrix)
        assert np.linalg.norm(u.matrix - np.array(want)) < 1e-12

    def test_braid_relation_at_word_level(self, fib):
        u1 = word_to_unitary(BraidWord.from_text("s1 s2 s1"), fib)
        u2 = word_to_unitary(BraidWord.from_text("s2 s1 s2"), fib)
        assert np.linalg.norm(u1.matrix - u2.matrix) < 1e-12

    def test_invert_word_example(self):
        w = BraidWord.from_text("s1 s2i")
        assert invert_word(w).to_text() == "s2 s1i"

    def test_invert_word_is_matrix_dagger(self, fib):
        rng = np.random.default_rng(22)
        for _ in range(100):
            w = random_word(rng, int(rng.integers(0, 12)))
            u = word_to_unitary(w, fib)
            ui = word_to_unitary(invert_word(w), fib)
            assert dist_up_to_phase(ui.matrix, u.matrix.conj().T) < 1e-10

    def test_word_times_inverse_is_identity(self, fib):
        rng = np.random.default_rng(23)
        for _ in range(50):
            w = random_word(rng, int(rng.integers(1, 30)))
            q = unitary_to_quaternion(word_to_unitary(w + invert_word(w), fib))
            assert quaternion_distance(q, su2.UnitQuaternion.identity()) < 1e-10

    def test_free_reduce_example(self):
        w = BraidWord.from_text("s1 s2 s2i s1")
        assert free_reduce(w).to_text() == "s1 s1"

    def test_free_reduce_cascading(self):
        w = BraidWord.from_text("s1 s2 s2i s1i")
        assert free_reduce(w).to_text() == ""

    def test_free_reduce_properties(self, fib):
        rng = np.random.default_rng(24)
        for _ in range(100):
            w = random_word(rng, int(rng.integers(0, 20)))
            r = free_reduce(w)
            assert len(r) <= len(w)
            assert dist_up_to_phase(word_to_unitary(r, fib).matrix,
                                    word_to_unitary(w, fib).matrix) < 1e-10
            # fixed point
            assert free_reduce(r).tokens == r.tokens
