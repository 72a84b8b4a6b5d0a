import time

from django.test import SimpleTestCase

from core.exceptions import EmptyIndex, LabError, OrderTooLarge
from .models import EMPTY, MultiIndex, MultiIndexSet, SetKind, concat, remove_first, remove_last
from .sets import lambda_set, remainder_by_recursion, remainder_set


def idx(*entries):
    return MultiIndex.of(*entries)


def fibonacci(k):
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a


class MultiIndexTests(SimpleTestCase):

    def test_length_and_zero_count(self):
        alpha = idx(0, 1, 0)
        self.assertEqual(alpha.length, 3)
        self.assertEqual(alpha.zeros, 2)
        self.assertEqual(alpha.weight, 5)

    def test_rejects_entries_outside_binary_alphabet(self):
        with self.assertRaises(LabError):
            idx(0, 2)

    def test_remove_first_and_last(self):
        self.assertEqual(remove_first(idx(0, 1)), idx(1))
        self.assertEqual(remove_last(idx(0, 1)), idx(0))
        self.assertEqual(remove_first(idx(1)), EMPTY)

    def test_remove_from_empty(self):
        with self.assertRaises(EmptyIndex):
            remove_first(EMPTY)
        with self.assertRaises(EmptyIndex):
            remove_last(EMPTY)

    def test_concat(self):
        self.assertEqual(concat(idx(0), idx(1, 1)), idx(0, 1, 1))
        self.assertEqual(concat(EMPTY, idx(1, 0)), idx(1, 0))
        self.assertEqual(concat(idx(1), idx(0)), idx(1, 0))

    def test_remove_first_inverts_prefixing(self):
        for alpha in lambda_set(4):
            for z in (0, 1):
                self.assertEqual(remove_first(concat(idx(z), alpha)), alpha)

    def test_printing(self):
        self.assertEqual(str(idx(1, 1)), '(1,1)')
        self.assertEqual(str(EMPTY), '()')
        self.assertEqual(MultiIndex.parse('(0,1)'), idx(0, 1))
        self.assertEqual(MultiIndex.parse('()'), EMPTY)


class LambdaSetTests(SimpleTestCase):

    def test_order_zero_is_the_empty_index(self):
        self.assertEqual(lambda_set(0).members, (EMPTY,))

    def test_order_one(self):
        self.assertEqual(lambda_set(1).members, (EMPTY, idx(1)))

    def test_order_two_shell(self):
        shell = lambda_set(2).difference(lambda_set(0))
        self.assertEqual(set(shell), {idx(0), idx(1), idx(1, 1)})

    def test_nesting(self):
        for k in range(7):
            self.assertTrue(set(lambda_set(k)) <= set(lambda_set(k + 1)))

    def test_members_satisfy_weight_bound(self):
        lam = lambda_set(5)
        self.assertEqual(lam.kind, SetKind.LAMBDA)
        self.assertTrue(all(alpha.weight <= 5 for alpha in lam))

    def test_guard(self):
        with self.assertRaises(OrderTooLarge):
            lambda_set(17)

    def test_canonical_order(self):
        members = lambda_set(3).members
        self.assertEqual(list(members), sorted(members, key=MultiIndex.sort_key))


class RemainderSetTests(SimpleTestCase):

    def test_order_zero(self):
        self.assertEqual(set(remainder_set(0)), {idx(0), idx(1)})

    def test_order_one(self):
        self.assertEqual(set(remainder_set(1)), {idx(0), idx(0, 1), idx(1, 1)})

    def test_weights_and_lengths(self):
        for k in range(8):
            rem = remainder_set(k)
            lam = set(lambda_set(k))
            for beta in rem:
                self.assertIn(beta.weight, (k + 1, k + 2))
                self.assertNotIn(beta, lam)
                self.assertIn(remove_first(beta), lam)
            self.assertEqual(rem.max_length, k + 1)

    def test_cardinality_is_bounded_by_power_of_two(self):
        for k in range(10):
            size = len(remainder_set(k))
            self.assertLessEqual(size, 2 ** (k + 1))
            self.assertEqual(size, 2 * fibonacci(k + 1) + fibonacci(k))

    def test_recursion_identity(self):
        started = time.perf_counter()
        for j in range(7):
            self.assertTrue(remainder_set(j + 1).same_members(remainder_by_recursion(j)))
        self.assertLess(time.perf_counter() - started, 1.0)

    def test_faulty_rule_breaks_recursion(self):
        def faulty(k):
            return MultiIndexSet.custom(b for b in remainder_set(k) if b.zeros == 0)

        self.assertFalse(remainder_set(2).same_members(remainder_by_recursion(1, remainder=faulty)))
