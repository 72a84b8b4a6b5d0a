"""
Enumeration of Λ_k = {α : l(α) + n(α) ≤ k} and ℛ(Λ_k) = {β ∉ Λ_k : −β ∈ Λ_k},
and the one-step recursion between consecutive remainder sets.

Everything is brute force over {0,1}^≤(k+1); k stays small in practice.
"""

import itertools

from core.conf import lab_settings
from core.exceptions import OrderTooLarge
from .models import EMPTY, MultiIndex, MultiIndexSet, SetKind, concat, remove_first


def _guard(k):
    if k < 0:
        raise OrderTooLarge('Order must be nonnegative', order=k)
    if k > lab_settings.MAX_LAMBDA_ORDER:
        raise OrderTooLarge(order=k, max_order=lab_settings.MAX_LAMBDA_ORDER)


def all_indices(max_length):
    yield EMPTY
    for length in range(1, max_length + 1):
        for entries in itertools.product((0, 1), repeat=length):
            yield MultiIndex(entries)


def lambda_set(k):
    _guard(k)
    members = (alpha for alpha in all_indices(k) if alpha.weight <= k)
    return MultiIndexSet(tuple(members), SetKind.LAMBDA, k)


def remainder_set(k):
    _guard(k)
    lam = set(lambda_set(k).members)
    members = (
        beta for beta in all_indices(k + 1)
        if beta.length >= 1 and beta not in lam and remove_first(beta) in lam
    )
    return MultiIndexSet(tuple(members), SetKind.REMAINDER, k)


def remainder_by_recursion(j, remainder=remainder_set):
    """
    ℛ(Λ_{j+1}) built from ℛ(Λ_j):

        (ℛ(Λ_j) \\ (Λ_{j+1} \\ Λ_j))  ∪  { (z) * α : z ∈ {0,1}, α ∈ Λ_{j+1} \\ Λ_j }

    ``remainder`` is injectable so the validation suite can check a faulty rule.
    """
    shell = lambda_set(j + 1).difference(lambda_set(j))
    kept = remainder(j).difference(shell)
    grown = MultiIndexSet.custom(
        concat(MultiIndex.of(z), alpha) for z in (0, 1) for alpha in shell
    )
    return kept.union(grown)
