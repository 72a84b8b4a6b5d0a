"""
Multi-indices α = (α_1, ..., α_l) over {0, 1} and the index sets Λ_k, ℛ(Λ_k).

Entry 0 labels an integral against dt, entry 1 an integral against ∘dY.
Sets are kept as canonically sorted tuples (by length, then lexicographic) so
two sets compare equal bit-for-bit and dump deterministically.
"""

from dataclasses import dataclass
from enum import Enum

from core.exceptions import EmptyIndex, LabError


@dataclass(frozen=True, order=False)
class MultiIndex:
    entries: tuple = ()

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if any(e not in (0, 1) for e in entries):
            raise LabError('Multi-index entries must be 0 or 1', entries=list(entries))
        object.__setattr__(self, 'entries', entries)

    @classmethod
    def of(cls, *entries):
        return cls(tuple(entries))

    @classmethod
    def parse(cls, text):
        """Inverse of ``str``: "(1,1)" → MultiIndex((1, 1)); "()" → empty."""
        body = text.strip().strip('()').strip()
        if not body:
            return cls(())
        return cls(tuple(int(part) for part in body.split(',')))

    @property
    def length(self):
        return len(self.entries)

    @property
    def zeros(self):
        return self.entries.count(0)

    @property
    def weight(self):
        """l(α) + n(α), the quantity bounded by k in Λ_k."""
        return self.length + self.zeros

    def sort_key(self):
        return (self.length, self.entries)

    def __len__(self):
        return self.length

    def __iter__(self):
        return iter(self.entries)

    def __str__(self):
        return '(' + ','.join(str(e) for e in self.entries) + ')'

    def __repr__(self):
        return f'MultiIndex{self}'


EMPTY = MultiIndex(())


def remove_first(alpha):
    """−α."""
    if alpha.length == 0:
        raise EmptyIndex()
    return MultiIndex(alpha.entries[1:])


def remove_last(alpha):
    """α−."""
    if alpha.length == 0:
        raise EmptyIndex()
    return MultiIndex(alpha.entries[:-1])


def concat(alpha, beta):
    """α * β."""
    return MultiIndex(alpha.entries + beta.entries)


class SetKind(Enum):
    LAMBDA = 'lambda'
    REMAINDER = 'remainder'
    CUSTOM = 'custom'


@dataclass(frozen=True)
class MultiIndexSet:
    members: tuple
    kind: SetKind = SetKind.CUSTOM
    order: int = None

    def __post_init__(self):
        members = tuple(sorted(set(self.members), key=MultiIndex.sort_key))
        object.__setattr__(self, 'members', members)

    @classmethod
    def custom(cls, members):
        return cls(tuple(members), SetKind.CUSTOM, None)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)

    def __contains__(self, alpha):
        return alpha in set(self.members)

    def same_members(self, other):
        return self.members == other.members

    def union(self, other):
        return MultiIndexSet.custom(self.members + other.members)

    def difference(self, other):
        excluded = set(other.members)
        return MultiIndexSet.custom(m for m in self.members if m not in excluded)

    @property
    def max_length(self):
        return max((m.length for m in self.members), default=0)

    def __str__(self):
        return '{' + ', '.join(str(m) for m in self.members) + '}'
