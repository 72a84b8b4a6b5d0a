"""
JSON wire format for matrices: row-major nested lists of [re, im] pairs.

    [[ [1, 0], [0, 0] ],
     [ [0, 0], [-1, 0] ]]
"""

import numpy as np

from core.exceptions import DimensionMismatch


def matrix_from_pairs(rows, name='matrix'):
    try:
        pairs = np.asarray(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f'{name} is not a rectangular array of [re, im] pairs') from exc

    if pairs.ndim != 3 or pairs.shape[-1] != 2 or pairs.shape[0] != pairs.shape[1]:
        raise DimensionMismatch(
            f'{name} must be an n×n array of [re, im] pairs', shape=list(pairs.shape),
        )
    return pairs[..., 0] + 1j * pairs[..., 1]


def matrix_to_pairs(matrix):
    matrix = np.asarray(matrix, dtype=np.complex128)
    return [[[float(z.real), float(z.imag)] for z in row] for row in matrix]
