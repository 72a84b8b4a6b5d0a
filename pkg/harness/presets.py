"""
The four-level comparison system built in code.

Four levels with two close upper states |2>, |3> and two lower states |0>, |1>;
H = 0, L = Σ_j l_j |j><j| + 0.3 |3><0| with l = (1, −1, 1, −1), initial state
diag(1/8, 1/8, 3/8, 3/8) and the four diagonal unit projectors as chart
generators. The bundled JSON scenarios carry the same data.
"""

import numpy as np

from manifold_geometry.models import Chart
from operator_algebra.models import SystemModel

LEVEL_SHIFTS = (1.0, -1.0, 1.0, -1.0)
TRANSITION_AMPLITUDE = 0.3


def four_level_coupling(transition=TRANSITION_AMPLITUDE):
    coupling = np.diag(LEVEL_SHIFTS).astype(np.complex128)
    coupling[3, 0] = transition
    return coupling


def four_level_model(transition=TRANSITION_AMPLITUDE):
    return SystemModel(np.zeros((4, 4)), four_level_coupling(transition))


def four_level_rho0():
    return np.diag([1 / 8, 1 / 8, 3 / 8, 3 / 8]).astype(np.complex128)


def unit_projectors(n=4):
    projectors = []
    for j in range(n):
        p = np.zeros((n, n), dtype=np.complex128)
        p[j, j] = 1.0
        projectors.append(p)
    return projectors


def four_level_chart():
    return Chart(unit_projectors(4), four_level_rho0())


def spectral_chart():
    """Chart of the two spectral projectors of diag(1, −1, 1, −1)."""
    return Chart(
        [np.diag([1, 0, 1, 0]).astype(np.complex128), np.diag([0, 1, 0, 1]).astype(np.complex128)],
        four_level_rho0(),
    )
