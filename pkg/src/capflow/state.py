"""Variable layouts shared by every module.

Conserved vector (length 11, or 14 with the cleaning field):

    index  0   alpha1 * rho1      phase-1 partial density
    index  1   alpha2 * rho2      phase-2 partial density
    index  2-4 rho * u            momentum density
    index  5   rho * E            total energy density (internal + kinetic
                                  + capillary ``sigma * ||b||``)
    index  6   alpha1             phase-1 volume fraction
    index  7-9 b                  interface field (gradient of the colour
                                  function)
    index 10   c                  colour function
    index 11-13 psi               curl-cleaning field (cleaning variant only)

Primitive vector (same length):

    index  0   rho1               phase-1 density
    index  1   rho2               phase-2 density
    index  2-4 u                  velocity
    index  5   p                  pressure
    index  6   alpha1
    index  7-9 b
    index 10   c
    index 11-13 psi

Both layouts keep the vector-valued fields (velocity, interface field,
cleaning field) in x, y, z order regardless of the mesh dimension.
"""

from __future__ import annotations

import numpy as np

# conserved indices
Q_R1A = 0
Q_R2A = 1
Q_MOM = 2  # .. 4
Q_ENE = 5
Q_ALP = 6
Q_B = 7  # .. 9
Q_COL = 10
Q_PSI = 11  # .. 13

# primitive indices
P_RHO1 = 0
P_RHO2 = 1
P_VEL = 2  # .. 4
P_PRE = 5
P_ALP = 6
P_B = 7  # .. 9
P_COL = 10
P_PSI = 11  # .. 13

NVAR_BASE = 11
NVAR_CLEAN = 14

#: human-readable column names for the conserved components, in layout order
CONSERVED_NAMES = (
    "phase1_partial_density",
    "phase2_partial_density",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "total_energy",
    "volume_fraction",
    "interface_x",
    "interface_y",
    "interface_z",
    "colour",
    "cleaning_x",
    "cleaning_y",
    "cleaning_z",
)


def conserved_names(nvar: int) -> tuple[str, ...]:
    """Names of the first ``nvar`` conserved components."""
    return CONSERVED_NAMES[:nvar]

#: conserved rows that are genuinely conservative (zero nonconservative terms)
#: for every variant: the two partial densities.
MASS_ROWS = (Q_R1A, Q_R2A)


def axis_frame(axis: int) -> tuple[int, int, int]:
    """Right-handed component permutation that maps ``axis`` onto x.

    Returns indices ``(i, j, k)`` such that the rotated vector components are
    ``(v[i], v[j], v[k])``.  Cyclic permutations are proper rotations, so all
    closed-form x-direction algebra applies verbatim in the rotated frame.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    return (axis, (axis + 1) % 3, (axis + 2) % 3)


def rotate_state_to_axis(v: np.ndarray, axis: int) -> np.ndarray:
    """Permute the vector-valued components so that ``axis`` becomes x."""
    if axis == 0:
        return v.copy()
    i, j, k = axis_frame(axis)
    out = v.copy()
    for base in (P_VEL, P_B) + ((P_PSI,) if len(v) > NVAR_BASE else ()):
        out[base + 0] = v[base + i]
        out[base + 1] = v[base + j]
        out[base + 2] = v[base + k]
    return out


def rotate_rows_from_axis(mat: np.ndarray, axis: int) -> np.ndarray:
    """Undo :func:`rotate_state_to_axis` on the rows of a matrix of
    state-shaped columns (e.g. an eigenvector matrix computed in the rotated
    frame)."""
    if axis == 0:
        return mat
    i, j, k = axis_frame(axis)
    out = mat.copy()
    for base in (P_VEL, P_B) + ((P_PSI,) if mat.shape[0] > NVAR_BASE else ()):
        out[base + i] = mat[base + 0]
        out[base + j] = mat[base + 1]
        out[base + k] = mat[base + 2]
    return out
