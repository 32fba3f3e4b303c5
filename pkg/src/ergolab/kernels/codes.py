"""Integer/array encodings of the built-in map families for the hot kernels.

Kernels never touch Python callables; a map is passed as
(kind, par, edges, shifts) with float64 arrays so both the numba lane and the
vectorised numpy lane can consume it.

par layout (thaler kinds): [gamma, 1/gamma, branch_image_height h, xi1].
"""

from dataclasses import dataclass, field

import numpy as np

KIND_BOOLE = 1        # x/(1-x) on (0,1/2), 2x-1 on (1/2,1)
KIND_THALER_MOD = 2   # full-image rule: Tx = F(x) - h*floor(F(x)/h)
KIND_THALER_EDGES = 3  # explicit edge/shift arrays (midpoint or custom rules)

# boundary policy: orbit points within EPS_BOUNDARY of a partition point are
# nudged by NUDGE_FRACTION of the local branch length and the event is counted
EPS_BOUNDARY = 1e-14
NUDGE_FRACTION = 1e-12

_EMPTY = np.empty(0, dtype=np.float64)


@dataclass(frozen=True)
class KernelSpec:
    kind: int
    par: np.ndarray = field(default_factory=lambda: _EMPTY)
    edges: np.ndarray = field(default_factory=lambda: _EMPTY)
    shifts: np.ndarray = field(default_factory=lambda: _EMPTY)

    def args(self):
        return (
            self.kind,
            np.ascontiguousarray(self.par, dtype=np.float64),
            np.ascontiguousarray(self.edges, dtype=np.float64),
            np.ascontiguousarray(self.shifts, dtype=np.float64),
        )


def boole_spec() -> KernelSpec:
    return KernelSpec(KIND_BOOLE, np.array([0.0, 0.0, 1.0, 0.5]))


def thaler_mod_spec(gamma: float, height: float, xi1: float) -> KernelSpec:
    return KernelSpec(
        KIND_THALER_MOD, np.array([gamma, 1.0 / gamma, height, xi1])
    )


def thaler_edges_spec(gamma, edges, shifts) -> KernelSpec:
    edges = np.asarray(edges, dtype=np.float64)
    shifts = np.asarray(shifts, dtype=np.float64)
    xi1 = edges[1]
    return KernelSpec(
        KIND_THALER_EDGES,
        np.array([gamma, 1.0 / gamma, np.nan, xi1]),
        edges,
        shifts,
    )
