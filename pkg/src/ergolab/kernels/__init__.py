"""Hot-loop kernels with numba and pure-numpy lanes.

The active lane is chosen by ergolab.backend (ERGOLAB_BACKEND env flag).
All kernels take the (kind, par, edges, shifts) map encoding from
kernels.codes; RNG never enters a kernel, so runs are reproducible and
independent of worker count.
"""

import numpy as np

from ..backend import USE_NUMBA
from . import _loops, _vector
from .codes import (
    KIND_BOOLE,
    KIND_THALER_EDGES,
    KIND_THALER_MOD,
    KernelSpec,
    boole_spec,
    thaler_edges_spec,
    thaler_mod_spec,
)

if USE_NUMBA:
    _impl = _loops
else:
    _impl = _vector

occupation_counts = _impl.occupation_counts
laplace_occupation = _impl.laplace_occupation
collect_returns = _impl.collect_returns
return_partial_sums = _impl.return_partial_sums
thaler_jump_partial_sums = _impl.thaler_jump_partial_sums
thaler_jump_returns = _impl.thaler_jump_returns
doubling_occupation = _impl.doubling_occupation
doubling_positions = _impl.doubling_positions

# the ladder is a scalar recursion; the loop implementation serves both lanes
thaler_ladder = _loops.thaler_ladder

DEFAULT_LADDER_RUNGS = 1 << 21 if USE_NUMBA else 1 << 18


def pool_words(n_max: int) -> int:
    """uint64 words per trajectory for a bit-pool horizon of n_max steps."""
    return ((n_max - 1) >> 6) + 2 if n_max > 0 else 2


def make_bit_pool(rng: np.random.Generator, n_traj: int, n_max: int):
    return rng.integers(
        0, 2**64, size=(n_traj, pool_words(n_max)), dtype=np.uint64
    )


def build_ladder(gamma: float, tau1: float, n_rungs: int | None = None):
    """Inverse-branch ladder tau[0..D] plus the measured tail slope of
    H(tau_{n+1}) - H(tau_n), H(y) = y^(-1/gamma), used to extend jumps past
    the stored rungs."""
    if n_rungs is None:
        n_rungs = DEFAULT_LADDER_RUNGS
    tau = thaler_ladder(1.0 / gamma, tau1, n_rungs)
    hh = tau[-4096:] ** (-1.0 / gamma)
    tail_slope = float(np.mean(np.diff(hh)))
    return tau, tail_slope
