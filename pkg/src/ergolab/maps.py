"""Piecewise monotone interval maps, built-in families, inducing, towers.

The object layer (Branch / IntervalMapSystem) is for desk-scale work:
pointwise evaluation, branch inversion, orbit statistics, construction of
induced systems and Kakutani towers.  Bulk simulation goes through
ergolab.kernels via each system's kernel_spec.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from . import kernels
from .errors import (
    InvalidGamma,
    NoConvergence,
    OutsideDomain,
    OutsideImage,
    PointOnPartitionBoundary,
    ReturnCapExceeded,
)
from .kernels.codes import (
    EPS_BOUNDARY,
    KernelSpec,
    boole_spec,
    thaler_edges_spec,
    thaler_mod_spec,
)

BOUNDARY_EPS = EPS_BOUNDARY
RETURN_CAP_DEFAULT = 10**8


@dataclass
class Branch:
    """One monotone increasing branch of an interval map."""

    domain_lo: float
    domain_hi: float
    forward: Callable[[float], float]
    image_lo: float
    image_hi: float
    inverse: Optional[Callable[[float], float]] = None
    derivative: Optional[Callable[[float], float]] = None

    def contains(self, x: float) -> bool:
        return self.domain_lo < x < self.domain_hi

    def image_contains(self, y: float) -> bool:
        return self.image_lo < y < self.image_hi

    def invert(self, y: float, tol: float = 1e-13) -> float:
        """Preimage of y under this branch, closed form when available."""
        if not (self.image_lo <= y <= self.image_hi):
            raise OutsideImage(
                f"y={y} outside branch image ({self.image_lo}, {self.image_hi})"
            )
        if self.inverse is not None:
            return self.inverse(y)
        lo, hi = self.domain_lo, self.domain_hi
        f = self.forward
        x = 0.5 * (lo + hi)
        for _ in range(200):
            fx = f(x)
            if fx > y:
                hi = x
            else:
                lo = x
            if self.derivative is not None:
                step = (fx - y) / self.derivative(x)
                xn = x - step
                if not (lo < xn < hi):
                    xn = 0.5 * (lo + hi)
            else:
                xn = 0.5 * (lo + hi)
            if abs(xn - x) <= tol * max(1.0, abs(x)):
                return xn
            x = xn
        if abs(f(x) - y) <= 10 * tol:
            return x
        raise NoConvergence(f"branch inversion failed at y={y}")


class IntervalMapSystem:
    """Piecewise increasing interval map with a reference measure.

    branches may be a finite list or a lazy countable provider (callable
    i -> Branch plus a monotone edge locator); tags declare which of the
    regularity conditions (A/B/R/U/F) the family is built to satisfy.
    """

    def __init__(self, name, domain_lo, domain_hi, branches=None,
                 branch_provider=None, branch_locator=None,
                 ref_density=None, tags=(), kernel_spec=None, params=None):
        self.name = name
        self.domain_lo = float(domain_lo)
        self.domain_hi = float(domain_hi)
        self._branches = list(branches) if branches is not None else None
        self._provider = branch_provider
        self._locator = branch_locator
        self.ref_density = ref_density if ref_density is not None \
            else (lambda x: np.ones_like(np.asarray(x, dtype=float)))
        self.tags = tuple(tags)
        self.kernel_spec: Optional[KernelSpec] = kernel_spec
        self.params = dict(params or {})
        self._branch_cache = {}

    # -- branch access -------------------------------------------------
    @property
    def finite(self) -> bool:
        return self._branches is not None

    @property
    def branch_count(self) -> Optional[int]:
        return len(self._branches) if self.finite else None

    def branch(self, i: int) -> Branch:
        if self.finite:
            return self._branches[i]
        if i not in self._branch_cache:
            self._branch_cache[i] = self._provider(i)
        return self._branch_cache[i]

    def iter_branches(self, limit=None):
        n = self.branch_count if self.finite else limit
        if n is None:
            raise ValueError("countable branch list needs an explicit limit")
        for i in range(n):
            yield i, self.branch(i)

    def branch_index(self, x: float) -> int:
        if not (self.domain_lo < x < self.domain_hi):
            raise OutsideDomain(f"x={x} outside ({self.domain_lo}, {self.domain_hi})")
        if self.finite:
            for i, b in enumerate(self._branches):
                if abs(x - b.domain_lo) <= BOUNDARY_EPS \
                        or abs(x - b.domain_hi) <= BOUNDARY_EPS:
                    raise PointOnPartitionBoundary(f"x={x} on branch boundary")
                if b.contains(x):
                    return i
            raise OutsideDomain(f"x={x} not covered by any branch")
        i = self._locator(x)
        b = self.branch(i)
        if abs(x - b.domain_lo) <= BOUNDARY_EPS \
                or abs(x - b.domain_hi) <= BOUNDARY_EPS:
            raise PointOnPartitionBoundary(f"x={x} on branch boundary")
        return i

    # -- evaluation ----------------------------------------------------
    def evaluate(self, x: float):
        """Apply the map at x; returns (y, branch_id)."""
        i = self.branch_index(x)
        return self.branch(i).forward(x), i

    def invert_branch(self, branch_id: int, y: float, tol: float = 1e-13):
        return self.branch(branch_id).invert(y, tol)

    def step_perturbed(self, x: float, counters=None):
        """Orbit step with the boundary policy: points within 1e-14 of a
        partition endpoint are nudged by 1e-12 of the branch length and the
        event is counted (measure-zero events must not abort long runs)."""
        try:
            return self.evaluate(x)
        except PointOnPartitionBoundary:
            if counters is not None:
                counters["boundary_hits"] = counters.get("boundary_hits", 0) + 1
            i = self._locator(x) if not self.finite else min(
                range(len(self._branches)),
                key=lambda j: abs(x - self._branches[j].domain_lo),
            )
            b = self.branch(max(i, 0))
            x = min(x + 1e-12 * (b.domain_hi - b.domain_lo),
                    b.domain_hi - BOUNDARY_EPS)
            return self.evaluate(x)


@dataclass
class OrbitStats:
    n: int
    occupation: dict
    birkhoff: list
    visits: Optional[np.ndarray]
    boundary_hits: int
    final_x: float


def orbit_stats(system: IntervalMapSystem, x0: float, n: int,
                indicator_sets: Sequence[tuple] = (),
                functions: Sequence[Callable] = (),
                visit_log_set: Optional[tuple] = None) -> OrbitStats:
    """Streaming occupation counts / Birkhoff sums over the first n iterates.

    S_n(1_A) counts k = 0..n-1 with T^k x0 in A.  Memory is O(1) per
    observable plus the optional visit log.
    """
    if not (system.domain_lo < x0 < system.domain_hi):
        raise OutsideDomain(f"x0={x0}")
    counts = {tuple(a): 0 for a in indicator_sets}
    sums = [0.0 for _ in functions]
    visits = [] if visit_log_set is not None else None
    counters = {}
    x = x0
    for k in range(n):
        for a in indicator_sets:
            if a[0] < x < a[1]:
                counts[tuple(a)] += 1
        for j, f in enumerate(functions):
            sums[j] += f(x)
        if visit_log_set is not None \
                and visit_log_set[0] < x < visit_log_set[1]:
            visits.append(k)
        x, _ = system.step_perturbed(x, counters)
    return OrbitStats(
        n=n,
        occupation=counts,
        birkhoff=sums,
        visits=np.asarray(visits, dtype=np.int64) if visits is not None else None,
        boundary_hits=counters.get("boundary_hits", 0),
        final_x=x,
    )


# -- built-in families ------------------------------------------------

def make_doubling() -> IntervalMapSystem:
    """2x mod 1 with Lebesgue invariant; calibration workhorse."""
    branches = [
        Branch(0.0, 0.5, lambda x: 2.0 * x, 0.0, 1.0,
               inverse=lambda y: 0.5 * y, derivative=lambda x: 2.0),
        Branch(0.5, 1.0, lambda x: 2.0 * x - 1.0, 0.0, 1.0,
               inverse=lambda y: 0.5 * (y + 1.0), derivative=lambda x: 2.0),
    ]
    return IntervalMapSystem(
        "doubling", 0.0, 1.0, branches=branches,
        ref_density=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        tags=("A", "B", "R", "U", "F"), kernel_spec=None,
        params={"family": "doubling"},
    )


def make_boole_like() -> IntervalMapSystem:
    """x/(1-x) on (0,1/2), 2x-1 on (1/2,1); invariant density 1/x."""
    branches = [
        Branch(0.0, 0.5, lambda x: x / (1.0 - x), 0.0, 1.0,
               inverse=lambda y: y / (1.0 + y),
               derivative=lambda x: 1.0 / (1.0 - x) ** 2),
        Branch(0.5, 1.0, lambda x: 2.0 * x - 1.0, 0.0, 1.0,
               inverse=lambda y: 0.5 * (y + 1.0), derivative=lambda x: 2.0),
    ]
    return IntervalMapSystem(
        "boole_like", 0.0, 1.0, branches=branches,
        ref_density=lambda x: 1.0 / np.asarray(x, dtype=float),
        tags=("A",), kernel_spec=boole_spec(),
        params={"family": "boole_like", "gamma": 1.0},
    )


# Thaler-type family: F(x) = x(1 + x^{1/g})/(1 - x^{1/g}), branches
# Tx = F(x) - F(xi_n) on (xi_n, xi_{n+1}).

def thaler_F(x, gamma):
    x = np.asarray(x, dtype=float)
    inv_g = 1.0 / gamma
    with np.errstate(divide="ignore"):
        lg = np.log(x)
    p = np.exp(lg * inv_g)
    return x * (1.0 + p) / (-np.expm1(lg * inv_g))


def thaler_Fprime(x, gamma):
    x = np.asarray(x, dtype=float)
    q = 1.0 / gamma
    with np.errstate(divide="ignore"):
        lg = np.log(x)
    p = np.exp(lg * q)
    om = -np.expm1(lg * q)
    return ((1.0 + p + q * p) * om + q * p * (1.0 + p)) / (om * om)


def thaler_Finv(y, gamma, x0=None):
    """Scalar inverse of F by warm-started Newton with bisection safeguard."""
    y = float(y)
    lo, hi = 0.0, 1.0 - 1e-15
    x = x0 if x0 is not None else min(y, 0.5)
    x = min(max(x, 1e-300), hi)
    for _ in range(200):
        fx = float(thaler_F(x, gamma))
        if fx > y:
            hi = x
        else:
            lo = x
        d = (fx - y) / float(thaler_Fprime(x, gamma))
        xn = x - d
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-17 * max(xn, 1e-300):
            return xn
        x = xn
    raise NoConvergence(f"thaler_Finv at y={y}")


def _thaler_branch(gamma, lo, hi, shift):
    return Branch(
        lo, hi,
        forward=lambda x, s=shift: float(thaler_F(x, gamma)) - s,
        image_lo=float(thaler_F(lo, gamma)) - shift if lo > 0 else 0.0,
        image_hi=float(thaler_F(hi, gamma)) - shift,
        inverse=lambda y, s=shift, l=lo, h=hi: thaler_Finv(
            y + s, gamma, x0=0.5 * (l + h)),
        derivative=lambda x: float(thaler_Fprime(x, gamma)),
    )


def make_thaler_family(gamma: float, partition_rule: str = "midpoint",
                       image_height: float = 1.0) -> IntervalMapSystem:
    """Intermittent family with indifferent fixed point at 0.

    partition_rule:
      "midpoint"   - xi_{n+1} at the midpoint of the admissible interval;
                     the admissible heights then halve each step, so the
                     edges accumulate at an interior point and the family is
                     a finite truncated list (domain ends at the last edge).
      "full_image" - xi_{n+1} at the right endpoint: every branch has image
                     (0, h); with h = 1 all branches are full, condition (F)
                     holds, and the kernel step is Tx = F(x) mod h.
    """
    if not (0.0 < gamma < 1.0):
        raise InvalidGamma(f"gamma={gamma} not in (0,1)")
    g = float(gamma)
    if partition_rule == "full_image":
        h = float(image_height)
        if not (0.0 < h <= 1.0):
            raise InvalidGamma(f"image_height={h} not in (0,1]")
        xi1 = thaler_Finv(h, g)

        def provider(i, g=g, h=h):
            lo = 0.0 if i == 0 else thaler_Finv(i * h, g)
            hi = thaler_Finv((i + 1) * h, g)
            return _thaler_branch(g, lo, hi, i * h)

        def locator(x, g=g, h=h):
            return int(math.floor(float(thaler_F(x, g)) / h))

        return IntervalMapSystem(
            "thaler", 0.0, 1.0,
            branch_provider=provider, branch_locator=locator,
            tags=("A", "B", "U", "F"),
            kernel_spec=thaler_mod_spec(g, h, xi1),
            params={"family": "thaler", "gamma": g,
                    "partition_rule": "full_image", "xi1": xi1,
                    "image_height": h, "kappa": 2.0},
        )
    if partition_rule != "midpoint":
        raise ValueError(f"unknown partition_rule {partition_rule!r}")

    # midpoint rule: generate edges until they are machine-unresolvable
    edges = [0.0]
    xmax = thaler_Finv(min(1.0, float(image_height)), g)
    edges.append(0.5 * xmax)
    h_prev = float(thaler_F(edges[1], g))
    while True:
        xmax = thaler_Finv(float(thaler_F(edges[-1], g)) + h_prev, g,
                           x0=edges[-1])
        nxt = 0.5 * (edges[-1] + xmax)
        if nxt - edges[-1] < 1e-15:
            break
        h_prev = float(thaler_F(nxt, g)) - float(thaler_F(edges[-1], g))
        edges.append(nxt)
    edges = np.asarray(edges)
    shifts = np.concatenate([[0.0], thaler_F(edges[1:], g)])
    branches = [
        _thaler_branch(g, edges[i], edges[i + 1], shifts[i])
        for i in range(len(edges) - 1)
    ]
    return IntervalMapSystem(
        "thaler", 0.0, float(edges[-1]), branches=branches,
        tags=("A", "U"),
        kernel_spec=thaler_edges_spec(g, edges, shifts[:-1]),
        params={"family": "thaler", "gamma": g,
                "partition_rule": "midpoint", "xi1": float(edges[1]),
                "kappa": 2.0},
    )


def neutral_inverse(system: IntervalMapSystem):
    """Inverse w of the leftmost branch and its fixed starting point xi."""
    b0 = system.branch(0)
    return b0.invert, system.params.get("xi1", b0.domain_hi)


# -- inducing ----------------------------------------------------------

class InducedSystem:
    """First-return system of base on (inducing_lo, inducing_hi)."""

    def __init__(self, base: IntervalMapSystem, inducing_lo, inducing_hi,
                 return_cap: int = RETURN_CAP_DEFAULT):
        if not (base.domain_lo <= inducing_lo < inducing_hi <= base.domain_hi):
            raise OutsideDomain("inducing set outside base domain")
        self.base = base
        self.inducing_lo = float(inducing_lo)
        self.inducing_hi = float(inducing_hi)
        self.return_cap = int(return_cap)

    def contains(self, x):
        return self.inducing_lo < x < self.inducing_hi

    def return_time(self, x: float) -> int:
        """min{n >= 1 : T^n x in Omega}; raises ReturnCapExceeded."""
        if not self.contains(x):
            raise OutsideDomain(f"x={x} outside the inducing set")
        counters = {}
        for n in range(1, self.return_cap + 1):
            x, _ = self.base.step_perturbed(x, counters)
            if self.contains(x):
                return n
        raise ReturnCapExceeded(f"no return within {self.return_cap} steps")

    def induced_value(self, x: float) -> float:
        if not self.contains(x):
            raise OutsideDomain(f"x={x} outside the inducing set")
        counters = {}
        y = x
        for _ in range(self.return_cap):
            y, _ = self.base.step_perturbed(y, counters)
            if self.contains(y):
                return y
        raise ReturnCapExceeded(f"no return within {self.return_cap} steps")

    def step(self, x: float) -> float:
        return self.induced_value(x)

    def collect_returns(self, x0, nmax_time, jstore, use_jump="auto"):
        """Bulk first-return times via the kernels; returns
        (rt, nret, capped, boundary_hits)."""
        x0 = np.ascontiguousarray(x0, dtype=np.float64)
        spec = self.base.kernel_spec
        if spec is None:
            raise NotImplementedError(
                f"no kernel encoding for map {self.base.name!r}")
        if use_jump == "auto":
            use_jump = self._jump_valid()
        if use_jump:
            tau, slope = self._ladder()
            rt, nret = kernels.thaler_jump_returns(
                spec.par, tau, slope, x0, nmax_time, jstore)
            return rt, nret, np.zeros(len(x0), np.uint8), \
                np.zeros(len(x0), np.int64)
        rt, nret, capped, bh = kernels.collect_returns(
            *spec.args(), x0, self.inducing_lo, self.inducing_hi,
            self.return_cap, nmax_time, jstore)
        return rt, nret, capped, bh

    def return_partial_sums(self, x0, count_grid, use_jump="auto"):
        """Partial sums of return times at the given return-count grid."""
        x0 = np.ascontiguousarray(x0, dtype=np.float64)
        count_grid = np.ascontiguousarray(count_grid, dtype=np.int64)
        spec = self.base.kernel_spec
        if spec is None:
            raise NotImplementedError(
                f"no kernel encoding for map {self.base.name!r}")
        if use_jump == "auto":
            use_jump = self._jump_valid()
        if use_jump:
            tau, slope = self._ladder()
            return kernels.thaler_jump_partial_sums(
                spec.par, tau, slope, x0, count_grid)
        return kernels.return_partial_sums(
            *spec.args(), x0, self.inducing_lo, self.inducing_hi,
            self.return_cap, count_grid)

    def _jump_valid(self) -> bool:
        # the ladder jump applies to the full-image family induced on the
        # complement of the leftmost branch
        if self.base.params.get("partition_rule") != "full_image":
            return False
        xi1 = self.base.params["xi1"]
        return (
            abs(self.inducing_lo - xi1) < 1e-12
            and self.inducing_hi >= 1.0 - 1e-12
        )

    def _ladder(self, n_rungs=None):
        key = ("ladder", n_rungs or kernels.DEFAULT_LADDER_RUNGS)
        if key not in self.base.params:
            g = self.base.params["gamma"]
            xi1 = self.base.params["xi1"]
            self.base.params[key] = kernels.build_ladder(g, xi1, key[1])
        return self.base.params[key]

    def induced_cylinders(self, k_max: int):
        """Cylinders B(k) = [phi = k] as interval lists, k = 1..k_max.

        Closed form for the boole-like map on (1/2, 1) and the full-image
        thaler family on (xi1, 1); other geometries raise.
        """
        fam = self.base.params.get("family")
        out = {k: [] for k in range(1, k_max + 1)}
        if fam == "boole_like" and abs(self.inducing_lo - 0.5) < 1e-12 \
                and self.inducing_hi >= 1.0 - 1e-12:
            # right branch y = 2x-1; crawl exit after k steps iff
            # y in (1/(k+2), 1/(k+1)); phi = k+1
            out[1].append((0.75, 1.0))
            for k in range(1, k_max):
                lo = 0.5 * (1.0 / (k + 2) + 1.0)
                hi = 0.5 * (1.0 / (k + 1) + 1.0)
                out[k + 1].append((lo, hi))
            return out
        if fam == "thaler" \
                and self.base.params.get("partition_rule") == "full_image" \
                and self._jump_valid():
            g = self.base.params["gamma"]
            h = self.base.params["image_height"]
            xi1 = self.base.params["xi1"]
            tau = [float(thaler_F(xi1, g)), xi1]
            for _ in range(k_max):
                tau.append(thaler_Finv(tau[-1], g, x0=tau[-1]))
            m = 1
            while True:
                base_shift = m * h
                lo_dom = thaler_Finv(base_shift, g)
                if 1.0 - lo_dom < 1e-13 or m > 10**6:
                    break
                # phi = 1 piece: F(x) - mh in (xi1, h)
                lo = thaler_Finv(base_shift + xi1, g, x0=lo_dom)
                hi = thaler_Finv(base_shift + min(h, tau[0]), g, x0=lo)
                out[1].append((lo, hi))
                # phi = k+1 piece: F(x) - mh in (tau_{k+1}, tau_k)
                for k in range(1, k_max):
                    a = thaler_Finv(base_shift + tau[k + 1], g, x0=lo_dom)
                    b = thaler_Finv(base_shift + tau[k], g, x0=a)
                    out[k + 1].append((a, b))
                m += 1
            return out
        raise NotImplementedError(
            "induced cylinders available only for the built-in geometries")


def induce(base: IntervalMapSystem, inducing_lo, inducing_hi,
           return_cap: int = RETURN_CAP_DEFAULT) -> InducedSystem:
    return InducedSystem(base, inducing_lo, inducing_hi, return_cap)


# -- Kakutani tower ----------------------------------------------------

class TowerSystem:
    """Tower over a probability system (S, phi): climb below the roof,
    apply S and drop to level 1 at it."""

    def __init__(self, base_step: Callable[[float], float],
                 height: Callable[[float], int]):
        self.base_step = base_step
        self.height = height

    def step(self, state):
        x, level = state
        if level < self.height(x):
            return (x, level + 1)
        return (self.base_step(x), 1)

    def orbit(self, state, n: int):
        out = [state]
        for _ in range(n):
            state = self.step(state)
            out.append(state)
        return out

    def base_visit_times(self, x0, n: int):
        """Times k in [0, n) at which the orbit from (x0, 1) sits at level 1."""
        times = []
        state = (x0, 1)
        for k in range(n):
            if state[1] == 1:
                times.append(k)
            state = self.step(state)
        return np.asarray(times, dtype=np.int64)


def build_tower(base_step, height) -> TowerSystem:
    return TowerSystem(base_step, height)


def tower_of_induced(ind: InducedSystem) -> TowerSystem:
    return TowerSystem(ind.step, ind.return_time)
