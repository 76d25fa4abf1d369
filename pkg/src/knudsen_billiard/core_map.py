"""Four-branch random map on outgoing angles of the triangular billiard cell.

A particle that leaves the open side of the cell with angle theta (measured
against the horizontal, in [0, pi]) re-enters at a uniformly random position
and exits again with one of four possible angles

    tau_1(theta) = theta + 2*alpha        tau_2(theta) = -theta + 2*pi - 4*alpha
    tau_3(theta) = theta - 2*alpha        tau_4(theta) = -theta + 4*alpha

taken with position-dependent probabilities p_1..p_4(theta).  The probability
table is piecewise in theta over seven half-open regions cut at
alpha, 2*alpha, 3*alpha, pi-3*alpha, pi-2*alpha, pi-alpha, built from

    u_a(theta) = (1 + tan(a) * cot(theta)) / 2,   a in {alpha, 2*alpha}.

This module provides the branch maps, the probability partition, one-row
transition kernels, branch sampling shared with the skew representation, and
the reflection symmetry theta -> pi - theta together with its index
conjugation.  Everything is a pure function; theta arguments may be scalars
or numpy arrays.  The cell angle alpha must lie in (0, pi/6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BRANCHES = (1, 2, 3, 4)

# float noise tolerated below zero in the probability table before we
# declare the implementation broken
PROB_FLOOR = -1e-12

# tolerance on the partition of unity in a kernel row
PARTITION_TOL = 1e-12

_CONJUGATE = {1: 3, 2: 4, 3: 1, 4: 2}


@dataclass(frozen=True)
class MapParams:
    """Cell angle alpha plus trig constants reused in hot loops."""

    alpha: float
    tan_alpha: float = field(init=False, repr=False)
    tan_2alpha: float = field(init=False, repr=False)
    cos_2alpha: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.alpha < math.pi / 6.0:
            raise ValueError(
                f"alpha must lie strictly inside (0, pi/6), got {self.alpha!r}"
            )
        object.__setattr__(self, "tan_alpha", math.tan(self.alpha))
        object.__setattr__(self, "tan_2alpha", math.tan(2.0 * self.alpha))
        object.__setattr__(self, "cos_2alpha", math.cos(2.0 * self.alpha))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Interior region boundaries of the probability table, in order."""
        a, pi = self.alpha, math.pi
        return (a, 2 * a, 3 * a, pi - 3 * a, pi - 2 * a, pi - a)


def _as_theta(theta, tol: float = 1e-9) -> np.ndarray:
    t = np.asarray(theta, dtype=float)
    if np.any(t < -tol) or np.any(t > math.pi + tol):
        raise ValueError("theta outside [0, pi]")
    return t


def _match(out: np.ndarray, like) -> float | np.ndarray:
    return float(out) if np.isscalar(like) or np.ndim(like) == 0 else out


def tau(k: int, theta, params: MapParams):
    """Exit-angle image of branch k; may leave [0, pi] where its probability is 0."""
    t = _as_theta(theta)
    a = params.alpha
    if k == 1:
        out = t + 2.0 * a
    elif k == 2:
        out = -t + 2.0 * math.pi - 4.0 * a
    elif k == 3:
        out = t - 2.0 * a
    elif k == 4:
        out = -t + 4.0 * a
    else:
        raise ValueError(f"branch index must be 1..4, got {k!r}")
    return _match(out, theta)


def tau_all(theta, params: MapParams) -> np.ndarray:
    """Images of all four branches, stacked along axis 0 (shape (4,) + theta.shape)."""
    t = _as_theta(theta)
    a = params.alpha
    return np.stack(
        [t + 2 * a, -t + 2 * math.pi - 4 * a, t - 2 * a, -t + 4 * a]
    )


def u_alpha(theta, a: float):
    """The slope weight u_a(theta) = (1 + tan(a)*cot(theta)) / 2.

    Computed through cot = cos/sin so theta = pi/2 needs no special case.
    Undefined at theta in {0, pi}.
    """
    t = np.asarray(theta, dtype=float)
    if np.any(t <= 0.0) or np.any(t >= math.pi):
        raise ValueError("u_alpha requires theta strictly inside (0, pi)")
    out = 0.5 * (1.0 + math.tan(a) * np.cos(t) / np.sin(t))
    return _match(out, theta)


def prob_all(theta, params: MapParams) -> np.ndarray:
    """All four branch probabilities at theta, stacked along axis 0.

    Half-open regions are taken literally: a breakpoint belongs to the region
    on its right.  Values in [PROB_FLOOR, 0) are clamped to 0; anything more
    negative raises, since the table is non-negative by construction.
    """
    t = np.atleast_1d(_as_theta(theta)).astype(float)
    a = params.alpha
    ta, t2a, c2a = params.tan_alpha, params.tan_2alpha, params.cos_2alpha
    pi = math.pi

    P = np.zeros((4,) + t.shape)

    # cot is only read on [alpha, pi-alpha), where sin > 0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        cot = np.cos(t) / np.sin(t)

    def up(tan_a, m):  # u_a(theta) on mask m
        return 0.5 * (1.0 + tan_a * cot[m])

    def um(tan_a, m):  # u_a(-theta) on mask m
        return 0.5 * (1.0 - tan_a * cot[m])

    m = t < a
    P[0, m] = 1.0

    m = (t >= a) & (t < 2 * a)
    P[0, m] = up(ta, m)
    P[3, m] = um(ta, m)

    m = (t >= 2 * a) & (t < 3 * a)
    P[0, m] = up(ta, m)
    P[2, m] = 2.0 * c2a * um(t2a, m)
    P[3, m] = um(ta, m) - 2.0 * c2a * um(t2a, m)

    m = (t >= 3 * a) & (t < pi - 3 * a)
    P[0, m] = up(ta, m)
    P[2, m] = um(ta, m)

    m = (t >= pi - 3 * a) & (t < pi - 2 * a)
    P[0, m] = 2.0 * c2a * up(t2a, m)
    P[1, m] = up(ta, m) - 2.0 * c2a * up(t2a, m)
    P[2, m] = um(ta, m)

    m = (t >= pi - 2 * a) & (t < pi - a)
    P[1, m] = up(ta, m)
    P[2, m] = um(ta, m)

    m = t >= pi - a
    P[2, m] = 1.0

    if np.any(P < PROB_FLOOR):
        raise AssertionError(
            "branch probability fell below the float-noise floor; "
            "the piecewise table is implemented wrong"
        )
    np.clip(P, 0.0, None, out=P)

    if np.isscalar(theta) or np.ndim(theta) == 0:
        return P[:, 0]
    return P


def prob(k: int, theta, params: MapParams):
    """Probability of branch k at theta, in [0, 1]."""
    if k not in _CONJUGATE:
        raise ValueError(f"branch index must be 1..4, got {k!r}")
    P = prob_all(theta, params)
    return _match(np.asarray(P[k - 1]), theta)


@dataclass(frozen=True)
class KernelRow:
    """One row of the transition kernel: positive-weight (branch, weight, image) triples."""

    theta: float
    entries: tuple[tuple[int, float, float], ...]

    def weights_sum(self) -> float:
        return sum(w for _, w, _ in self.entries)


def kernel_row(theta, params: MapParams) -> KernelRow:
    """Assemble the kernel row at theta, dropping zero-weight branches.

    Raises if the retained weights miss a partition of unity by more than
    PARTITION_TOL, or if a positive-weight image escapes [0, pi].
    """
    t = float(theta)
    P = prob_all(t, params)
    images = tau_all(t, params)
    entries = []
    for k in BRANCHES:
        w = float(P[k - 1])
        if w == 0.0:
            continue
        img = float(images[k - 1])
        if img < -PARTITION_TOL or img > math.pi + PARTITION_TOL:
            raise AssertionError(
                f"branch {k} has weight {w} but image {img} outside [0, pi]"
            )
        entries.append((k, w, min(max(img, 0.0), math.pi)))
    total = sum(w for _, w, _ in entries)
    if abs(total - 1.0) > PARTITION_TOL:
        raise AssertionError(
            f"kernel row weights sum to {total}, not 1: partition of unity broken"
        )
    return KernelRow(theta=t, entries=tuple(entries))


def select_branch(P: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Branch indices from a precomputed probability stack P (4, N) and uniforms u.

    Picks k with cum_(k-1) <= u < cum_k.  The comparison rule can only land on
    a zero-probability branch in the trailing float-noise sliver u >= cum_4;
    those draws are stepped back to the last positive branch.
    """
    if np.any(u < 0.0) or np.any(u >= 1.0):
        raise ValueError("u must lie in [0, 1)")
    cum = np.cumsum(P, axis=0)
    k = 1 + np.sum(u[None, :] >= cum[:3], axis=0)
    picked = P[k - 1, np.arange(u.size)]
    for i in np.nonzero(picked == 0.0)[0]:
        kk = int(k[i])
        while kk > 1 and P[kk - 1, i] == 0.0:
            kk -= 1
        k[i] = kk
    return k.astype(np.int64)


def branch_choices(thetas: np.ndarray, us: np.ndarray, params: MapParams) -> np.ndarray:
    """Vectorised branch sampling: k with cum_(k-1)(theta) <= u < cum_k(theta)."""
    t, u = np.broadcast_arrays(
        np.atleast_1d(np.asarray(thetas, dtype=float)),
        np.atleast_1d(np.asarray(us, dtype=float)),
    )
    return select_branch(prob_all(t, params), u)


def sample_branch(theta, u: float, params: MapParams) -> int:
    """Branch index drawn from the partition at theta using the uniform u."""
    return int(branch_choices(np.array([theta]), np.array([u]), params)[0])


def reflect_sym(theta):
    """The reflection phi(theta) = pi - theta."""
    t = _as_theta(theta)
    return _match(math.pi - t, theta)


def conjugate_index(k: int) -> int:
    """Branch index conjugate under the reflection symmetry: 1<->3, 2<->4."""
    try:
        return _CONJUGATE[k]
    except KeyError:
        raise ValueError(f"branch index must be 1..4, got {k!r}") from None


def rotation_beta(params: MapParams) -> tuple[int, float]:
    """Smallest k >= 1 with (4k+6)*alpha > pi, and beta = (4k+6)*alpha - pi.

    The associated rotation by beta is what forces invariant observables of
    the two-step dynamics to be constant when alpha is irrational; exposed as
    a documentation utility.
    """
    a = params.alpha
    k = 1
    while (4 * k + 6) * a <= math.pi:
        k += 1
    return k, (4 * k + 6) * a - math.pi


_REGION_NAMES = (
    "[0, a)",
    "[a, 2a)",
    "[2a, 3a)",
    "[3a, pi-3a)",
    "[pi-3a, pi-2a)",
    "[pi-2a, pi-a)",
    "[pi-a, pi]",
)


def m2_region(theta, params: MapParams) -> str:
    """Name of the probability-table region containing theta (a = alpha)."""
    t = float(_as_theta(theta))
    cuts = params.breakpoints
    for name, hi in zip(_REGION_NAMES, cuts):
        if t < hi:
            return name
    return _REGION_NAMES[-1]
