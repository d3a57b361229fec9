"""Best uniform affine approximation of a weighted sum over a box.

For coefficients ``a_j`` and a box ``lower_j <= x_j <= upper_j`` we look for
the slope ``alpha0`` and offset ``beta0`` minimising

    max_x | sum_j a_j x_j - alpha0 * sum_j x_j - beta0 |

The optimum has a closed form: sort the coefficients, walk the running
width balance until it turns nonnegative, and take that coefficient as the
slope. The offset is the midpoint of the residual range.

The module also carries an enumeration-based oracle (``brute_force_minimax``)
and an exact residual evaluator (``max_residual_at_vertices``); neither
shares code with the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUM_SIZE = 20


@dataclass(frozen=True)
class ApproxResult:
    alpha0: float
    beta0: float
    eps: float


@dataclass(frozen=True, eq=False)
class BoxInstance:
    coeffs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        for name in ("coeffs", "lower", "upper"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        n = self.coeffs.shape[0]
        if n < 1:
            raise ValueError("box instance needs at least one coordinate")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("coeffs, lower and upper must have the same length")
        if not (np.all(np.isfinite(self.coeffs)) and np.all(np.isfinite(self.lower))
                and np.all(np.isfinite(self.upper))):
            raise ValueError("box instance must be finite")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n(self) -> int:
        return self.coeffs.shape[0]


def shift_to_zero_lower(inst: BoxInstance):
    """Move the box to a zero lower corner.

    Returns ``(widths, (sum_j a_j*lower_j, sum_j lower_j))``; the caller
    recovers the offset for the original box as
    ``beta0 + pair[0] - alpha0 * pair[1]``.
    """
    widths = inst.upper - inst.lower
    return widths, (float(inst.coeffs @ inst.lower), float(inst.lower.sum()))


def _check_inputs(coeffs, widths):
    if coeffs.shape[-1] == 0:
        raise ValueError("empty coefficient vector")
    if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(widths))):
        raise ValueError("non-finite input")
    if np.any(widths < 0):
        raise ValueError("negative width")


def solve_batched(coeffs, widths):
    """Vectorised closed-form solve for many lines and periods at once.

    coeffs: (L, n) coefficient rows, one per line.
    widths: (n, T) box widths, one column per period.

    Returns ``(alpha0, beta0, eps)``, each of shape (L, T). Ties in the sort
    keep the original column order and the smallest admissible pivot is used.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    widths = np.asarray(widths, dtype=float)
    _check_inputs(coeffs, widths)
    order = np.argsort(coeffs, axis=1, kind="stable")
    c_sorted = np.take_along_axis(coeffs, order, axis=1)
    w_sorted = widths[order]  # (L, n, T)
    prefix = np.cumsum(w_sorted, axis=1)
    total = prefix[:, -1:, :]
    # lambda_{j+1} = 2*prefix_j - total; pivot is the first j where it is >= 0
    pivot = np.argmax(2.0 * prefix >= total, axis=1)  # (L, T)
    alpha0 = np.take_along_axis(c_sorted, pivot, axis=1)
    diff = coeffs[:, :, None] - alpha0[:, None, :]
    w = widths[None, :, :]
    beta0 = 0.5 * (diff * w).sum(axis=1)
    eps = 0.5 * (np.abs(diff) * w).sum(axis=1)
    return alpha0, beta0, eps


def solve_uniform_approx(coeffs, widths) -> ApproxResult:
    """Optimal slope, offset and error for a box ``0 <= x_j <= widths_j``."""
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    if coeffs.shape != widths.shape:
        raise ValueError("coeffs and widths must have the same length")
    a, b, e = solve_batched(coeffs[None, :], widths[:, None])
    return ApproxResult(float(a[0, 0]), float(b[0, 0]), float(e[0, 0]))


def solve_box(inst: BoxInstance) -> ApproxResult:
    """Solve on a general box; the offset refers to the unshifted variables."""
    widths, (a_dot_l, sum_l) = shift_to_zero_lower(inst)
    res = solve_uniform_approx(inst.coeffs, widths)
    beta = res.beta0 + a_dot_l - res.alpha0 * sum_l
    return ApproxResult(res.alpha0, beta, res.eps)


def pivot_sequence(widths_sorted) -> np.ndarray:
    """The balance sequence lambda_1..lambda_{n+1} for already-sorted widths."""
    w = np.asarray(widths_sorted, dtype=float)
    before = np.concatenate([[0.0], np.cumsum(w)])
    return before - (w.sum() - before)


def eval_phi_range(coeffs, widths, alpha0):
    """Max and min of ``sum_j (a_j - alpha0) x_j`` over ``0 <= x <= widths``."""
    coeffs = np.asarray(coeffs, dtype=float)
    widths = np.asarray(widths, dtype=float)
    if not (np.all(np.isfinite(coeffs)) and np.all(np.isfinite(widths))
            and np.isfinite(alpha0)):
        raise ValueError("non-finite input")
    slope = coeffs - alpha0
    phi_max = float(np.sum(np.maximum(slope, 0.0) * widths))
    phi_min = float(np.sum(np.minimum(slope, 0.0) * widths))
    return phi_max, phi_min


def box_vertices(n: int) -> np.ndarray:
    """All 2**n corners of the unit cube as a (2**n, n) 0/1 array."""
    if n > MAX_ENUM_SIZE:
        raise ValueError(f"{n} coordinates is too many to enumerate (max {MAX_ENUM_SIZE})")
    bits = np.arange(2**n, dtype=np.int64)[:, None] >> np.arange(n, dtype=np.int64)
    return (bits & 1).astype(float)


def brute_force_minimax(coeffs, widths, grid_steps: int = 10_000) -> float:
    """Grid search over the slope with exhaustive vertex enumeration.

    For each candidate slope the residual range is found by evaluating all
    box corners; the offset is implicitly the midpoint of that range.
    """
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    if grid_steps < 100:
        raise ValueError("grid_steps must be at least 100")
    V = box_vertices(coeffs.size) * widths  # (2**n, n)
    weighted = V @ coeffs
    mass = V.sum(axis=1)
    grid = np.linspace(coeffs.min() - 1.0, coeffs.max() + 1.0, grid_steps)
    best = np.inf
    for chunk in np.array_split(grid, max(1, grid_steps // 512)):
        phi = weighted[None, :] - chunk[:, None] * mass[None, :]
        spread = 0.5 * (phi.max(axis=1) - phi.min(axis=1))
        best = min(best, float(spread.min()))
    return best


def grid_spacing(coeffs, grid_steps: int) -> float:
    coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
    return (coeffs.max() - coeffs.min() + 2.0) / (grid_steps - 1)


def max_residual_at_vertices(inst: BoxInstance, result: ApproxResult) -> float:
    """Exact worst |sum a_j d_j - alpha0*sum d_j - beta0| over the box corners."""
    V = inst.lower + box_vertices(inst.n) * (inst.upper - inst.lower)
    resid = V @ inst.coeffs - result.alpha0 * V.sum(axis=1) - result.beta0
    return float(np.abs(resid).max())
