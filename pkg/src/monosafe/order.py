"""Componentwise order, boxes, and lower sets on the nonnegative orthant.

Everything downstream (system models, the MILP encoder, the invariance
machinery) reasons in the partial order

    a <= b  iff  a_i <= b_i for every coordinate i,

restricted to ``R^n_+``.  Three set families are provided:

* ``Box(a)`` -- the order interval ``{x >= 0 : x <= a}`` below a corner ``a``.
* ``PolyLowerSet`` -- ``{x >= 0 : A x <= b}`` with ``A`` entrywise
  nonnegative, which is a sufficient (and cheaply checkable) condition for
  the set to be closed under componentwise decrease.
* ``BoxUnion`` -- a finite union of boxes, again a lower set.

All membership predicates are *closed* (boundary points are inside) and take
an explicit tolerance so that exact arithmetic and solver output can be
compared with different slack.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: default tolerance for order comparisons on exact arithmetic
DEFAULT_TOL = 1e-9
#: tolerance used when the compared numbers come out of the LP/MILP solver
SOLVER_TOL = 1e-6


def as_vector(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce ``x`` to a 1-D float array, checking nonnegativity.

    Raises ``ValueError`` on negative entries, wrong dimension, or
    non-finite values.  Used at every construction boundary so the numeric
    core can assume clean data.
    """
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name}: expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name}: entries must be finite")
    if np.any(v < 0):
        raise ValueError(f"{name}: entries must be nonnegative, got {v}")
    return v


def leq(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Componentwise order test: ``a_i <= b_i + tol`` for every ``i``."""
    if tol < 0:
        raise ValueError("tolerance must be nonnegative")
    av = np.asarray(a, dtype=float).reshape(-1)
    bv = np.asarray(b, dtype=float).reshape(-1)
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    return bool(np.all(av <= bv + tol))


@dataclass(frozen=True)
class Box:
    """Order interval ``R(a) = {x >= 0 : x <= a}`` with corner ``a``."""

    corner: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "corner", as_vector(self.corner, name="corner"))

    @property
    def dim(self) -> int:
        return self.corner.shape[0]

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        xv = np.asarray(x, dtype=float).reshape(-1)
        if xv.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: {xv.shape[0]} vs {self.dim}")
        return bool(np.all(xv >= -tol)) and leq(xv, self.corner, tol)


@dataclass(frozen=True)
class PolyLowerSet:
    """Polyhedral lower set ``{x >= 0 : A x <= b}`` with ``A >= 0`` entrywise.

    The entrywise-nonnegativity requirement is rejected at construction;
    it guarantees the lower-set property (if ``x`` satisfies the
    constraints, so does any ``0 <= y <= x``) without any polyhedral
    computation.
    """

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("A and b must be finite")
        if np.any(A < 0):
            raise ValueError("A must be entrywise nonnegative for a lower set")
        if np.any(b < 0):
            raise ValueError("b must be entrywise nonnegative")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def rectangle(cls, corner) -> "PolyLowerSet":
        """The box ``{x >= 0 : x_i <= corner_i}`` as one constraint per axis."""
        c = as_vector(corner, name="corner")
        return cls(np.eye(c.shape[0]), c)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        xv = np.asarray(x, dtype=float).reshape(-1)
        if xv.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: {xv.shape[0]} vs {self.dim}")
        if not np.all(xv >= -tol):
            return False
        return bool(np.all(self.A @ xv <= self.b + tol))

    def violation(self, x) -> float:
        """Worst constraint excess ``max(max_i (A x - b)_i, 0)``.

        Zero for points inside the set; membership at tolerance ``tol``
        is exactly ``violation(x) <= tol`` for nonnegative ``x``.
        """
        xv = np.asarray(x, dtype=float).reshape(-1)
        if xv.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: {xv.shape[0]} vs {self.dim}")
        excess = float(np.max(self.A @ xv - self.b)) if self.A.shape[0] else 0.0
        return max(excess, float(np.max(-xv)), 0.0)

    def coordinate_bounds(self) -> np.ndarray:
        """Per-coordinate suprema ``sup {x_i : x in S}``.

        Because the set is a lower set, the supremum of ``x_i`` is attained
        with all other coordinates at zero, so it is simply
        ``min_j b_j / A_{ji}`` over rows with ``A_{ji} > 0`` (``inf`` if no
        row bounds the coordinate).  No LP is needed.
        """
        n = self.dim
        out = np.full(n, np.inf)
        for i in range(n):
            col = self.A[:, i]
            mask = col > 0
            if np.any(mask):
                out[i] = np.min(self.b[mask] / col[mask])
        return out


@dataclass(frozen=True)
class BoxUnion:
    """Ordered finite union of boxes; membership reports the smallest index."""

    boxes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        boxes = tuple(b if isinstance(b, Box) else Box(b) for b in self.boxes)
        if not boxes:
            raise ValueError("BoxUnion needs at least one box")
        dims = {b.dim for b in boxes}
        if len(dims) != 1:
            raise ValueError(f"boxes must share a dimension, got {sorted(dims)}")
        object.__setattr__(self, "boxes", boxes)

    @property
    def dim(self) -> int:
        return self.boxes[0].dim

    def __len__(self) -> int:
        return len(self.boxes)

    def locate(self, x, tol: float = DEFAULT_TOL) -> int | None:
        """Smallest index ``p`` with ``x`` in ``boxes[p]``, or ``None``."""
        for p, box in enumerate(self.boxes):
            if box.contains(x, tol):
                return p
        return None

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return self.locate(x, tol) is not None
