"""Composite midpoint quadrature and band splitting along discontinuity curves.

The midpoint rule is the only rule used anywhere in the package: every
integral is split so that no panel straddles a kernel discontinuity or a
breakpoint of a piecewise-constant iterate, and the smooth pieces are
integrated with the rule below.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CurveOrderingError, NonFiniteIntegrandError

#: default number of midpoint panels per smooth band segment
DEFAULT_PANELS = 200

#: tolerance for curve-ordering violations and tiling checks
ORDER_TOL = 1e-12


def midpoints(lo, hi, panels):
    """Abscissas and common weight of the composite midpoint rule."""
    width = (hi - lo) / panels
    return lo + (np.arange(panels) + 0.5) * width, width


def composite_midpoint(f, lo, hi, panels=DEFAULT_PANELS):
    """Integrate ``f`` over (lo, hi) with the composite midpoint rule.

    ``f`` receives a numpy array of abscissas and should return values of
    the same shape (scalars broadcast).  Returns exactly 0.0 when the
    interval is empty.

    Raises
    ------
    NonFiniteIntegrandError
        If any midpoint value is nan or infinite; the offending abscissa
        is reported.
    """
    if panels < 1:
        raise ValueError("panels must be >= 1")
    if hi < lo:
        raise ValueError(f"inverted interval ({lo}, {hi})")
    if hi == lo:
        return 0.0
    mids, width = midpoints(lo, hi, panels)
    with np.errstate(all="ignore"):
        vals = np.broadcast_to(np.asarray(f(mids), dtype=float), mids.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise NonFiniteIntegrandError(float(mids[i]), vals[i])
    return float(vals.sum() * width)


def split_interval(lo, hi, cuts):
    """Split (lo, hi) at the interior points of ``cuts``; returns (lo_i, hi_i) pairs."""
    cuts = np.asarray(cuts, dtype=float)
    inside = cuts[(cuts > lo) & (cuts < hi)]
    edges = np.concatenate(([lo], np.sort(inside), [hi]))
    return [(float(a), float(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def integrate_pieces(f, pieces):
    """Sum of composite midpoint integrals over (lo, hi, panels) triples."""
    return sum(composite_midpoint(f, lo, hi, panels) for lo, hi, panels in pieces)


@dataclass(frozen=True)
class BandSegment:
    """One band's slice of the integration range (0, t] at a fixed outer time."""

    lo: float
    hi: float
    band: int  # 1-based band index

    @property
    def length(self):
        return self.hi - self.lo

    @property
    def is_empty(self):
        return self.hi <= self.lo


@dataclass(frozen=True)
class BandDecomposition:
    """Ordered band segments tiling (0, t] exactly."""

    t: float
    segments: tuple

    def __iter__(self):
        return iter(self.segments)


def decompose(t, curves):
    """Split (0, t] into band segments delimited by the discontinuity curves.

    ``curves`` needs ``n_bands`` and ``alpha(j, t)`` (with ``alpha(0, t) = 0``
    and ``alpha(n_bands, t) = t``).  Zero-length segments are kept and
    flagged via :attr:`BandSegment.is_empty`.

    Raises
    ------
    CurveOrderingError
        If a curve value drops below its predecessor by more than 1e-12.
    """
    n = curves.n_bands
    values = [0.0]
    for j in range(1, n):
        values.append(float(curves.alpha(j, t)))
    values.append(float(t))
    for j in range(1, n + 1):
        if values[j] < values[j - 1] - ORDER_TOL:
            raise CurveOrderingError(
                f"curve {j} is below curve {j - 1} at t = {t}: "
                f"{values[j]} < {values[j - 1]}"
            )
    segments = []
    lo = 0.0
    for j in range(1, n + 1):
        # clamp roundoff so the segments tile (0, t] exactly
        hi = float(t) if j == n else min(max(values[j], lo), float(t))
        segments.append(BandSegment(lo=lo, hi=hi, band=j))
        lo = hi
    return BandDecomposition(t=float(t), segments=tuple(segments))
