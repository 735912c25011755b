"""Analysis of serial dilated-convolution schedules.

Everything here is framework-free and pure. The max-gap recurrence is
cheap; :func:`footprint` is the brute-force check it is validated against.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import InvalidArgumentError, ResourceLimitError

DEFAULT_EXTENT_CAP = 4096
DEFAULT_SEARCH_CAP = 10**6


@dataclass(frozen=True)
class DilationSchedule:
    """Ordered per-layer dilation rates (input side first) and kernel edge."""

    rates: tuple
    kernel_size: int = 3

    def __post_init__(self):
        rates = tuple(int(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if not rates:
            raise InvalidArgumentError("dilation schedule must have at least one rate")
        if any(r < 1 for r in rates):
            raise InvalidArgumentError(f"dilation rates must be >= 1, got {list(rates)}")
        k = int(self.kernel_size)
        if k < 1 or k % 2 == 0:
            raise InvalidArgumentError(f"kernel_size must be a positive odd integer, got {k}")
        object.__setattr__(self, "kernel_size", k)

    @classmethod
    def parse(cls, text, kernel_size=3):
        """Build from a comma separated string such as ``"1,2,5"``."""
        try:
            rates = [int(tok) for tok in str(text).split(",") if tok.strip()]
        except ValueError as exc:
            raise InvalidArgumentError(f"cannot parse rates {text!r}") from exc
        return cls(tuple(rates), kernel_size)

    def __len__(self):
        return len(self.rates)

    def __iter__(self):
        return iter(self.rates)


@dataclass
class CoverageGrid:
    extent: int
    hits: np.ndarray  # boolean, offsets -extent..extent along each axis

    @property
    def size(self):
        return 2 * self.extent + 1

    @property
    def unhit(self):
        return int(self.hits.size - np.count_nonzero(self.hits))

    def has_holes(self):
        return self.unhit > 0


@dataclass
class GriddingReport:
    rates: tuple
    max_gaps: List[int]
    m2: int
    passes: bool
    criterion_kernel: int
    receptive_field: int = field(default=0)

    def as_text(self):
        lines = [
            f"rates: {','.join(map(str, self.rates))}",
            f"max_gaps: {','.join(map(str, self.max_gaps))}",
            f"m2: {self.m2}",
            f"passes: {str(self.passes).lower()}",
            f"receptive_field: {self.receptive_field}",
        ]
        return "\n".join(lines)


def _as_schedule(schedule, kernel_size=3):
    if isinstance(schedule, DilationSchedule):
        return schedule
    return DilationSchedule(tuple(schedule), kernel_size)


def max_gap_sequence(schedule) -> List[int]:
    """Backward max-gap recurrence ``M_1..M_n`` with ``M_n = r_n``.

    ``M_i = max(M_{i+1} - s*r_i, M_{i+1} - s*(M_{i+1} - r_i), r_i)`` where
    ``s = kernel_size - 1`` is the span of one kernel arm pair. For the
    common 3x3 kernel ``s = 2``.
    """
    schedule = _as_schedule(schedule)
    span = schedule.kernel_size - 1
    rates = schedule.rates
    gaps = [0] * len(rates)
    gaps[-1] = rates[-1]
    for i in range(len(rates) - 2, -1, -1):
        r, nxt = rates[i], gaps[i + 1]
        gaps[i] = max(nxt - span * r, nxt - span * (nxt - r), r)
    return gaps


def check_gridding(schedule) -> GriddingReport:
    """Decide whether the composed footprint of ``schedule`` has holes.

    Passes when the gap left by layers 2..n is bridged by the first layer:
    ``M_2 <= kernel_size`` and the first layer is dense (rate 1). A single
    layer passes only at rate 1.
    """
    schedule = _as_schedule(schedule)
    gaps = max_gap_sequence(schedule)
    k = schedule.kernel_size
    if len(gaps) >= 2:
        m2 = gaps[1]
        passes = m2 <= k and schedule.rates[0] == 1
    else:
        m2 = gaps[0]
        passes = schedule.rates[0] == 1
    return GriddingReport(
        rates=schedule.rates,
        max_gaps=gaps,
        m2=m2,
        passes=passes,
        criterion_kernel=k,
        receptive_field=receptive_field(schedule),
    )


def receptive_field(schedule) -> int:
    schedule = _as_schedule(schedule)
    return 1 + sum((schedule.kernel_size - 1) * r for r in schedule.rates)


def footprint_1d(schedule, cap=DEFAULT_EXTENT_CAP, skip=True) -> CoverageGrid:
    schedule = _as_schedule(schedule)
    half = (schedule.kernel_size - 1) // 2
    extent = (receptive_field(schedule) - 1) // 2
    if extent > cap:
        raise ResourceLimitError(f"footprint extent {extent} exceeds cap {cap}")
    reach = np.zeros(2 * extent + 1, dtype=bool)
    reach[extent] = True
    for r in schedule.rates:
        taps = [t * r for t in range(-half, half + 1)]
        if skip and 0 not in taps:
            taps.append(0)
        nxt = np.zeros_like(reach)
        for t in taps:
            # shifted copy; extent bounds every reachable offset, so no wrap
            if t >= 0:
                nxt[t:] |= reach[: reach.size - t]
            else:
                nxt[:t] |= reach[-t:]
        reach = nxt
    return CoverageGrid(extent, reach)


def footprint(schedule, cap=DEFAULT_EXTENT_CAP, skip=True) -> CoverageGrid:
    """Brute-force 2-D support of the serially composed dilated kernels.

    Square kernels factorise, so the 2-D grid is the outer product of the
    1-D reachability. ``skip`` adds the identity offset per layer (the
    residual connections between layers).
    """
    line = footprint_1d(schedule, cap=cap, skip=skip)
    return CoverageGrid(line.extent, np.logical_and.outer(line.hits, line.hits))


def footprint_2d_bruteforce(schedule, skip=True) -> CoverageGrid:
    """Direct 2-D Minkowski sum, for cross-checking :func:`footprint`."""
    schedule = _as_schedule(schedule)
    half = (schedule.kernel_size - 1) // 2
    extent = (receptive_field(schedule) - 1) // 2
    reached = {(0, 0)}
    for r in schedule.rates:
        taps = {(i * r, j * r) for i in range(-half, half + 1) for j in range(-half, half + 1)}
        if skip:
            taps.add((0, 0))
        reached = {(a + c, b + d) for a, b in reached for c, d in taps}
    hits = np.zeros((2 * extent + 1,) * 2, dtype=bool)
    for a, b in reached:
        hits[a + extent, b + extent] = True
    return CoverageGrid(extent, hits)


def search_schedules(depth, max_rate, kernel=3, cap=DEFAULT_SEARCH_CAP) -> List[DilationSchedule]:
    """All non-decreasing, gridding-free schedules of a given depth.

    Sorted by descending receptive field, then ascending rate sum.
    """
    if depth < 1 or max_rate < 1:
        raise InvalidArgumentError("depth and max_rate must be >= 1")
    # number of multisets of size depth drawn from max_rate values
    from math import comb

    n_candidates = comb(max_rate + depth - 1, depth)
    if n_candidates > cap:
        raise ResourceLimitError(f"{n_candidates} candidate schedules exceed cap {cap}")
    found = []
    for rates in itertools.combinations_with_replacement(range(1, max_rate + 1), depth):
        sched = DilationSchedule(rates, kernel)
        if check_gridding(sched).passes:
            found.append(sched)
    found.sort(key=lambda s: (-receptive_field(s), sum(s.rates), s.rates))
    return found


def render_ascii(grid: CoverageGrid, hit="#", miss=".") -> str:
    hits = grid.hits if grid.hits.ndim == 2 else grid.hits[None, :]
    return "\n".join("".join(hit if v else miss for v in row) for row in hits)


def render_png(grid: CoverageGrid, path, cell=8):
    from PIL import Image

    hits = grid.hits if grid.hits.ndim == 2 else grid.hits[None, :]
    img = np.where(hits, 0, 255).astype(np.uint8)
    img = np.kron(img, np.ones((cell, cell), dtype=np.uint8))
    Image.fromarray(img, mode="L").save(path)
