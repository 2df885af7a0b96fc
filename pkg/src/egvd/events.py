"""Event data model, frame-to-event simulation, and voxel-grid encoding.

An event camera pixel fires an asynchronous +/-1 "event" whenever its log
intensity moves a contrast threshold away from a per-pixel reference level.
This module provides the idealized simulator (linear interpolation of log
intensity between frames, reference jumps by the threshold on each event),
the fixed-size spatio-temporal voxel-grid encoding used as network input,
and the column-oriented :class:`EventStream` container they share.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "Event",
    "EventStream",
    "EventVoxelGrid",
    "SimConfig",
    "simulate_events",
    "build_voxel_grid",
    "luminance",
]

# BT.601 luma weights; real DAVIS sensors respond to luminance, so synthetic
# events are driven by the same combination.
_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class Event:
    """One brightness-change record: pixel column/row, microsecond timestamp,
    polarity (+1 brightness increase, -1 decrease)."""

    x: int
    y: int
    t: int
    p: int


@dataclass
class SimConfig:
    """Simulator knobs.

    contrast_threshold: log-intensity step that triggers one event (symmetric
        for ON/OFF).
    log_eps: offset added to intensity before the log, keeps log finite at 0.
    refractory_us: per-pixel dead time after each event.
    """

    contrast_threshold: float = 0.15
    log_eps: float = 1e-3
    refractory_us: int = 0

    def __post_init__(self) -> None:
        if not self.contrast_threshold > 0:
            raise ValueError("contrast_threshold must be positive")
        if not self.log_eps > 0:
            raise ValueError("log_eps must be positive")
        if self.refractory_us < 0:
            raise ValueError("refractory_us must be non-negative")


class EventStream:
    """A time-sorted batch of events plus sensor geometry and time range.

    Events are stored column-wise (``t``, ``x``, ``y``, ``p`` arrays) and are
    kept sorted by ``t`` with ties broken by ``(y, x, p)`` ascending. All
    timestamps lie inside ``[t_start, t_end]``.
    """

    __slots__ = ("width", "height", "t_start", "t_end", "t", "x", "y", "p")

    def __init__(
        self,
        width: int,
        height: int,
        t_start: int,
        t_end: int,
        t: np.ndarray | None = None,
        x: np.ndarray | None = None,
        y: np.ndarray | None = None,
        p: np.ndarray | None = None,
        check: bool = True,
    ) -> None:
        self.width = int(width)
        self.height = int(height)
        self.t_start = int(t_start)
        self.t_end = int(t_end)
        self.t = np.asarray(t if t is not None else [], dtype=np.int64)
        self.x = np.asarray(x if x is not None else [], dtype=np.int32)
        self.y = np.asarray(y if y is not None else [], dtype=np.int32)
        self.p = np.asarray(p if p is not None else [], dtype=np.int8)
        if check:
            self._validate()

    def _validate(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("sensor size must be positive")
        if self.t_start > self.t_end:
            raise ValueError("t_start must not exceed t_end")
        n = len(self.t)
        if not (len(self.x) == len(self.y) == len(self.p) == n):
            raise ValueError("event columns must have equal length")
        if n == 0:
            return
        if self.t.min() < self.t_start or self.t.max() > self.t_end:
            raise ValueError("event timestamps outside [t_start, t_end]")
        if self.x.min() < 0 or self.x.max() >= self.width:
            raise ValueError("event x outside sensor width")
        if self.y.min() < 0 or self.y.max() >= self.height:
            raise ValueError("event y outside sensor height")
        if not np.isin(self.p, (-1, 1)).all():
            raise ValueError("polarity must be -1 or +1")
        order = np.lexsort((self.p, self.x, self.y, self.t))
        if not (order == np.arange(n)).all():
            raise ValueError("events must be sorted by (t, y, x, p)")

    @classmethod
    def from_unsorted(
        cls,
        width: int,
        height: int,
        t_start: int,
        t_end: int,
        t: Iterable[int],
        x: Iterable[int],
        y: Iterable[int],
        p: Iterable[int],
    ) -> "EventStream":
        """Build a stream from arbitrarily ordered columns, sorting them into
        the canonical (t, y, x, p) order."""
        t = np.asarray(list(t), dtype=np.int64)
        x = np.asarray(list(x), dtype=np.int32)
        y = np.asarray(list(y), dtype=np.int32)
        p = np.asarray(list(p), dtype=np.int8)
        order = np.lexsort((p, x, y, t))
        return cls(width, height, t_start, t_end, t[order], x[order], y[order], p[order])

    @classmethod
    def from_events(
        cls, width: int, height: int, t_start: int, t_end: int, events: Iterable[Event]
    ) -> "EventStream":
        ev = list(events)
        return cls.from_unsorted(
            width,
            height,
            t_start,
            t_end,
            [e.t for e in ev],
            [e.x for e in ev],
            [e.y for e in ev],
            [e.p for e in ev],
        )

    def __len__(self) -> int:
        return len(self.t)

    def __getitem__(self, i: int) -> Event:
        return Event(int(self.x[i]), int(self.y[i]), int(self.t[i]), int(self.p[i]))

    def __iter__(self) -> Iterator[Event]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EventStream):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.t_start == other.t_start
            and self.t_end == other.t_end
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.y, other.y)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self) -> str:
        return (
            f"EventStream({self.width}x{self.height}, "
            f"[{self.t_start}, {self.t_end}] us, {len(self)} events)"
        )

    def slice_time(self, t_start: int, t_end: int, include_end: bool = False) -> "EventStream":
        """Sub-stream with timestamps in ``[t_start, t_end)`` (or closed at
        the right when ``include_end``). The new stream's time range is the
        requested window."""
        if include_end:
            mask = (self.t >= t_start) & (self.t <= t_end)
        else:
            mask = (self.t >= t_start) & (self.t < t_end)
        return EventStream(
            self.width,
            self.height,
            t_start,
            t_end,
            self.t[mask],
            self.x[mask],
            self.y[mask],
            self.p[mask],
        )

    def polarity_sum(self) -> int:
        return int(self.p.astype(np.int64).sum())


@dataclass
class EventVoxelGrid:
    """Bilinear-in-time accumulation of event polarities: shape (B, H, W).

    ``t_start``/``t_end`` record the source window the timestamps were
    normalized against.
    """

    data: np.ndarray
    t_start: int
    t_end: int

    @property
    def n_bins(self) -> int:
        return self.data.shape[0]

    def mass(self) -> float:
        return float(self.data.sum())


def luminance(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (..., 3) RGB array in [0, 1]."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.shape[-1] != 3:
        raise ValueError("expected trailing RGB axis of size 3")
    return rgb @ _LUMA_WEIGHTS


def simulate_events(
    frames: Sequence[tuple[int, np.ndarray]], cfg: SimConfig | None = None
) -> EventStream:
    """Simulate an event stream from timestamped grayscale frames.

    ``frames`` is a sequence of ``(timestamp_us, frame)`` with strictly
    increasing integer timestamps and frames of one common H x W shape, values
    in [0, 1]. Log intensity ``log(I + log_eps)`` is linearly interpolated
    between frames; every crossing of the per-pixel reference +/- threshold
    emits an event at the (floored to us) crossing time, the reference jumps
    by exactly the threshold, and the pixel goes dead for ``refractory_us``.

    If the signal is already past a threshold when a pixel comes out of its
    dead time, the event fires right there with the sign of the pending
    excursion.
    """
    cfg = cfg or SimConfig()
    if len(frames) < 2:
        raise ValueError("insufficient frames: need at least 2")

    ts = [int(t) for t, _ in frames]
    for a, b in zip(ts, ts[1:]):
        if b <= a:
            raise ValueError("non-monotonic timestamps")

    first = np.asarray(frames[0][1], dtype=np.float64)
    if first.ndim != 2:
        raise ValueError("frames must be 2-D grayscale arrays")
    shape = first.shape
    height, width = shape

    C = float(cfg.contrast_threshold)
    refr = float(cfg.refractory_us)

    log_prev = np.log(first + cfg.log_eps)
    ref = log_prev.copy()
    resume = np.full(shape, -np.inf)

    ys_grid, xs_grid = np.mgrid[0:height, 0:width]
    out_t: list[np.ndarray] = []
    out_x: list[np.ndarray] = []
    out_y: list[np.ndarray] = []
    out_p: list[np.ndarray] = []

    for (t0, _), (t1, frame1) in zip(frames, frames[1:]):
        frame1 = np.asarray(frame1, dtype=np.float64)
        if frame1.shape != shape:
            raise ValueError("frame shape mismatch")
        log_next = np.log(frame1 + cfg.log_eps)

        t0f = float(t0)
        t1f = float(t1)
        slope = (log_next - log_prev) / (t1f - t0f)

        while True:
            t_eff = np.maximum(t0f, resume)
            live = t_eff <= t1f
            l_eff = log_prev + slope * (t_eff - t0f)
            d = l_eff - ref

            pol = np.zeros(shape, dtype=np.int8)
            pol[live & (d >= C)] = 1
            pol[live & (d <= -C)] = -1
            tc = np.where(pol != 0, t_eff, np.inf)

            # Forward crossing of the next level in the direction of motion.
            fwd = live & (pol == 0) & (slope != 0)
            if fwd.any():
                sgn = np.sign(slope)
                level = ref + C * sgn
                with np.errstate(divide="ignore", invalid="ignore"):
                    tc_fwd = t0f + (level - log_prev) / slope
                tc_fwd = np.maximum(tc_fwd, t_eff)
                hit = fwd & (tc_fwd <= t1f)
                pol[hit] = sgn[hit].astype(np.int8)
                tc[hit] = tc_fwd[hit]

            fired = pol != 0
            if not fired.any():
                break

            out_t.append(np.floor(tc[fired]).astype(np.int64))
            out_x.append(xs_grid[fired].astype(np.int32))
            out_y.append(ys_grid[fired].astype(np.int32))
            out_p.append(pol[fired])
            ref[fired] += C * pol[fired]
            resume[fired] = tc[fired] + refr

        log_prev = log_next

    if out_t:
        t_all = np.concatenate(out_t)
        x_all = np.concatenate(out_x)
        y_all = np.concatenate(out_y)
        p_all = np.concatenate(out_p)
        order = np.lexsort((p_all, x_all, y_all, t_all))
        t_all, x_all, y_all, p_all = t_all[order], x_all[order], y_all[order], p_all[order]
    else:
        t_all = x_all = y_all = p_all = None

    return EventStream(width, height, ts[0], ts[-1], t_all, x_all, y_all, p_all)


def build_voxel_grid(
    stream: EventStream, n_bins: int, normalize: str | None = None
) -> EventVoxelGrid:
    """Encode a stream into a (B, H, W) voxel grid.

    Each event's timestamp is mapped to ``t* = (B-1)(t - t_start) / (t_end -
    t_start)`` and its polarity is shared bilinearly between the two nearest
    bins. Normalization of ``t*`` always uses the stream's declared time
    range. An empty stream gives the zero grid; a zero-duration window with
    events puts all weight in bin 0.

    ``normalize='maxabs'`` optionally divides the finished grid by its max
    absolute value (raw accumulation is the default).
    """
    n_bins = int(n_bins)
    if n_bins < 2:
        raise ValueError("n_bins must be at least 2")
    if normalize not in (None, "maxabs"):
        raise ValueError(f"unknown normalize mode: {normalize!r}")

    grid = np.zeros((n_bins, stream.height, stream.width), dtype=np.float64)
    if len(stream) > 0:
        duration = stream.t_end - stream.t_start
        p = stream.p.astype(np.float64)
        if duration == 0:
            np.add.at(grid, (np.zeros(len(stream), dtype=np.int64), stream.y, stream.x), p)
        else:
            t_star = (n_bins - 1) * (stream.t - stream.t_start).astype(np.float64) / duration
            lo = np.floor(t_star).astype(np.int64)
            frac = t_star - lo
            np.add.at(grid, (lo, stream.y, stream.x), p * (1.0 - frac))
            hi_ok = lo + 1 <= n_bins - 1
            np.add.at(
                grid,
                (lo[hi_ok] + 1, stream.y[hi_ok], stream.x[hi_ok]),
                p[hi_ok] * frac[hi_ok],
            )
    if normalize == "maxabs":
        peak = np.abs(grid).max()
        if peak > 0:
            grid = grid / peak
    return EventVoxelGrid(grid, stream.t_start, stream.t_end)
