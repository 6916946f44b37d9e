"""Point-to-point measurement functions with selectable timing strategy.

Three timing strategies cover the usual trade-off: a single timer pair
around the whole loop, a timer pair per iteration, and the subtraction
method for routines that can only run in the context of another call
(quiet after a posted non-blocking operation).
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum

from .pgas import PgasWorld

UNSTABLE_REL_SIGMA = 0.05
DEFAULT_INNER_REPS = 64
SRC_OFFSET = 0
DST_OFFSET = 1 << 16


class TimingStrategy(Enum):
    GLOBAL_LOOP = "global_loop"      # one timer pair outside the loop
    PER_ITERATION = "per_iteration"  # timer pair inside every iteration
    SUBTRACT_POST = "subtract_post"  # time the loop, subtract pilot post cost


@dataclass
class P2PResult:
    mean: float
    samples: int
    strategy: TimingStrategy
    nbytes: int
    components: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


def _timed_loop(pe, body, iters, strategy):
    """Run `body(i)` iters times; returns mean per-iteration local time."""
    if strategy is TimingStrategy.PER_ITERATION:
        total = 0.0
        for i in range(iters):
            t1 = yield from pe.stamp_begin()
            yield from body(i)
            t2 = yield from pe.stamp_end()
            total += t2 - t1
        return total / iters
    t1 = yield from pe.stamp_begin()
    for i in range(iters):
        yield from body(i)
    t2 = yield from pe.stamp_end()
    return (t2 - t1) / iters


def _idle(pe):
    return iter(())


def _run_on_pe0(world: PgasWorld, frag) -> dict:
    """Run `frag` on PE 0 of a fresh world, idle elsewhere; returns its record."""
    w = world.fresh()
    out = {}

    def prog(pe):
        out["value"] = yield from frag(pe)

    w.run([prog] + [_idle] * (w.npes - 1))
    out["world"] = w
    return out


def measure_blocking(world: PgasWorld, kind: str, nbytes: int,
                     iters: int = DEFAULT_INNER_REPS,
                     strategy: TimingStrategy = TimingStrategy.GLOBAL_LOOP) -> P2PResult:
    """Blocking get: call-to-return time.  Blocking put: time of (put; quiet)
    minus the separately calibrated near-empty quiet cost."""
    if kind not in ("get", "put"):
        raise ValueError(f"kind must be get or put, not {kind!r}")
    if iters < 1:
        raise ValueError("iters must be >= 1")

    if kind == "get":
        def frag(pe):
            def body(i):
                yield from pe.get(1, SRC_OFFSET, nbytes, dst_offset=DST_OFFSET)
            return (yield from _timed_loop(pe, body, iters, strategy))

        mean = _run_on_pe0(world, frag)["value"]
        return P2PResult(mean, iters, strategy, nbytes)

    # the calibration is a pilot; always time it with the accurate strategy
    quiet_cal = measure_quiet(world, iters, TimingStrategy.GLOBAL_LOOP)

    def frag(pe):
        def body(i):
            yield from pe.put(1, DST_OFFSET, nbytes, src_offset=SRC_OFFSET)
            yield from pe.quiet()
        return (yield from _timed_loop(pe, body, iters, strategy))

    raw = _run_on_pe0(world, frag)["value"]
    mean = raw - quiet_cal.mean
    flags = []
    if mean < 0:
        mean = 0.0
        flags.append("unstable")
    return P2PResult(mean, iters, strategy, nbytes,
                     components={"raw": raw, "quiet": quiet_cal.mean},
                     flags=flags)


def measure_quiet(world: PgasWorld, iters: int = DEFAULT_INNER_REPS,
                  strategy: TimingStrategy = TimingStrategy.GLOBAL_LOOP) -> P2PResult:
    """Cost of a near-empty quiet: a 1-byte posted put then quiet."""

    def frag(pe):
        def body(i):
            yield from pe.put_nbi(1, DST_OFFSET, 1, src_offset=SRC_OFFSET)
            yield from pe.quiet()
        return (yield from _timed_loop(pe, body, iters, strategy))

    mean = _run_on_pe0(world, frag)["value"]
    return P2PResult(mean, iters, strategy, 1)


def _post(pe, kind, nbytes):
    if kind == "put":
        return pe.put_nbi(1, DST_OFFSET, nbytes, src_offset=SRC_OFFSET)
    return pe.get_nbi(1, SRC_OFFSET, nbytes, dst_offset=DST_OFFSET)


def measure_nonblocking(world: PgasWorld, kind: str, variant: str,
                        nbytes: int, iters: int = DEFAULT_INNER_REPS,
                        strategy: TimingStrategy = TimingStrategy.GLOBAL_LOOP) -> P2PResult:
    """The four non-blocking measurement shapes.

    Full: post immediately followed by quiet.
    Post: the posting call alone.
    Quiet: the quiet after a post, via the subtraction method.
    Overlap: post and quiet separated by a busy-wait of twice the pilot
        full time; reports the active (non-overlapped) time.
    """
    if kind not in ("get", "put"):
        raise ValueError(f"kind must be get or put, not {kind!r}")
    if variant not in ("full", "post", "quiet", "overlap"):
        raise ValueError(f"unknown variant {variant!r}")
    flags: list[str] = []

    if variant == "full":
        def frag(pe):
            def body(i):
                yield from _post(pe, kind, nbytes)
                yield from pe.quiet()
            return (yield from _timed_loop(pe, body, iters, strategy))

        mean = _run_on_pe0(world, frag)["value"]
        return P2PResult(mean, iters, strategy, nbytes)

    if variant == "post":
        def frag(pe):
            def body(i):
                yield from _post(pe, kind, nbytes)
            m = yield from _timed_loop(pe, body, iters, strategy)
            yield from pe.quiet()  # drain outside the timed region
            return m

        mean = _run_on_pe0(world, frag)["value"]
        return P2PResult(mean, iters, strategy, nbytes)

    if variant == "quiet":
        # subtraction method: full loop time minus the pilot post cost
        post = measure_nonblocking(world, kind, "post", nbytes, iters, strategy)
        full = measure_nonblocking(world, kind, "full", nbytes, iters,
                                   TimingStrategy.GLOBAL_LOOP)
        mean = full.mean - post.mean
        if mean < 0:
            mean = 0.0
            flags.append("unstable")
        return P2PResult(mean, iters, strategy, nbytes,
                         components={"full": full.mean, "post": post.mean},
                         flags=flags)

    # overlap
    pilot = _pilot_full(world, kind, nbytes, iters)
    if pilot["rel_sigma"] > UNSTABLE_REL_SIGMA:
        flags.append("unstable_pilot")
    full_mean = pilot["mean"]
    waited = {}

    def frag(pe):
        def body(i):
            yield from _post(pe, kind, nbytes)
            dt = yield from pe.busy_wait(2.0 * full_mean)
            waited[i] = dt
            yield from pe.quiet()
        return (yield from _timed_loop(pe, body, iters, strategy))

    loop_mean = _run_on_pe0(world, frag)["value"]
    wait_mean = sum(waited.values()) / iters
    active = loop_mean - wait_mean
    if active < 0:
        active = 0.0
        flags.append("unstable")
    return P2PResult(active, iters, strategy, nbytes,
                     components={"full": full_mean, "loop": loop_mean,
                                 "busy_wait": wait_mean,
                                 "overlap_active": active},
                     flags=flags)


def _pilot_full(world: PgasWorld, kind: str, nbytes: int, iters: int,
                reps: int = 4) -> dict:
    vals = [measure_nonblocking(world, kind, "full", nbytes, iters,
                                TimingStrategy.GLOBAL_LOOP).mean
            for _ in range(reps)]
    mean = statistics.fmean(vals)
    sigma = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return {"mean": mean, "rel_sigma": sigma / mean if mean > 0 else 0.0}


def calibrate_busy_wait(world: PgasWorld, units: int = 1_000_000) -> float:
    """Measured busy-wait throughput in work units per second."""
    w = world.fresh()
    out = {}

    def prog(pe):
        t1 = yield from pe.stamp_begin()
        yield from pe.busy_wait(units * w.busy_wait_unit)
        t2 = yield from pe.stamp_end()
        out["rate"] = units / (t2 - t1)

    w.run([prog] + [_idle] * (w.npes - 1))
    return out["rate"]
