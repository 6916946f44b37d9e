"""Shared trace-property checkers used by several test modules."""

from shmembench.trace import LOCK_ACQUIRED, LOCK_RELEASED


def assert_sk_protocol(world, npes, M):
    """Acknowledgment values never exceed 1 and broadcasts never interleave
    between the root and the task it is currently measuring."""
    tr = world.trace
    assert tr.ack_values, "no acknowledgments traced"
    for _, _, value in tr.ack_values:
        assert value == 1
    insts = sorted(tr.bcast_instances)
    assert len(insts) == (npes - 1) * (M + 1)
    for block, task in enumerate(range(1, npes)):
        ids = insts[block * (M + 1):(block + 1) * (M + 1)]  # warm-up + M
        for prev_id, cur_id in zip(ids, ids[1:]):
            prev = tr.bcast_instances[prev_id]
            cur = tr.bcast_instances[cur_id]
            assert cur["enter"][0] >= prev["exit"][task]


def assert_lock_alternation(trace, expected_acquisitions):
    """The lock's event stream is ACQUIRED/RELEASED pairs by the same PE,
    and each PE acquired exactly its expected number of times."""
    events = [e for e in trace.entries
              if e.kind in (LOCK_ACQUIRED, LOCK_RELEASED)]
    assert len(events) == 2 * sum(expected_acquisitions.values())
    counts = dict.fromkeys(expected_acquisitions, 0)
    for acq, rel in zip(events[0::2], events[1::2]):
        assert acq.kind == LOCK_ACQUIRED
        assert rel.kind == LOCK_RELEASED
        assert acq.pe == rel.pe
        counts[acq.pe] += 1
    assert counts == expected_acquisitions
