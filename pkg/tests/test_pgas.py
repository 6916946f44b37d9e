"""Simulator-level tests: RMA semantics, quiet, atomics, determinism."""

import pytest

from shmembench import (ClockModel, DeadlockError, HeapFault, NetworkModel,
                        PgasWorld, ProgressMode, PutReturnPolicy,
                        run_simulation)
from shmembench import trace as _tr
from shmembench.trace import (ACK_INC, LOCAL_COMPLETE, POST, QUIET_DONE,
                              REMOTE_DELIVERED)

NET = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6, G=1e-9)
LEG = NET.o_s + NET.L + NET.o_r  # zero-payload one-way cost


def run2(net, prog0, prog1=None, **kw):
    world = PgasWorld(2, net, **kw)
    idle = lambda pe: iter(())
    trace = world.run([prog0, prog1 or idle])
    return world, trace


class TestBlockingGet:
    def test_zero_cost_network_returns_instantly(self):
        out = {}

        def prog(pe):
            yield from pe.get(1, 0, 0)
            out["t"] = pe.world.now

        run2(NetworkModel(), prog)
        assert out["t"] == 0.0

    def test_round_trip_hand_sum(self):
        # request leg o_s+L+o_r, response leg o_s+L+G*n+o_r
        out = {}

        def prog(pe):
            yield from pe.get(1, 0, 8)
            out["t"] = pe.world.now

        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6)
        run2(net, prog)
        assert out["t"] == pytest.approx(2.4e-6, rel=1e-12)

    def test_get_moves_data(self):
        def prog(pe):
            yield from pe.get(1, 64, 8)
            assert pe.load_int(64) == 4242

        def target(pe):
            pe.store_int(64, 4242)
            return
            yield

        world = PgasWorld(2, NET)
        world.run([prog, target])

    def test_get_elapsed_matches_transfer_formula(self):
        out = {}

        def prog(pe):
            t0 = pe.world.now
            yield from pe.get(1, 0, 4096)
            out["dt"] = pe.world.now - t0

        run2(NET, prog)
        expect = NET.transfer_duration(0) + NET.transfer_duration(4096)
        assert out["dt"] == pytest.approx(expect, rel=1e-12)

    def test_out_of_range_access_faults(self):
        def prog(pe):
            yield from pe.get(1, pe.world.heap_size - 4, 8)

        with pytest.raises(HeapFault):
            run2(NET, prog)


class TestBlockingPut:
    def test_local_completion_returns_before_delivery(self):
        out = {}

        def prog(pe):
            op = yield from pe.put(1, 0, 1024)
            out["ret"] = pe.world.now
            out["op"] = op

        world, trace = run2(NET, prog)
        ev = trace.op_events[out["op"]]
        assert out["ret"] == pytest.approx(NET.o_s + NET.G * 1024, rel=1e-12)
        assert ev[LOCAL_COMPLETE] < ev[REMOTE_DELIVERED]
        assert ev[REMOTE_DELIVERED] == pytest.approx(
            NET.o_s + NET.L + NET.G * 1024 + NET.o_r, rel=1e-12)

    def test_remote_completion_blocks_until_delivery(self):
        out = {}

        def prog(pe):
            yield from pe.put(1, 0, 1024)
            out["ret"] = pe.world.now

        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6, G=1e-9,
                           put_return_policy=PutReturnPolicy.REMOTE_COMPLETION)
        run2(net, prog)
        assert out["ret"] == pytest.approx(net.transfer_duration(1024), rel=1e-12)

    def test_self_target_pays_full_cost(self):
        out = {}

        def prog(pe):
            yield from pe.get(0, 0, 8)
            out["t"] = pe.world.now

        world = PgasWorld(1, NET)
        world.run([prog])
        assert out["t"] == pytest.approx(
            NET.transfer_duration(0) + NET.transfer_duration(8), rel=1e-12)


class TestNonBlocking:
    def test_post_cost_is_send_overhead_regardless_of_size(self):
        for n in (1, 1 << 20):
            out = {}

            def prog(pe):
                yield from pe.put_nbi(1, 0, n)
                out["t"] = pe.world.now
                yield from pe.quiet()

            run2(NET, prog)
            assert out["t"] == pytest.approx(NET.o_s, rel=1e-12)

    def test_background_quiet_after_wait_is_cheap(self):
        out = {}

        def prog(pe):
            yield from pe.put_nbi(1, 0, 8)
            yield from pe.busy_wait(10 * NET.transfer_duration(8))
            t0 = pe.world.now
            yield from pe.quiet()
            out["dt"] = pe.world.now - t0

        run2(NET, prog)
        assert out["dt"] == pytest.approx(NET.q0, rel=1e-12)

    def test_onquiet_quiet_carries_the_transfer(self):
        out = {}

        def prog(pe):
            yield from pe.put_nbi(1, 0, 4096)
            yield from pe.busy_wait(10 * NET.transfer_duration(4096))
            t0 = pe.world.now
            yield from pe.quiet()
            out["dt"] = pe.world.now - t0

        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6, G=1e-9,
                           progress_mode=ProgressMode.ON_QUIET)
        run2(net, prog)
        # q0 + L + G*n + o_r: o_s was already charged at post time
        assert out["dt"] == pytest.approx(
            net.q0 + net.L + net.G * 4096 + net.o_r, rel=1e-12)

    def test_empty_quiet_costs_q0(self):
        out = {}

        def prog(pe):
            t0 = pe.world.now
            qid = yield from pe.quiet()
            out["dt"] = pe.world.now - t0
            out["qid"] = qid

        world, trace = run2(NET, prog)
        assert out["dt"] == pytest.approx(NET.q0, rel=1e-12)
        assert trace.quiet_elapsed(out["qid"]) == pytest.approx(NET.q0, rel=1e-12)

    def test_quiet_completeness(self):
        # no remote_delivered for a PE's ops after its covering quiet_done
        def prog(pe):
            for _ in range(4):
                yield from pe.put_nbi(1, 0, 256)
            yield from pe.quiet()

        world, trace = run2(NET, prog)
        t_quiet = trace.events_of_kind(QUIET_DONE)[0].t_global
        for ev in trace.events_of_kind(REMOTE_DELIVERED):
            assert ev.t_global <= t_quiet

    def test_onquiet_get_nbi_delivered_in_quiet(self):
        def prog(pe):
            yield from pe.get_nbi(1, 64, 8)
            assert pe.load_int(64) == 0
            yield from pe.quiet()
            assert pe.load_int(64) == 99

        def target(pe):
            pe.store_int(64, 99)
            return
            yield

        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6,
                           progress_mode=ProgressMode.ON_QUIET)
        world = PgasWorld(2, net)
        world.run([prog, target])


class TestAtomicsAndWait:
    def test_fetch_inc_returns_previous_value(self):
        out = []

        def prog(pe):
            out.append((yield from pe.fetch_inc(1, 0)))
            out.append((yield from pe.fetch_inc(1, 0)))

        world, _ = run2(NET, prog)
        assert out == [0, 1]
        assert world._heap_read_int(1, 0) == 2

    def test_fetch_inc_round_trip_cost(self):
        out = {}

        def prog(pe):
            t0 = pe.world.now
            yield from pe.fetch_inc(1, 0)
            out["dt"] = pe.world.now - t0

        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6)
        run2(net, prog)
        assert out["dt"] == pytest.approx(2 * LEG, rel=1e-12)

    def test_wait_until_already_satisfied_returns_immediately(self):
        out = {}

        def prog(pe):
            pe.store_int(0, 5)
            yield from pe.wait_until(0, "ge", 5)
            out["t"] = pe.world.now

        run2(NET, prog)
        assert out["t"] == 0.0

    def test_waiter_wakes_at_remote_apply_instant(self):
        out = {}

        def waiter(pe):
            yield from pe.wait_until(0, "eq", 1)
            out["wake"] = pe.world.now

        def incrementer(pe):
            yield from pe.busy_wait(5e-6)
            yield from pe.fetch_inc(0, 0)

        world = PgasWorld(2, NET)
        trace = world.run([waiter, incrementer])
        t_apply = trace.events_of_kind(ACK_INC)[0].t_global
        assert out["wake"] == t_apply

    def test_unsatisfied_wait_reports_deadlock(self):
        def prog(pe):
            yield from pe.wait_until(0, "eq", 1)

        world = PgasWorld(2, NET)
        with pytest.raises(DeadlockError) as ei:
            world.run([prog, lambda pe: iter(())])
        assert 0 in ei.value.blocked


class TestDeterminism:
    def _trace_text(self, seed):
        net = NetworkModel(o_s=1e-7, o_r=1e-7, L=1e-6, G=1e-9,
                           jitter_half_width=2e-7)
        world = PgasWorld(4, net, ClockModel.ideal(4, jitter_seed=seed))

        def prog(pe):
            yield from pe.barrier()
            if pe.rank == 0:
                yield from pe.put(1, 0, 64)
                yield from pe.fetch_inc(2, 0)
            yield from pe.broadcast(0, 128, 32)
            yield from pe.barrier()

        return world.run([prog] * 4).export_text()

    def test_same_seed_identical_traces(self):
        assert self._trace_text(7) == self._trace_text(7)

    def test_different_seed_differs(self):
        assert self._trace_text(7) != self._trace_text(8)

    def test_empty_programs_empty_trace(self):
        world = PgasWorld(3, NET)
        trace = world.run([lambda pe: iter(())] * 3)
        assert trace.entries == []

    def test_world_runs_once(self):
        world = PgasWorld(1, NET)
        world.run([lambda pe: iter(())])
        with pytest.raises(Exception):
            world.run([lambda pe: iter(())])


class TestTrace:
    def test_op_event_ordering_invariant(self):
        def prog(pe):
            yield from pe.put(1, 0, 128)
            yield from pe.put_nbi(1, 0, 128)
            yield from pe.quiet()
            yield from pe.get(1, 0, 128)

        world, trace = run2(NET, prog)
        for op, ev in trace.op_events.items():
            if POST in ev and REMOTE_DELIVERED in ev:
                assert ev[POST] <= ev.get(LOCAL_COMPLETE, ev[REMOTE_DELIVERED])
                assert ev.get(LOCAL_COMPLETE, ev[POST]) <= ev[REMOTE_DELIVERED]

    def test_export_format(self):
        def prog(pe):
            yield from pe.put(1, 0, 8)

        world, trace = run2(NET, prog)
        lines = trace.export_text().splitlines()
        assert len(lines) == len(trace.entries)
        for line in lines:
            t, pe, kind, op = line.split("\t")
            float(t)
            int(pe)
            assert kind in _tr.EVENT_KINDS
            # >= 12 significant digits
            assert len(t.split("e")[0].replace(".", "").replace("-", "")) >= 12

    def test_run_simulation_wrapper(self):
        world = PgasWorld(1, NET)
        trace = run_simulation(world, [lambda pe: iter(())])
        assert trace is world.trace
