import pytest

from mpo import trace as tr
from mpo.channels import (
    DeliverProb,
    DropPattern,
    EventuallyTimely,
    FairLossy,
    Lossy,
    StronglyNonTimely,
    Timely,
)
from mpo.core import TimerConfig
from mpo.netsim import (
    GeneralPropagation,
    Scenario,
    ScenarioError,
    preset_dependable,
    run,
    run_reference,
    validate_scenario,
)


def mixed_scenario(horizon=700, crash=True):
    return Scenario(
        n=4,
        horizon=horizon,
        seed=99,
        timers=TimerConfig(sender_timeout=16, initial_receiver_timeout=8,
                           timeout_increment=2),
        default_channel=Timely(3),
        channels={
            (0, 1): FairLossy(DropPattern(2), 2, 9),
            (1, 0): StronglyNonTimely(burst=4, window_cap=64, delay_min=1, delay_max=5),
            (2, 3): Lossy(),
            (3, 2): EventuallyTimely(bound=2, unreliable_until=200),
        },
        crash_schedule={3: 500} if crash else {},
    )


class TestDeterminism:
    def test_same_seed_identical_traces(self):
        scn = mixed_scenario()
        assert run(scn).events == run(scn).events

    def test_different_seed_differs(self):
        a = run(preset_dependable(4, seed=1, horizon=2000))
        b = run(preset_dependable(4, seed=2, horizon=2000))
        assert a.events != b.events

    def test_fingerprint_tracks_config(self):
        a = preset_dependable(4, seed=1, horizon=2000)
        b = preset_dependable(4, seed=2, horizon=2000)
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint() == preset_dependable(4, seed=1, horizon=2000).fingerprint()


class TestReferenceEquivalence:
    def test_preset_with_crash(self):
        scn = preset_dependable(4, seed=7, horizon=800,
                                crash_victims=(2,), crash_steps=(300,))
        assert run(scn).events == run_reference(scn).events

    def test_mixed_channels(self):
        scn = mixed_scenario()
        assert run(scn).events == run_reference(scn).events

    def test_general_propagation(self):
        scn = Scenario(n=3, horizon=400, seed=5,
                       propagation=GeneralPropagation(0.7, 0.6, bound=3))
        assert run(scn).events == run_reference(scn).events


class TestStepSemantics:
    def test_steps_nondecreasing_and_bounded(self):
        t = run(mixed_scenario())
        steps = [ev.step for ev in t.events]
        assert steps == sorted(steps)
        assert all(1 <= s <= t.horizon for s in steps)

    def test_delivery_and_drop_reference_a_send(self):
        t = run(mixed_scenario())
        sent = set()
        for ev in t.events:
            if isinstance(ev, tr.Send):
                sent.add((ev.mid, ev.src, ev.dst))
            elif isinstance(ev, (tr.Deliver, tr.Drop)):
                assert (ev.mid, ev.src, ev.dst) in sent

    def test_timely_bound_respected(self):
        t = run(Scenario(n=3, horizon=600, seed=3, default_channel=Timely(4)))
        send_step = {}
        for ev in t.events:
            if isinstance(ev, tr.Send):
                send_step[(ev.mid, ev.src, ev.dst)] = ev.step
            elif isinstance(ev, tr.Deliver):
                delay = ev.step - send_step[(ev.mid, ev.src, ev.dst)]
                assert 1 <= delay <= 4

    def test_eventually_timely_violations_only_before_boundary(self):
        scn = Scenario(
            n=2, horizon=3000, seed=8,
            timers=TimerConfig(sender_timeout=8, initial_receiver_timeout=6),
            default_channel=EventuallyTimely(bound=3, unreliable_until=900),
        )
        t = run(scn)
        send_step = {}
        for ev in t.events:
            if isinstance(ev, tr.Send):
                send_step[(ev.mid, ev.src, ev.dst)] = ev.step
            elif isinstance(ev, tr.Deliver):
                sent = send_step[(ev.mid, ev.src, ev.dst)]
                if ev.step - sent > 3:
                    assert sent < 900
            elif isinstance(ev, tr.Drop):
                assert send_step[(ev.mid, ev.src, ev.dst)] < 900

    def test_crashed_processes_fall_silent(self):
        scn = preset_dependable(4, seed=11, horizon=3000,
                                crash_victims=(1, 2), crash_steps=(400, 900))
        t = run(scn)
        crash_at = {1: 400, 2: 900}
        for ev in t.events:
            if isinstance(ev, (tr.Send, tr.TimerFired)):
                proc = ev.src if isinstance(ev, tr.Send) else ev.proc
                if proc in crash_at:
                    assert ev.step <= crash_at[proc]

    def test_alive_packet_bound_holds_on_any_trace(self):
        # tree edges plus one full fan-out: never more than 2(n-1) packets
        # per heartbeat instance, even during the startup scramble
        for scn in (mixed_scenario(), preset_dependable(6, seed=5, horizon=3000),
                    Scenario(n=5, horizon=2000, seed=12, default_channel=Timely(2))):
            t = run(scn)
            counts = {}
            kinds = {}
            for ev in t.events:
                if isinstance(ev, tr.Send):
                    kinds[ev.mid] = ev.kind
                    counts[ev.mid] = counts.get(ev.mid, 0) + 1
            for mid, c in counts.items():
                if kinds[mid] == "alive":
                    assert c <= 2 * (scn.n - 1), (mid, c)

    def test_forward_at_most_once(self):
        # all packets of one (process, message) emission share one step
        t = run(mixed_scenario())
        emission_steps = {}
        for ev in t.events:
            if isinstance(ev, tr.Send):
                key = (ev.src, ev.mid)
                emission_steps.setdefault(key, set()).add(ev.step)
        assert all(len(steps) == 1 for steps in emission_steps.values())


class TestConvergenceBehavior:
    def test_two_processes_all_timely(self):
        # generous receive timeout: no failure reports, weights stay zero,
        # and the id tie rule makes 0 the leader
        scn = Scenario(n=2, horizon=2000, seed=1, default_channel=Timely(2),
                       timers=TimerConfig(sender_timeout=16,
                                          initial_receiver_timeout=24))
        t = run(scn)
        assert t.final_leaders == [0, 0]
        assert not any(isinstance(ev, tr.Send) and ev.kind == "failed"
                       for ev in t.events)

    def test_two_processes_tight_timeout_still_agrees(self):
        # a too-small receive timeout provokes mutual blame; weights decide
        # the winner, but both sides still agree on one correct process
        t = run(Scenario(n=2, horizon=2000, seed=1, default_channel=Timely(2)))
        assert t.final_leaders[0] == t.final_leaders[1]
        assert t.final_leaders[0] in (0, 1)

    def test_preset_converges_to_designated_leader(self):
        for seed in range(5):
            t = run(preset_dependable(5, seed=seed, horizon=8000))
            assert t.final_leaders == [0] * 5

    def test_nonzero_designated_leader_small_net(self):
        # leader 1 with process 0 having only dead outgoing channels: 0 can
        # never sustain a claim, so everyone settles on 1
        channels = {}
        for x in (1, 2):
            channels[(1, x if x != 1 else 0)] = Timely(2)
        scn = Scenario(
            n=3, horizon=30_000, seed=4,
            timers=TimerConfig(sender_timeout=32, initial_receiver_timeout=40),
            default_channel=Lossy(),
            channels={(1, 0): Timely(2), (1, 2): Timely(2),
                      (0, 1): Lossy(), (2, 1): FairLossy(DeliverProb(0.6), 2, 6),
                      (0, 2): Lossy(), (2, 0): Lossy()},
        )
        t = run(scn)
        assert t.final_leaders[1] == 1
        assert t.final_leaders[2] == 1

    def test_crash_of_leader_forces_reelection(self):
        # both 0 and 1 own timely out-stars; after 0 dies the survivors
        # re-converge on 1
        n = 4
        channels = {}
        for x in range(1, n):
            channels[(0, x)] = Timely(2)
        for x in range(n):
            if x != 1:
                channels[(1, x)] = Timely(2)
            if x != 0:
                channels[(x, 0)] = FairLossy(DeliverProb(0.5), 4, 8)
            if x not in (0, 1):
                channels[(x, 1)] = FairLossy(DeliverProb(0.5), 4, 8)
        scn = Scenario(
            n=n, horizon=20_000, seed=13,
            timers=TimerConfig(sender_timeout=32, initial_receiver_timeout=96),
            default_channel=Lossy(),
            channels=channels,
            crash_schedule={0: 5_000},
        )
        t = run(scn)
        assert t.final_leaders[0] == 0  # frozen at crash time
        assert all(t.final_leaders[p] == 1 for p in (1, 2, 3))
        changes = [ev for ev in t.events
                   if isinstance(ev, tr.LeaderChange) and ev.step > 5_000]
        assert changes, "survivors re-elected after the crash"


class TestGeneralPropagation:
    def test_timely_subset_of_reliable(self):
        from mpo.netsim import _Engine
        scn = Scenario(n=4, horizon=300, seed=21,
                       propagation=GeneralPropagation(0.6, 0.5, bound=3))
        eng = _Engine(scn)
        eng.run_fast()
        assert eng.prop_graphs, "messages were sampled"
        for reliable, timely in eng.prop_graphs.values():
            assert timely <= reliable

    def test_drops_match_unreliable_edges(self):
        scn = Scenario(n=3, horizon=300, seed=2,
                       propagation=GeneralPropagation(0.5, 0.5, bound=2))
        t = run(scn)
        assert any(isinstance(ev, tr.Drop) for ev in t.events)


class TestScenarioPlumbing:
    def test_validate_rejects_bad_crash(self):
        with pytest.raises(ScenarioError):
            validate_scenario(Scenario(n=3, horizon=100, seed=1,
                                       crash_schedule={5: 10}))
        with pytest.raises(ScenarioError):
            validate_scenario(Scenario(n=3, horizon=100, seed=1,
                                       crash_schedule={1: 101}))

    def test_validate_rejects_tiny_network(self):
        with pytest.raises(ScenarioError):
            validate_scenario(Scenario(n=1, horizon=100, seed=1))

    def test_round_trip_dict(self):
        scn = mixed_scenario()
        again = Scenario.from_dict(scn.to_dict())
        assert again.to_dict() == scn.to_dict()
        assert run(again).events == run(scn).events

    def test_preset_validates(self):
        with pytest.raises(ScenarioError):
            preset_dependable(4, seed=1, crash_victims=(0,), crash_steps=())
        with pytest.raises(ScenarioError):
            preset_dependable(2, seed=1, crash_victims=(0, 1), crash_steps=(10, 20))

    def test_preset_leader_crash_wires_backup_and_reelects(self):
        scn = preset_dependable(5, seed=2, horizon=30_000,
                                crash_victims=(0,), crash_steps=(5_000,))
        assert scn.labels["backup"] == 1
        t = run(scn)
        assert t.final_leaders[1:] == [1] * 4
        post = [ev for ev in t.events
                if isinstance(ev, tr.LeaderChange) and ev.step > 5_000]
        assert post, "survivors re-elected after the leader crash"

    def test_preset_shape(self):
        scn = preset_dependable(2, seed=0)
        assert isinstance(scn.channels[(0, 1)], EventuallyTimely)
        assert isinstance(scn.channels[(1, 0)], FairLossy)
        assert len(scn.channels) == 2

    def test_preset_reaches_everyone_timely(self):
        for seed in range(10):
            scn = preset_dependable(6, seed=seed)
            timely_out = {v for (u, v), m in scn.channels.items()
                          if u == 0 and isinstance(m, EventuallyTimely)}
            assert timely_out == set(range(1, 6))
            fair_in = {u for (u, v), m in scn.channels.items()
                       if v == 0 and isinstance(m, FairLossy)}
            assert fair_in == set(range(1, 6))


class TestNonCompleteTopology:
    def test_restricted_adjacency_converges(self):
        # ring + leader star: 0 can reach everyone directly, others only
        # around the ring toward 0
        n = 4
        adjacency = tuple(
            frozenset({(p + 1) % n, 0} - {p}) | ({1, 2, 3} if p == 0 else frozenset())
            for p in range(n)
        )
        channels = {}
        for p in range(n):
            for q in adjacency[p]:
                channels[(p, q)] = Timely(2)
        scn = Scenario(n=n, horizon=10_000, seed=6,
                       timers=TimerConfig(sender_timeout=32,
                                          initial_receiver_timeout=48),
                       default_channel=Lossy(), channels=channels,
                       adjacency=adjacency)
        t = run(scn)
        assert t.final_leaders == [0] * n
        # no packet ever crosses a non-adjacent pair
        for ev in t.events:
            if isinstance(ev, tr.Send):
                assert ev.dst in adjacency[ev.src]
