import pytest
from hypothesis import given, strategies as st

from distblossom.runtime import (
    DEAD,
    EventTrace,
    LivelockSuspected,
    Message,
    Process,
    SchedulerConfig,
    Simulator,
    call,
    call_all,
    sleep,
)
from distblossom.verify import audit_trace


class Note(Message):
    __slots__ = ("value",)
    kind = "note"

    def __init__(self, value):
        self.value = value


class Go(Message):
    __slots__ = ()
    kind = "go"


class Recorder(Process):
    kind = "recorder"

    def __init__(self):
        super().__init__()
        self.seen = []

    def on_note(self, env, m):
        self.seen.append((env.src, m.value, self.sim.tick))
        self.reply(env, m.value * 10)


class Burst(Process):
    kind = "burst"

    def __init__(self, target, count):
        super().__init__()
        self.target, self.count = target, count

    def on_go(self, env, m):
        for i in range(self.count):
            self.send(self.target, Note(i))


class Asker(Process):
    kind = "asker"

    def __init__(self, targets):
        super().__init__()
        self.targets = targets
        self.results = []

    def on_go(self, env, m):
        single = yield call(self.targets[0], Note(1))
        self.results.append(single)
        many = yield call_all((t, Note(2)) for t in self.targets)
        self.results.append(many)
        before = self.sim.tick
        yield sleep(5)
        self.results.append(self.sim.tick - before)


class PingPong(Process):
    kind = "pingpong"

    def __init__(self):
        super().__init__()
        self.other = None

    def on_note(self, env, m):
        self.send(self.other, Note(m.value + 1))


def uniform(seed):
    return SchedulerConfig(seed=seed, latency=("uniform", 1, 9))


@given(st.integers(0, 10_000), st.integers(1, 30))
def test_per_pair_delivery_is_fifo(seed, count):
    sim = Simulator(uniform(seed))
    rec = Recorder()
    sim.spawn(rec)
    bursts = [Burst(rec.addr, count) for _ in range(3)]
    for b in bursts:
        sim.spawn(b)
        sim.send(b.addr, b.addr, Go())
    sim.run()
    for b in bursts:
        values = [v for src, v, _ in rec.seen if src == b.addr]
        assert values == list(range(count))
    assert audit_trace(sim.trace).ok


def run_bursts(seed):
    sim = Simulator(uniform(seed))
    rec = Recorder()
    sim.spawn(rec)
    for _ in range(4):
        b = Burst(rec.addr, 5)
        sim.spawn(b)
        sim.send(b.addr, b.addr, Go())
    sim.run()
    return sim.trace.to_jsonl()


def test_same_seed_same_trace():
    assert run_bursts(3) == run_bursts(3)
    assert any(run_bursts(3) != run_bursts(s) for s in range(4, 10))


def test_call_call_all_and_sleep():
    sim = Simulator(SchedulerConfig(latency=("fixed", 2)))
    r1, r2 = Recorder(), Recorder()
    sim.spawn(r1)
    sim.spawn(r2)
    asker = Asker([r1.addr, r2.addr])
    sim.spawn(asker)
    sim.send(asker.addr, asker.addr, Go())
    sim.run()
    assert asker.results == [10, [20, 20], 5]


def test_request_to_dead_process_bounces():
    sim = Simulator()
    rec = Recorder()
    sim.spawn(rec)
    asker = Asker([rec.addr])
    sim.spawn(asker)
    sim.terminate(rec.addr)
    sim.send(asker.addr, asker.addr, Go())
    sim.run()
    assert asker.results == [DEAD, [DEAD], 5]
    assert sim.trace.count("drop") == 2
    assert audit_trace(sim.trace).ok


def test_dead_sentinel_survives_pickling():
    import pickle

    assert pickle.loads(pickle.dumps(DEAD)) is DEAD


def test_empty_system_finishes_immediately():
    sim = Simulator()
    trace = sim.run()
    assert sim.tick == 0 and len(trace) == 0


def test_endless_chatter_raises_livelock():
    sim = Simulator(SchedulerConfig(max_ticks=50))
    a, b = PingPong(), PingPong()
    sim.spawn(a)
    sim.spawn(b)
    a.other, b.other = b.addr, a.addr
    sim.send(a.addr, b.addr, Note(0))
    with pytest.raises(LivelockSuspected) as info:
        sim.run()
    assert info.value.tick == 50


def test_unhandled_message_is_traced_not_fatal():
    sim = Simulator()
    b = Burst(0, 0)
    sim.spawn(b)
    sim.send(b.addr, b.addr, Note(1))
    sim.run()
    assert sim.trace.count("warning") == 1


def test_trace_jsonl_round_trip():
    text = run_bursts(1)
    assert EventTrace.from_jsonl(text).to_jsonl() == text


@pytest.mark.parametrize("text", ["fixed:0", "uniform:3:2", "gauss:1", "fixed", "uniform:a:b"])
def test_bad_latency_models_rejected(text):
    with pytest.raises(ValueError):
        SchedulerConfig.parse_latency(text)


def test_latency_models_parse():
    assert SchedulerConfig.parse_latency("fixed:3") == ("fixed", 3)
    assert SchedulerConfig.parse_latency("uniform:1:4") == ("uniform", 1, 4)
