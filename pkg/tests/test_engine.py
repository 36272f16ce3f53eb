import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import path_edges, quick_run, st_topology, to_topology

from strongstab.engine import (
    ByzWrite,
    Configuration,
    Daemon,
    EngineError,
    ExecutionTrace,
    ProcessState,
    RegisterValue,
    Step,
    StopCondition,
    apply_step,
    arbitrary_configuration,
    check_fairness,
    check_locality,
    check_trace,
    consistent_registers,
    evaluate_guards,
    local_view,
    read_trace,
    round_boundaries,
    run,
    write_trace,
)
from strongstab.spanning_tree import SS_ST, legitimate_configuration
from strongstab.tree_orientation import SS_TO


def _quiescent_config(topo):
    return legitimate_configuration(topo, 1)


def test_apply_step_rejects_empty_activation():
    t = st_topology(3)
    cfg = _quiescent_config(t)
    with pytest.raises(EngineError, match="nonempty"):
        apply_step(cfg, Step(frozenset(), {}, {}), SS_ST, t)


def test_apply_step_rejects_byz_write_for_correct_process():
    t = st_topology(3, byz=(2,))
    cfg = _quiescent_config(t)
    bad = Step(
        activated=frozenset({1}),
        actions={},
        byz_writes={1: ByzWrite(ProcessState(0, 9), (RegisterValue(False, 9),) * 2)},
    )
    with pytest.raises(EngineError, match="correct process"):
        apply_step(cfg, bad, SS_ST, t)


def test_apply_step_rejects_wrong_recorded_action():
    t = st_topology(3)
    cfg = _quiescent_config(t)  # nothing is enabled here
    bad = Step(activated=frozenset({1}), actions={1: "GA1"}, byz_writes={})
    with pytest.raises(EngineError, match="records action"):
        apply_step(cfg, bad, SS_ST, t)


def test_byzantine_write_only_touches_own_state_and_registers():
    t = st_topology(3, byz=(2,))
    cfg = _quiescent_config(t)
    write = ByzWrite(ProcessState(0, 999), (RegisterValue(True, 999),) * t.degree(2))
    step = Step(activated=frozenset({2}), actions={}, byz_writes={2: write})
    nxt = apply_step(cfg, step, SS_ST, t)
    assert nxt.states[2] == ProcessState(0, 999)
    assert all(nxt.states[v] == cfg.states[v] for v in (0, 1))
    touched = {slot for slot in range(t.num_registers) if nxt.registers[slot] != cfg.registers[slot]}
    assert touched <= set(t.out_slot[2])


def test_simultaneous_neighbors_read_stale_registers():
    # two adjacent enabled processes both compute against the pre-step registers
    t = to_topology(2)
    states = (ProcessState(1, 0), ProcessState(1, 0))
    regs = [RegisterValue(False, 3), RegisterValue(False, 5)]
    registers = [None, None]
    registers[t.out_slot[0][0]] = regs[0]
    registers[t.out_slot[1][0]] = regs[1]
    cfg = Configuration(states, tuple(registers))
    step = Step(activated=frozenset({0, 1}), actions={0: "GA1", 1: "GA1"}, byz_writes={})
    nxt = apply_step(cfg, step, SS_TO, t)
    # each copied the other's old advertisement, not the freshly written one
    assert nxt.states[0].level == 5
    assert nxt.states[1].level == 3


def test_run_from_legitimate_configuration_is_quiescent_immediately():
    t = st_topology(2)
    init = _quiescent_config(t)
    trace, _ = quick_run(t, SS_ST, init=init)
    assert trace.stop_reason == "quiescent"
    assert len(trace.configs) == 1 and not trace.steps


def test_two_node_recovery_hand_replay():
    # root r=0 and one node a=1 with a corrupted level; a must end with the
    # root as parent at level 1 (worked out by hand: GA1 reads the root's
    # register 0 and writes 0+1)
    t = st_topology(2)
    good = _quiescent_config(t)
    states = list(good.states)
    states[1] = ProcessState(prnt=1, level=5)
    init = Configuration(tuple(states), good.registers)
    trace, _ = quick_run(t, SS_ST, init=init, kind="central", daemon_seed=4, fairness=4)
    assert trace.stop_reason == "quiescent"
    final = trace.configs[-1].states[1]
    assert final == ProcessState(prnt=1, level=1)


def test_determinism_identical_seeds_identical_traces():
    t = st_topology(5, byz=(4,), edges=path_edges(5), seed=2)
    runs = []
    for _ in range(2):
        trace, _ = quick_run(
            t, SS_ST, "oscillate", {"period": 2, "cycles": 3},
            init_seed=7, daemon_seed=9, adversary_seed=11, max_steps=500,
        )
        runs.append(trace)
    assert runs[0].configs == runs[1].configs
    assert runs[0].steps == runs[1].steps


def test_round_boundaries_examples():
    def fake_trace(activated_sets):
        cfgs = [None] * (len(activated_sets) + 1)
        steps = [Step(frozenset(s), {}, {}) for s in activated_sets]
        return ExecutionTrace(initial=None, configs=cfgs, steps=steps, round_ends=[])

    assert round_boundaries(fake_trace([{0}, {1}, {0, 1}]), frozenset({0, 1})) == [2, 3]
    assert round_boundaries(fake_trace([{0, 1}, {0, 1}]), frozenset({0, 1})) == [1, 2]
    assert round_boundaries(fake_trace([{0}, {1}, {0}, {1}]), frozenset({0, 1, 2})) == []


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_fairness_window_by_construction(seed):
    t = st_topology(4, edges=path_edges(4), seed=seed % 7)
    trace, daemon = quick_run(
        t, SS_ST, init_seed=seed, daemon_seed=seed, max_steps=60, fairness=4
    )
    check_fairness(trace, t.correct, 4)


def test_fairness_error_when_central_bound_too_small():
    t = st_topology(6, edges=path_edges(6))
    with pytest.raises(EngineError):
        quick_run(t, SS_ST, init_seed=3, daemon_seed=1, kind="central", fairness=2, max_steps=300)


def test_engine_invariants_on_byzantine_run():
    t = st_topology(5, byz=(4,), edges=path_edges(5), seed=3)
    trace, daemon = quick_run(
        t, SS_ST, "oscillate", {"period": 1, "cycles": 4},
        init_seed=1, daemon_seed=2, adversary_seed=3, max_steps=800,
    )
    check_trace(trace, t, SS_ST, daemon.fairness_bound)


def test_hostile_daemon_honors_proposals_but_tops_up_fairness():
    from strongstab.adversary import Adversary
    from strongstab.engine import Daemon, StopCondition, run

    class Grabby(Adversary):
        name = "grabby"

        def act(self, config, topo, pid):
            return None

        def propose_activation(self, config, topo, t):
            return frozenset(topo.byzantine)  # starve the correct processes

    t = st_topology(4, byz=(3,), edges=path_edges(4), seed=1)
    adv = Grabby({}, 0, t, SS_ST)
    daemon = Daemon(kind="distributed", fairness_bound=3, rng_seed=2, hostile=True)
    init = arbitrary_configuration(t, SS_ST, 5)
    trace = run(t, SS_ST, adv, daemon, init, StopCondition(max_steps=30))
    check_fairness(trace, t.correct, 3)
    assert all(3 in step.activated for step in trace.steps)


def test_arbitrary_configuration_domain_and_determinism():
    t = to_topology(6, edges=path_edges(6))
    a = arbitrary_configuration(t, SS_TO, 5)
    b = arbitrary_configuration(t, SS_TO, 5)
    c = arbitrary_configuration(t, SS_TO, 6)
    assert a == b and a != c
    for v in range(t.n):
        assert 1 <= a.states[v].prnt <= t.degree(v)
        assert 0 <= a.states[v].level <= 2 * t.n
    for r in a.registers:
        assert 0 <= r.level <= 2 * t.n


def test_guard_evaluation_is_pure_and_ordered():
    t = st_topology(3)
    cfg = arbitrary_configuration(t, SS_ST, 12)
    view = local_view(t, cfg, 1)
    labels = evaluate_guards(view, "node", SS_ST)
    assert labels == evaluate_guards(view, "node", SS_ST)
    assert labels in ([], ["GA1"], ["GA2"])


def test_trace_file_roundtrip(tmp_path):
    t = st_topology(4, byz=(3,), edges=path_edges(4), seed=5)
    trace, _ = quick_run(
        t, SS_ST, "fake-root", init_seed=8, daemon_seed=9, adversary_seed=10, max_steps=300
    )
    path = tmp_path / "trace.jsonl"
    write_trace(str(path), trace, t, SS_ST)
    loaded, topo2, name = read_trace(str(path))
    assert name == "ss-st"
    assert topo2.neighbor_order == t.neighbor_order
    assert loaded.configs == trace.configs
    assert loaded.steps == trace.steps
    assert loaded.stop_reason == trace.stop_reason
    check_locality(loaded, topo2)
