"""Guarded-command execution over single-writer link registers.

A configuration is the product of all process states and all link registers.
One step activates a nonempty process set; every activated member computes
its effect against the configuration *before* the step (simultaneous
semantics), so concurrent neighbors read each other's stale registers.
Correct processes fire their first enabled guarded action; Byzantine
processes write whatever their adversary strategy dictates, but only to
their own state and output registers.

Guards and actions receive a LocalView and nothing else: no process ids, no
topology beyond the local degree. That is what keeps protocols anonymous.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

from .topology import Topology, build_topology


class EngineError(RuntimeError):
    """Internal execution-model violation (a bug, not protocol behavior)."""


class FairnessError(EngineError):
    """The daemon could not honor the configured fairness bound."""


class ProcessState(NamedTuple):
    prnt: int
    level: int


class RegisterValue(NamedTuple):
    prnt: bool
    level: int


class Configuration(NamedTuple):
    states: tuple[ProcessState, ...]
    registers: tuple[RegisterValue, ...]


class LocalView(NamedTuple):
    """Everything a process may read: its state and its link registers.

    ``in_regs[k-1]`` is the register written by the k-th neighbor toward
    this process; ``out_regs[k-1]`` the one this process writes toward it.
    """

    state: ProcessState
    degree: int
    in_regs: tuple[RegisterValue, ...]
    out_regs: tuple[RegisterValue, ...]


class LocalEffect(NamedTuple):
    state: ProcessState
    out_regs: tuple[RegisterValue, ...]


class ByzWrite(NamedTuple):
    state: ProcessState
    out_regs: tuple[RegisterValue, ...]


@dataclass(frozen=True)
class GuardedAction:
    label: str
    guard: Callable[[LocalView], bool]
    effect: Callable[[LocalView], LocalEffect]


class Protocol:
    """Stateless rule set: ordered guarded actions per role.

    Subclasses fill in the class attributes and `actions`. All protocol
    state lives in the Configuration.
    """

    name: str = ""
    o_variables: tuple[str, ...] = ()
    needs_root: bool = False
    tree_only: bool = False

    def role_of(self, topo: Topology, pid: int) -> str:
        return "root" if topo.root == pid else "node"

    def actions(self, role: str) -> tuple[GuardedAction, ...]:
        raise NotImplementedError

    def arbitrary_state(self, rng: random.Random, degree: int, role: str, n: int) -> ProcessState:
        raise NotImplementedError


@dataclass(frozen=True)
class Step:
    activated: frozenset[int]
    actions: dict[int, Optional[str]]
    byz_writes: dict[int, Optional[ByzWrite]]


@dataclass
class ExecutionTrace:
    initial: Configuration
    configs: list[Configuration]
    steps: list[Step]
    round_ends: list[int]
    stop_reason: str = ""


@dataclass
class Daemon:
    """Scheduler: central activates one process per step, distributed any
    nonempty subset. Weak fairness is constructive: a correct process idle
    for `fairness_bound` steps is force-activated. With ``hostile=True`` the
    adversary proposes activation sets and the daemon only tops them up with
    forced processes.
    """

    kind: str = "distributed"
    fairness_bound: int = 8
    rng_seed: int = 0
    hostile: bool = False

    def __post_init__(self) -> None:
        if self.kind not in ("distributed", "central"):
            raise EngineError(f"unknown daemon kind {self.kind!r}")
        if self.fairness_bound < 1:
            raise EngineError("fairness bound must be positive")


@dataclass
class StopCondition:
    max_steps: int
    predicate: Optional[Callable[[Configuration], bool]] = None


def local_view(topo: Topology, config: Configuration, v: int) -> LocalView:
    regs = config.registers
    return LocalView(
        state=config.states[v],
        degree=topo.degree(v),
        in_regs=tuple(regs[s] for s in topo.in_slot[v]),
        out_regs=tuple(regs[s] for s in topo.out_slot[v]),
    )


def evaluate_guards(view: LocalView, role: str, protocol: Protocol) -> list[str]:
    """Labels of all enabled actions, in declaration order. Pure."""
    return [a.label for a in protocol.actions(role) if a.guard(view)]


def first_enabled(view: LocalView, role: str, protocol: Protocol) -> Optional[GuardedAction]:
    enabled = [a for a in protocol.actions(role) if a.guard(view)]
    if len(enabled) > 1:
        # the protocols under study write mutually exclusive guards; two
        # enabled guards at once means the transliteration is wrong
        raise EngineError(
            f"guards not mutually exclusive: {[a.label for a in enabled]}"
        )
    return enabled[0] if enabled else None


def enabled_correct(topo: Topology, config: Configuration, protocol: Protocol) -> list[int]:
    out = []
    for v in sorted(topo.correct):
        view = local_view(topo, config, v)
        if first_enabled(view, protocol.role_of(topo, v), protocol) is not None:
            out.append(v)
    return out


def apply_step(config: Configuration, step: Step, protocol: Protocol, topo: Topology) -> Configuration:
    """Apply one atomic step: all effects computed against `config`, then merged."""
    if not step.activated:
        raise EngineError("activated set must be nonempty")
    for pid in step.byz_writes:
        if pid not in topo.byzantine:
            raise EngineError(f"byzantine write recorded for correct process {pid}")
        if pid not in step.activated:
            raise EngineError(f"byzantine write for non-activated process {pid}")

    states = list(config.states)
    registers = list(config.registers)
    for pid in sorted(step.activated):
        if pid in topo.byzantine:
            write = step.byz_writes.get(pid)
            if write is None:
                continue
            if len(write.out_regs) != topo.degree(pid):
                raise EngineError("byzantine write has wrong register count")
            states[pid] = write.state
            for slot, value in zip(topo.out_slot[pid], write.out_regs):
                registers[slot] = value
        else:
            view = local_view(topo, config, pid)
            action = first_enabled(view, protocol.role_of(topo, pid), protocol)
            recorded = step.actions.get(pid)
            if (action.label if action else None) != recorded:
                raise EngineError(
                    f"step records action {recorded!r} for process {pid}, "
                    f"but {action.label if action else None!r} is enabled"
                )
            if action is None:
                continue
            effect = action.effect(view)
            states[pid] = effect.state
            for slot, value in zip(topo.out_slot[pid], effect.out_regs):
                registers[slot] = value
    return Configuration(states=tuple(states), registers=tuple(registers))


class _Scheduler:
    def __init__(self, daemon: Daemon, topo: Topology):
        self.daemon = daemon
        self.topo = topo
        self.rng = random.Random(daemon.rng_seed)
        self.correct = sorted(topo.correct)
        self.last_seen = {v: 0 for v in self.correct}
        self.all_pids = list(range(topo.n))

    def pick(self, t: int, proposal: Optional[frozenset[int]]) -> frozenset[int]:
        bound = self.daemon.fairness_bound
        forced = {v for v in self.correct if t - self.last_seen[v] >= bound}
        if self.daemon.kind == "central":
            activated = self._pick_central(forced, proposal)
        else:
            activated = self._pick_distributed(forced, proposal)
        for v in activated:
            if v in self.last_seen:
                self.last_seen[v] = t
        leftover = {v for v in self.correct if t - self.last_seen[v] >= bound}
        if leftover:
            raise FairnessError(
                f"fairness bound {bound} unsatisfiable at step {t} (kind={self.daemon.kind})"
            )
        return frozenset(activated)

    def _pick_central(self, forced: set[int], proposal: Optional[frozenset[int]]) -> set[int]:
        if forced:
            oldest = min(self.last_seen[v] for v in forced)
            pick = self.rng.choice(sorted(v for v in forced if self.last_seen[v] == oldest))
            return {pick}
        if proposal:
            if len(proposal) != 1:
                raise EngineError("central daemon activates exactly one process")
            return set(proposal)
        return {self.rng.choice(self.all_pids)}

    def _pick_distributed(self, forced: set[int], proposal: Optional[frozenset[int]]) -> set[int]:
        if proposal is not None:
            activated = set(proposal) | forced
            if activated:
                return activated
        activated = {v for v in self.all_pids if self.rng.random() < 0.5} | forced
        if not activated:
            activated = {self.rng.choice(self.all_pids)}
        return activated


def run(
    topo: Topology,
    protocol: Protocol,
    adversary,
    daemon: Daemon,
    init: Configuration,
    stop: StopCondition,
) -> ExecutionTrace:
    """Execute until quiescence, a caller predicate, or the step budget.

    Deterministic given the daemon seed and the adversary's own seeding.
    Quiescence needs both no enabled correct process and an adversary that
    pledges it will never act again.
    """
    _check_shape(topo, init)
    configs = [init]
    steps: list[Step] = []
    sched = _Scheduler(daemon, topo)
    stop_reason = "max_steps"
    t = 0
    while True:
        config = configs[-1]
        if stop.predicate is not None and stop.predicate(config):
            stop_reason = "predicate"
            break
        if adversary.pledges_silence() and not enabled_correct(topo, config, protocol):
            stop_reason = "quiescent"
            break
        if t >= stop.max_steps:
            stop_reason = "max_steps"
            break
        t += 1
        proposal = None
        if daemon.hostile:
            proposal = adversary.propose_activation(config, topo, t)
            if proposal is not None:
                proposal = frozenset(proposal)
        activated = sched.pick(t, proposal)
        actions: dict[int, Optional[str]] = {}
        byz_writes: dict[int, Optional[ByzWrite]] = {}
        for pid in sorted(activated):
            if pid in topo.byzantine:
                byz_writes[pid] = adversary.act(config, topo, pid)
            else:
                view = local_view(topo, config, pid)
                action = first_enabled(view, protocol.role_of(topo, pid), protocol)
                actions[pid] = action.label if action else None
        step = Step(activated=frozenset(activated), actions=actions, byz_writes=byz_writes)
        configs.append(apply_step(config, step, protocol, topo))
        steps.append(step)
    trace = ExecutionTrace(
        initial=init,
        configs=configs,
        steps=steps,
        round_ends=[],
        stop_reason=stop_reason,
    )
    trace.round_ends = round_boundaries(trace, topo.correct)
    return trace


def round_boundaries(trace: ExecutionTrace, correct: frozenset[int]) -> list[int]:
    """1-based step counts at which each round completes.

    A round ends at the first step by which every correct process has been
    activated since the previous round ended; a trailing partial round is
    dropped. Activations of disabled processes count.
    """
    ends = []
    pending = set(correct)
    for i, step in enumerate(trace.steps, 1):
        pending -= step.activated
        if not pending:
            ends.append(i)
            pending = set(correct)
    return ends


def _check_shape(topo: Topology, config: Configuration) -> None:
    if len(config.states) != topo.n or len(config.registers) != topo.num_registers:
        raise EngineError("configuration shape does not match topology")


# ---------------------------------------------------------------------------
# initial configurations

def arbitrary_configuration(topo: Topology, protocol: Protocol, seed: int) -> Configuration:
    """Uniform draw over the bounded value domain: levels in [0, 2n], prnt
    in the per-role variable domain, registers unconstrained."""
    rng = random.Random(seed)
    hi = 2 * topo.n
    states = tuple(
        protocol.arbitrary_state(rng, topo.degree(v), protocol.role_of(topo, v), topo.n)
        for v in range(topo.n)
    )
    registers = tuple(
        RegisterValue(prnt=rng.random() < 0.5, level=rng.randint(0, hi))
        for _ in range(topo.num_registers)
    )
    return Configuration(states=states, registers=registers)


def consistent_registers(topo: Topology, states: Sequence[ProcessState]) -> tuple[RegisterValue, ...]:
    """Registers every process would write for its own state: the parent-facing
    one flagged true, all carrying the writer's level."""
    registers = [RegisterValue(False, 0)] * topo.num_registers
    for v in range(topo.n):
        st = states[v]
        for k, slot in enumerate(topo.out_slot[v], 1):
            registers[slot] = RegisterValue(prnt=(st.prnt == k), level=st.level)
    return tuple(registers)


# ---------------------------------------------------------------------------
# machine-checked execution-model invariants (used by tests on every trace)

def check_locality(trace: ExecutionTrace, topo: Topology) -> None:
    for i, step in enumerate(trace.steps):
        before, after = trace.configs[i], trace.configs[i + 1]
        allowed_slots = {s for pid in step.activated for s in topo.out_slot[pid]}
        for pid in range(topo.n):
            if before.states[pid] != after.states[pid] and pid not in step.activated:
                raise EngineError(f"step {i}: non-activated process {pid} changed state")
        for slot in range(topo.num_registers):
            if before.registers[slot] != after.registers[slot] and slot not in allowed_slots:
                raise EngineError(f"step {i}: register {slot} changed outside activated set")


def check_simultaneity(trace: ExecutionTrace, topo: Topology, protocol: Protocol) -> None:
    """Sequentialize each step with stale reads and compare to the recorded result."""
    for i, step in enumerate(trace.steps):
        before = trace.configs[i]
        states = list(before.states)
        registers = list(before.registers)
        for pid in sorted(step.activated):
            view = local_view(topo, before, pid)  # stale view, by construction
            if pid in topo.byzantine:
                write = step.byz_writes.get(pid)
                if write is None:
                    continue
                states[pid] = write.state
                for slot, value in zip(topo.out_slot[pid], write.out_regs):
                    registers[slot] = value
            else:
                action = first_enabled(view, protocol.role_of(topo, pid), protocol)
                if action is None:
                    continue
                effect = action.effect(view)
                states[pid] = effect.state
                for slot, value in zip(topo.out_slot[pid], effect.out_regs):
                    registers[slot] = value
        merged = Configuration(states=tuple(states), registers=tuple(registers))
        if merged != trace.configs[i + 1]:
            raise EngineError(f"step {i}: simultaneous result differs from merged stale-read result")


def check_fairness(trace: ExecutionTrace, correct: frozenset[int], bound: int) -> None:
    steps = trace.steps
    for start in range(len(steps) - bound + 1):
        window = set()
        for step in steps[start : start + bound]:
            window |= step.activated
        missing = correct - window
        if missing:
            raise EngineError(
                f"fairness violated: {sorted(missing)} absent from steps {start + 1}..{start + bound}"
            )


def check_priority(trace: ExecutionTrace, topo: Topology, protocol: Protocol) -> None:
    for i, step in enumerate(trace.steps):
        before = trace.configs[i]
        for pid in step.activated - topo.byzantine:
            view = local_view(topo, before, pid)
            enabled = evaluate_guards(view, protocol.role_of(topo, pid), protocol)
            if len(enabled) > 1:
                raise EngineError(f"step {i}: guards not mutually exclusive at {pid}")
            expect = enabled[0] if enabled else None
            if step.actions.get(pid) != expect:
                raise EngineError(f"step {i}: process {pid} fired {step.actions.get(pid)!r}, expected {expect!r}")


def check_replay(trace: ExecutionTrace, topo: Topology, protocol: Protocol) -> None:
    config = trace.initial
    for i, step in enumerate(trace.steps):
        config = apply_step(config, step, protocol, topo)
        if config != trace.configs[i + 1]:
            raise EngineError(f"replay diverges at step {i}")


def check_trace(trace: ExecutionTrace, topo: Topology, protocol: Protocol, fairness_bound: int) -> None:
    """All engine-semantics invariants in one call."""
    check_locality(trace, topo)
    check_simultaneity(trace, topo, protocol)
    check_priority(trace, topo, protocol)
    check_replay(trace, topo, protocol)
    check_fairness(trace, topo.correct, fairness_bound)


# ---------------------------------------------------------------------------
# trace files: one JSON record per line

def write_trace(path: str, trace: ExecutionTrace, topo: Topology, protocol: Protocol) -> None:
    def reg(r: RegisterValue) -> list:
        return [int(r.prnt), r.level]

    with open(path, "w", encoding="utf-8") as fh:
        meta = {
            "type": "meta",
            "protocol": protocol.name,
            "n": topo.n,
            "edges": [list(e) for e in topo.edges],
            "root": topo.root,
            "byz": sorted(topo.byzantine),
            "neighbor_order": [list(o) for o in topo.neighbor_order],
        }
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        init = {
            "type": "init",
            "states": [list(s) for s in trace.initial.states],
            "registers": [reg(r) for r in trace.initial.registers],
        }
        fh.write(json.dumps(init, sort_keys=True) + "\n")
        for i, step in enumerate(trace.steps):
            before, after = trace.configs[i], trace.configs[i + 1]
            rec = {
                "type": "step",
                "i": i + 1,
                "activated": sorted(step.activated),
                "actions": {str(p): a for p, a in sorted(step.actions.items())},
                "byz": {
                    str(p): None if w is None else {"state": list(w.state), "out": [reg(r) for r in w.out_regs]}
                    for p, w in sorted(step.byz_writes.items())
                },
                "states": [list(s) for s in after.states],
                "reg_diff": {
                    str(slot): reg(after.registers[slot])
                    for slot in range(topo.num_registers)
                    if after.registers[slot] != before.registers[slot]
                },
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
        tail = {"type": "end", "stop_reason": trace.stop_reason, "round_ends": trace.round_ends}
        fh.write(json.dumps(tail, sort_keys=True) + "\n")


def read_trace(path: str) -> tuple[ExecutionTrace, Topology, str]:
    """Rebuild a trace and its topology from a trace file."""
    with open(path, encoding="utf-8") as fh:
        records = [json.loads(line) for line in fh if line.strip()]
    meta = records[0]
    if meta.get("type") != "meta":
        raise EngineError("trace file missing meta record")
    topo = build_topology(
        [tuple(e) for e in meta["edges"]],
        root=meta["root"],
        byzantine=meta["byz"],
    )
    # the stored neighbor order overrides whatever the default seed produced
    topo = _with_neighbor_order(topo, [tuple(o) for o in meta["neighbor_order"]])
    init_rec = records[1]
    init = Configuration(
        states=tuple(ProcessState(*s) for s in init_rec["states"]),
        registers=tuple(RegisterValue(bool(r[0]), r[1]) for r in init_rec["registers"]),
    )
    configs = [init]
    steps = []
    stop_reason = ""
    round_ends: list[int] = []
    for rec in records[2:]:
        if rec["type"] == "end":
            stop_reason = rec["stop_reason"]
            round_ends = rec["round_ends"]
            continue
        prev = configs[-1]
        states = tuple(ProcessState(*s) for s in rec["states"])
        registers = list(prev.registers)
        for slot, val in rec["reg_diff"].items():
            registers[int(slot)] = RegisterValue(bool(val[0]), val[1])
        configs.append(Configuration(states=states, registers=tuple(registers)))
        byz_writes = {}
        for pid, w in rec["byz"].items():
            if w is None:
                byz_writes[int(pid)] = None
            else:
                byz_writes[int(pid)] = ByzWrite(
                    state=ProcessState(*w["state"]),
                    out_regs=tuple(RegisterValue(bool(r[0]), r[1]) for r in w["out"]),
                )
        steps.append(
            Step(
                activated=frozenset(rec["activated"]),
                actions={int(p): a for p, a in rec["actions"].items()},
                byz_writes=byz_writes,
            )
        )
    trace = ExecutionTrace(
        initial=init, configs=configs, steps=steps, round_ends=round_ends, stop_reason=stop_reason
    )
    return trace, topo, meta["protocol"]


def _with_neighbor_order(topo: Topology, order: list[tuple[int, ...]]) -> Topology:
    neighbor_pos = tuple({u: k + 1 for k, u in enumerate(order[v])} for v in range(topo.n))
    slot_of: dict[tuple[int, int], int] = {}
    for v in range(topo.n):
        for u in order[v]:
            slot_of[(v, u)] = len(slot_of)
    out_slot = tuple(tuple(slot_of[(v, u)] for u in order[v]) for v in range(topo.n))
    in_slot = tuple(tuple(slot_of[(u, v)] for u in order[v]) for v in range(topo.n))
    return Topology(
        n=topo.n,
        edges=topo.edges,
        neighbor_order=tuple(order),
        root=topo.root,
        byzantine=topo.byzantine,
        neighbor_pos=neighbor_pos,
        out_slot=out_slot,
        in_slot=in_slot,
        num_registers=len(slot_of),
    )
