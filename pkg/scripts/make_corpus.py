#!/usr/bin/env python3
"""Regenerate the checked-in topology and named-configuration corpus.

Every file this writes is deterministic; scenario files that use a named
initial configuration pin seed_neighbor so the parent indices in the file
keep meaning the same neighbors.
"""

from pathlib import Path

from strongstab.cli import write_config_file
from strongstab.engine import Configuration, ProcessState, consistent_registers
from strongstab.topology import build_topology

ROOT = Path(__file__).resolve().parents[1]
TOPO = ROOT / "topologies"
CORPUS = ROOT / "src" / "strongstab" / "corpus"


def write_topo(name: str, n: int, edges, root=None, byz=()):
    lines = [f"n {n}"]
    if root is not None:
        lines.append(f"root {root}")
    if byz:
        lines.append("byz " + " ".join(str(b) for b in byz))
    lines += [f"edge {u} {v}" for u, v in edges]
    (TOPO / name).write_text("\n".join(lines) + "\n", encoding="utf-8")


def path(n):
    return [(i, i + 1) for i in range(n - 1)]


def main() -> None:
    TOPO.mkdir(exist_ok=True)
    CORPUS.mkdir(exist_ok=True)

    write_topo("path3_st.topo", 3, path(3), root=0, byz=[2])
    write_topo("path6_st.topo", 6, path(6), root=0, byz=[5])
    write_topo("star6_st.topo", 6, [(0, i) for i in range(1, 6)], root=0, byz=[4, 5])
    write_topo("tree7_ff.topo", 7, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5), (3, 6)])
    write_topo("tree8_to.topo", 8, [(0, 1), (1, 2), (2, 3), (2, 4), (4, 5), (4, 6), (6, 7)], byz=[2])
    write_topo("chain5_to.topo", 5, path(5), byz=[0, 4])
    write_topo("chain9_to.topo", 9, path(9), byz=[0, 8])

    # deceived start on the 3-path: the middle process already trusts the
    # Byzantine leaf, which advertises level 7 (neighbor order pinned by
    # scenario seed_neighbor 1)
    t = build_topology(path(3), root=0, byzantine=[2], neighbor_seed=1, mode="ss-st")
    k_byz = t.neighbor_pos[1][2]
    states = [ProcessState(0, 0), ProcessState(k_byz, 8), ProcessState(0, 7)]
    cfg = Configuration(tuple(states), consistent_registers(t, states))
    write_config_file(
        str(CORPUS / "deceived_path3.init"),
        t,
        cfg,
        header=(
            "deceived_path3: middle process parented to the Byzantine leaf at level 8\n"
            "built for topologies/path3_st.topo with seed_neighbor 1\n"
            "legitimate (escape clause) and quiescent until the leaf moves"
        ),
    )

    # maximally unoriented chain: adjacent interior processes point away
    # from each other wherever possible, all levels equal, registers in sync
    t = build_topology(path(5), byzantine=[0, 4], neighbor_seed=1, mode="ss-to")
    pos = t.neighbor_pos
    states = [
        ProcessState(1, 3),
        ProcessState(pos[1][0], 3),
        ProcessState(pos[2][1], 3),
        ProcessState(pos[3][4], 3),
        ProcessState(1, 3),
    ]
    cfg = Configuration(tuple(states), consistent_registers(t, states))
    write_config_file(
        str(CORPUS / "torn_chain5.init"),
        t,
        cfg,
        header=(
            "torn_chain5: interior parents pulled toward both Byzantine endpoints,\n"
            "edge 2-3 unoriented on both sides; equal levels force tie-breaking\n"
            "built for topologies/chain5_to.topo with seed_neighbor 1"
        ),
    )
    print("corpus regenerated")


if __name__ == "__main__":
    main()
