"""Liberal atomicity and conflict serializability.

Offline, a block set is liberally atomic exactly when its block graph is
acyclic: one node per block plus one singleton node per unblocked event,
with an edge wherever the block happens-before order relates two events
sitting in distinct nodes.  Acyclicity means the run can be reordered,
without leaving its block equivalence class, into a run where every
block is contiguous.

The streaming check keeps a *summarized* conflict graph instead: at most
one node per variable (the block on that variable that began most
recently), and edges that stand for whole paths of the offline graph
through nodes that are no longer active.  Reachability into the arriving
event is read off the saturation monitor's after sets, consulted through
per-variable witness registers: for each active block, the write symbol
that starts it, the symbols of its members, and the symbols of unblocked
events and dead blocks its summarized paths run through.  When a fresh
block replaces the active block on its variable, the dropped node's
incident edges are composed pairwise and its witness symbols are folded
into every predecessor, so the paths it stood for survive the removal.
"""

from __future__ import annotations

from dataclasses import dataclass

from .blocks import BlockSet, blocks_from_annotation
from .monitor import AnnLabel, SatState, Universe, sat_initial, sat_step, symbols_of
from .orders import block_hb
from .trace import Event, Run, conflicting


class BlockGraph:
    """Conflict graph of a block set.

    ``nodes`` is a tuple of event tuples (each in run order, first event
    earliest); blocks and unblocked singletons together partition the
    run's events.  ``edges`` holds index pairs (i, j) meaning some event
    of node i is ordered before some event of node j.
    """

    def __init__(self, nodes: tuple[tuple[Event, ...], ...], edges: frozenset[tuple[int, int]]):
        self.nodes = nodes
        self.edges = edges
        self._owner: dict[Event, int] = {}
        for i, members in enumerate(nodes):
            for e in members:
                assert e not in self._owner, "nodes must partition the events"
                self._owner[e] = i

    def node_of(self, e: Event) -> int:
        return self._owner[e]

    def successors(self, i: int) -> list[int]:
        return sorted(j for (p, j) in self.edges if p == i)

    def is_acyclic(self) -> bool:
        return _acyclic(len(self.nodes), self.edges)

    def topological_order(self) -> list[int]:
        """Kahn order, lowest node index first among the ready ones.
        Raises ValueError if the graph has a cycle."""
        n = len(self.nodes)
        indeg = [0] * n
        for _, j in self.edges:
            indeg[j] += 1
        out: list[list[int]] = [[] for _ in range(n)]
        for i, j in self.edges:
            out[i].append(j)
        ready = sorted(i for i in range(n) if indeg[i] == 0)
        order = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            changed = False
            for j in out[i]:
                indeg[j] -= 1
                if indeg[j] == 0:
                    ready.append(j)
                    changed = True
            if changed:
                ready.sort()
        if len(order) != n:
            raise ValueError("block graph has a cycle; no topological order")
        return order

    def __len__(self):
        return len(self.nodes)


def _acyclic(n: int, edges) -> bool:
    out: list[list[int]] = [[] for _ in range(n)]
    for i, j in edges:
        out[i].append(j)
    color = [0] * n  # 0 fresh, 1 on stack, 2 done
    for root in range(n):
        if color[root]:
            continue
        stack = [(root, iter(out[root]))]
        color[root] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for j in it:
                if color[j] == 1:
                    return False
                if color[j] == 0:
                    color[j] = 1
                    stack.append((j, iter(out[j])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return True


def _partition(run: Run, blocks: BlockSet) -> tuple[tuple[tuple[Event, ...], ...], dict[Event, int]]:
    nodes = [tuple(sorted(b.members(), key=run.position)) for b in blocks]
    nodes.extend((e,) for e in blocks.unblocked())
    nodes.sort(key=lambda members: run.position(members[0]))
    owner = {e: i for i, members in enumerate(nodes) for e in members}
    return tuple(nodes), owner


def block_graph(run: Run, blocks: BlockSet) -> BlockGraph:
    """Nodes are the blocks plus singleton unblocked events; edges follow
    the block happens-before order between distinct nodes."""
    nodes, owner = _partition(run, blocks)
    order = block_hb(run, blocks)
    edges = set()
    for e, f in order.pairs():
        i, j = owner[e], owner[f]
        if i != j:
            edges.add((i, j))
    return BlockGraph(nodes, frozenset(edges))


def is_liberally_atomic(run: Run, blocks: BlockSet) -> bool:
    return block_graph(run, blocks).is_acyclic()


def is_conflict_serializable(run: Run, blocks: BlockSet) -> bool:
    """Classic conflict serializability with the blocks as transactions
    and every unblocked event as a unit transaction: edges between
    distinct nodes along *plain* dependence in run order, no exemption
    for cross-thread block pairs."""
    nodes, owner = _partition(run, blocks)
    edges = set()
    for i, e in enumerate(run.events):
        for f in run.events[i + 1:]:
            if conflicting(e.label, f.label) and owner[e] != owner[f]:
                edges.add((owner[e], owner[f]))
    return _acyclic(len(nodes), edges)


def serial_witness(run: Run, blocks: BlockSet) -> Run:
    """A run in the same block equivalence class in which every block is
    contiguous.  Emits the block-graph nodes in topological order (ties
    broken toward the node that starts earliest), each node's events in
    their original order; every happens-before pair is respected either
    inside a node or by the topological order, so the result is always a
    proper linearization."""
    g = block_graph(run, blocks)
    if not g.is_acyclic():
        raise ValueError("blocks are not liberally atomic; no serial witness exists")
    labels = []
    annots = []
    for i in g.topological_order():
        for e in g.nodes[i]:
            labels.append(e.label)
            annots.append(run.annotation_at(run.position(e)))
    return Run(labels, annots)


# ---- streaming check ------------------------------------------------------

@dataclass(frozen=True)
class LibAtState:
    """State of the streaming liberal-atomicity check.

    ``edges`` are variable-index pairs of the summarized conflict graph;
    an edge (y, x) asserts a path from the active block on variable y to
    the active block on variable x whose inner nodes are all inactive.
    Per variable, ``start`` holds the symbol index of the write that
    began the active block (-1 before any block), ``members`` the symbol
    mask of its members so far, and ``reach`` the witness mask: symbols
    whose events sit on paths out of the node through unblocked events
    and superseded blocks.  The registers outlive the running-block set
    of the saturation component, which forgets a block as soon as an
    unmarked write intervenes even though the block stays the node for
    its variable.  ``rejected`` is absorbing: once a prefix's summarized
    graph turns cyclic no extension is liberally atomic.  The saturation
    component keeps stepping either way so stream validation and state
    size stay uniform.
    """

    sat: SatState
    edges: frozenset[tuple[int, int]]
    start: tuple[int, ...]
    members: tuple[int, ...]
    reach: tuple[int, ...]
    rejected: bool = False

    def accepting(self) -> bool:
        return not self.rejected

    def edge_variables(self) -> frozenset[tuple[str, str]]:
        names = self.sat.universe.variables
        return frozenset((names[y], names[x]) for y, x in self.edges)


def libat_initial(universe: Universe) -> LibAtState:
    nx = len(universe.variables)
    return LibAtState(sat_initial(universe), frozenset(), (-1,) * nx, (0,) * nx, (0,) * nx, False)


def _witnessed(sat: SatState, mask: int, abit: int) -> bool:
    """True when the after set of any symbol in ``mask`` holds ``abit``.
    Occurrences of one symbol share a thread, hence chain in program
    order, so a hit through a stale occurrence still stands for a real
    path into the arriving event."""
    while mask:
        low = mask & -mask
        if sat.aft[low.bit_length() - 1] & abit:
            return True
        mask ^= low
    return False


def libat_step(state: LibAtState, sym: AnnLabel) -> LibAtState:
    sat = sat_step(state.sat, sym)
    if state.rejected:
        return LibAtState(sat, state.edges, state.start, state.members, state.reach, True)
    lab, marked = sym
    u = sat.universe
    nx = len(u.variables)
    ai = u.sym_index[sym]
    abit = 1 << ai

    if not marked:
        # an unblocked event never becomes a node of its own, but paths
        # out of an active block may run through it; record it as a
        # witness on every node that reaches it
        reach = list(state.reach)
        for yi in range(nx):
            if state.start[yi] < 0:
                continue
            if sat.aft[state.start[yi]] & abit or _witnessed(sat, reach[yi], abit):
                reach[yi] |= abit
        return LibAtState(sat, state.edges, state.start, state.members, tuple(reach), False)

    xi = u.var_index[lab.variable]
    edges = set(state.edges)
    start = list(state.start)
    members = list(state.members)
    reach = list(state.reach)

    if lab.is_write():
        old = start[xi]
        if old >= 0:
            # a new block replaces the active one on this variable: fold
            # the dropped node's witness symbols into every predecessor
            # and compose its incident edges pairwise, so the paths it
            # stood for survive the removal
            carry = (1 << old) | members[xi] | reach[xi]
            into = [p for (p, q) in edges if q == xi]
            outof = [q for (p, q) in edges if p == xi]
            edges = {(p, q) for (p, q) in edges if p != xi and q != xi}
            for p in into:
                reach[p] |= carry
                for q in outof:
                    assert p != q, "composition on an acyclic graph cannot close a loop"
                    edges.add((p, q))
        start[xi] = ai
        members[xi] = abit
        reach[xi] = 0
    else:
        members[xi] |= abit

    # the arriving event is a member of the active block on xi; add an
    # edge from every node that reaches it: directly from another block's
    # write, or through that block's recorded witnesses
    for yi in range(nx):
        if start[yi] < 0:
            continue
        if yi == xi:
            # the block trivially reaches its own members, so a self loop
            # needs a path that leaves the node and returns, which only
            # its witnesses can certify
            if _witnessed(sat, reach[xi], abit):
                edges.add((xi, xi))
        elif sat.aft[start[yi]] & abit or _witnessed(sat, reach[yi], abit):
            edges.add((yi, xi))

    if not _acyclic(nx, edges):
        return LibAtState(sat, frozenset(edges), tuple(start), tuple(members), tuple(reach), True)
    return LibAtState(sat, frozenset(edges), tuple(start), tuple(members), tuple(reach), False)


def libat_run(aw: Run, universe: Universe | None = None) -> bool:
    """Feed a well-annotated run through the streaming check; True means
    the annotated blocks are liberally atomic."""
    blocks_from_annotation(aw)  # validates the annotation, raises otherwise
    if universe is None:
        universe = Universe.from_run(aw)
    q = libat_initial(universe)
    for s in symbols_of(aw):
        q = libat_step(q, s)
    return q.accepting()


def canonical_text(state: LibAtState) -> str:
    """Fixed-width rendering: reject flag, the edge set as one bitmask
    over variable pairs, the per-variable registers, then the saturation
    state.  Byte length depends only on the universe."""
    from . import monitor

    u = state.sat.universe
    nx = len(u.variables)
    nsym = len(u.symbols)
    mask = 0
    for y, x in state.edges:
        mask |= 1 << (y * nx + x)
    ewidth = max(1, (nx * nx + 3) // 4)
    swidth = max(1, (nsym + 3) // 4)
    dwidth = len(str(nsym))  # start indices are -1 .. nsym-1
    lines = ["rej %d" % (1 if state.rejected else 0), "edges %0*x" % (ewidth, mask)]
    for v in range(nx):
        lines.append(
            "node %s %*d %0*x %0*x"
            % (
                u.variables[v],
                dwidth + 1,
                state.start[v],
                swidth,
                state.members[v],
                swidth,
                state.reach[v],
            )
        )
    return "\n".join(lines) + "\n" + monitor.canonical_text(state.sat)
