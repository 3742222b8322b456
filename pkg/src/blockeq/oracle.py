"""Brute-force ground truth for the streaming components.

Everything in this module enumerates explicitly: equivalence classes by
breadth-first closure under the allowed swaps, reads-from classes by
interleaving search, proper linearizations by topological DFS.  All of
it is deliberately bounded — the point is certifying the incremental
algorithms on desk-scale instances, not performance.
"""

from __future__ import annotations

from typing import Callable, Iterable, Optional

from .blocks import Block, BlockSet
from .orders import PartialOrder, block_hb, saturate
from .trace import Event, Label, Run, conflicting

SWAP_BOUND = 12  # breadth-first closure under swaps
RF_BOUND = 22    # reads-from interleaving search


class BoundExceeded(ValueError):
    """The instance is too large for explicit enumeration."""


def _check_bound(run: Run, bound: Optional[int], default: int, what: str) -> None:
    limit = default if bound is None else bound
    if len(run) > limit:
        raise BoundExceeded(
            "%s enumeration is limited to %d events, got %d" % (what, limit, len(run))
        )


def _events_of(labels: Iterable[Label]) -> list[Event]:
    seen: dict[Label, int] = {}
    out = []
    for lab in labels:
        n = seen.get(lab, 0) + 1
        seen[lab] = n
        out.append(Event(lab, n))
    return out


def _annotation_map(run: Run) -> dict[Event, bool]:
    return {e: run.annotation_at(i) for i, e in enumerate(run.events)}


class EquivClass:
    """An explicitly enumerated equivalence class.

    Members are stored canonically as label sequences; same-label events
    never reorder under any relation considered here (they share a
    thread), so a label sequence determines the event permutation.
    """

    def __init__(
        self,
        relation: str,
        representative: Run,
        members: Iterable[tuple[Label, ...]],
        blocks: Optional[BlockSet] = None,
    ):
        assert relation in ("maz", "blocks", "rf")
        self.relation = relation
        self.representative = representative
        self.members: frozenset[tuple[Label, ...]] = frozenset(members)
        self.blocks = blocks
        assert representative.labels in self.members, "representative must belong to its class"

    def __len__(self):
        return len(self.members)

    def __contains__(self, item) -> bool:
        labels = item.labels if isinstance(item, Run) else tuple(item)
        return labels in self.members

    def member_runs(self) -> list[Run]:
        """Members as runs in a deterministic order, each event keeping
        the annotation it carries in the representative."""
        annot = _annotation_map(self.representative)
        out = []
        for labels in sorted(self.members):
            events = _events_of(labels)
            out.append(Run(labels, [annot[e] for e in events]))
        return out

    def __repr__(self):
        return "EquivClass(%s, %d members)" % (self.relation, len(self.members))


# ---- swap-closure enumeration ---------------------------------------------

def _contiguous_spans(word: tuple[Event, ...], blocks: BlockSet) -> list[tuple[int, int, Block]]:
    """(first, last, block) for every block whose members sit contiguously
    in the given permutation, sorted by first position."""
    lo: dict[Block, int] = {}
    hi: dict[Block, int] = {}
    for i, e in enumerate(word):
        b = blocks.block_of(e)
        if b is None:
            continue
        if b not in lo:
            lo[b] = i
        hi[b] = i
    spans = []
    for b, first in lo.items():
        last = hi[b]
        if last - first + 1 == len(b.members()):
            spans.append((first, last, b))
    spans.sort(key=lambda s: s[0])
    return spans


def _block_threads(b: Block) -> frozenset[str]:
    return frozenset(e.label.thread for e in b.members())


def _neighbors(word: tuple[Event, ...], blocks: Optional[BlockSet]):
    # adjacent independent event swaps
    for i in range(len(word) - 1):
        a, b = word[i], word[i + 1]
        if not conflicting(a.label, b.label):
            yield word[:i] + (b, a) + word[i + 2:]
    if blocks is None or len(blocks) == 0:
        return
    # adjacent contiguous thread-disjoint block swaps
    spans = _contiguous_spans(word, blocks)
    for (f1, l1, b1), (f2, l2, b2) in zip(spans, spans[1:]):
        if l1 + 1 != f2:
            continue
        if _block_threads(b1) & _block_threads(b2):
            continue
        yield word[:f1] + word[f2:l2 + 1] + word[f1:l1 + 1] + word[l2 + 1:]


def _swap_closure(run: Run, blocks: Optional[BlockSet]) -> set[tuple[Event, ...]]:
    start = tuple(run.events)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for word in frontier:
            for neighbor in _neighbors(word, blocks):
                if neighbor not in seen:
                    seen.add(neighbor)
                    nxt.append(neighbor)
        frontier = nxt
    return seen


def enum_maz_class(run: Run, bound: Optional[int] = None) -> EquivClass:
    """Closure under adjacent swaps of independent events."""
    _check_bound(run, bound, SWAP_BOUND, "swap-class")
    words = _swap_closure(run, None)
    return EquivClass("maz", run, (tuple(e.label for e in w) for w in words))


def enum_block_class(run: Run, blocks: BlockSet, bound: Optional[int] = None) -> EquivClass:
    """Closure under adjacent independent event swaps plus swaps of two
    adjacent, contiguous, thread-disjoint blocks.  Contiguity and
    adjacency are re-derived from each permutation as it is reached."""
    _check_bound(run, bound, SWAP_BOUND, "swap-class")
    words = _swap_closure(run, blocks)
    return EquivClass("blocks", run, (tuple(e.label for e in w) for w in words), blocks)


def enum_rf_class(run: Run, bound: Optional[int] = None) -> EquivClass:
    """All interleavings that preserve each thread's order and give every
    read the same writer it has in the original run.  Reads are checked
    as they are placed, so every completed word is a member outright."""
    _check_bound(run, bound, RF_BOUND, "reads-from class")
    rf = run.reads_from()
    by_thread: dict[str, list[Event]] = {}
    for e in run.events:
        by_thread.setdefault(e.label.thread, []).append(e)
    seqs = [by_thread[t] for t in sorted(by_thread)]
    members: list[tuple[Label, ...]] = []
    ptrs = [0] * len(seqs)
    acc: list[Event] = []
    last_write: dict[str, Event] = {}

    def rec():
        if len(acc) == len(run):
            members.append(tuple(e.label for e in acc))
            return
        for k, seq in enumerate(seqs):
            if ptrs[k] == len(seq):
                continue
            e = seq[ptrs[k]]
            var = e.label.variable
            if e.label.is_read():
                if last_write.get(var) != rf[e]:
                    continue
                undo = None
            else:
                undo = (var, last_write.get(var))
                last_write[var] = e
            ptrs[k] += 1
            acc.append(e)
            rec()
            acc.pop()
            ptrs[k] -= 1
            if undo is not None:
                var, prev = undo
                if prev is None:
                    del last_write[var]
                else:
                    last_write[var] = prev

    rec()
    return EquivClass("rf", run, members)


# ---- proper linearizations -------------------------------------------------

def _proper_search(
    run: Run,
    blocks: BlockSet,
    forced: Optional[list[Event]] = None,
    first_only: bool = False,
) -> list[tuple[Event, ...]]:
    """Topological DFS over the block happens-before order that never
    lets two same-variable blocks overlap.  ``forced`` pins the first
    placements (callers guarantee those respect the order); with
    ``first_only`` the search stops at the first completion."""
    order = block_hb(run, blocks)
    events = run.events
    n = len(events)
    idx = {e: i for i, e in enumerate(events)}
    preds = [0] * n
    for e, f in order.pairs():
        preds[idx[f]] |= 1 << idx[e]

    block_of = {e: b for b in blocks for e in b.members()}
    size = {b: len(b.members()) for b in blocks}

    out: list[tuple[Event, ...]] = []
    acc: list[Event] = []
    open_count: dict[Block, int] = {}
    open_vars: set[str] = set()
    placed = 0

    def place(e: Event) -> Optional[Block]:
        nonlocal placed
        acc.append(e)
        placed |= 1 << idx[e]
        b = block_of.get(e)
        if b is not None:
            open_count[b] = open_count.get(b, 0) + 1
            if open_count[b] == size[b]:
                open_vars.discard(b.variable)
            else:
                open_vars.add(b.variable)
        return b

    def unplace(e: Event, b: Optional[Block]) -> None:
        nonlocal placed
        acc.pop()
        placed &= ~(1 << idx[e])
        if b is not None:
            if open_count[b] == size[b]:
                open_vars.add(b.variable)
            open_count[b] -= 1
            if open_count[b] == 0:
                del open_count[b]
                open_vars.discard(b.variable)

    def legal(e: Event) -> bool:
        i = idx[e]
        if placed >> i & 1:
            return False
        if preds[i] & ~placed:
            return False
        b = block_of.get(e)
        if b is not None and b.variable in open_vars and open_count.get(b, 0) == 0:
            return False  # starting this block would interleave an open one
        return True

    for e in forced or []:
        place(e)

    def dfs() -> bool:
        if len(acc) == n:
            out.append(tuple(acc))
            return first_only
        for e in events:
            if not legal(e):
                continue
            b = place(e)
            done = dfs()
            unplace(e, b)
            if done:
                return True
        return False

    dfs()
    return out


def proper_linearizations(run: Run, blocks: BlockSet, bound: Optional[int] = None) -> set[Run]:
    """Every permutation of the run that linearizes the block
    happens-before order without interleaving two blocks on the same
    variable."""
    _check_bound(run, bound, SWAP_BOUND, "proper-linearization")
    annot = _annotation_map(run)
    words = _proper_search(run, blocks)
    return {
        Run([e.label for e in w], [annot[e] for e in w])
        for w in words
    }


def proper_topological_sort(
    run: Run,
    blocks: BlockSet,
    tie_break: Optional[Callable[[Event], object]] = None,
) -> Run:
    """Emit events one at a time: always a saturation-minimal pending
    event that is a read or whose variable has no partially emitted
    block.  For liberally atomic blocks this never gets stuck and the
    output is a proper linearization whatever the tie-break; a stuck
    state is reported because it witnesses a non-atomic input (or a
    bug)."""
    sat = saturate(run, blocks)
    key = tie_break if tie_break is not None else run.position
    annot = _annotation_map(run)
    block_of = {e: b for b in blocks for e in b.members()}
    size = {b: len(b.members()) for b in blocks}

    remaining = list(run.events)
    open_count: dict[Block, int] = {}
    open_vars: set[str] = set()
    picked: list[Event] = []
    while remaining:
        ready = [
            e for e in remaining
            if not any(sat.ordered(f, e) for f in remaining if f is not e)
        ]
        eligible = [
            e for e in ready
            if e.label.is_read() or e.label.variable not in open_vars
        ]
        if not eligible:
            raise ValueError(
                "proper topological sort is stuck after %d events; "
                "the blocks are not liberally atomic" % len(picked)
            )
        e = min(eligible, key=key)
        remaining.remove(e)
        picked.append(e)
        b = block_of.get(e)
        if b is not None:
            open_count[b] = open_count.get(b, 0) + 1
            if open_count[b] == size[b]:
                open_vars.discard(b.variable)
            else:
                open_vars.add(b.variable)
    return Run([e.label for e in picked], [annot[e] for e in picked])


# ---- derived order queries --------------------------------------------------

def intersection_order(cls: EquivClass) -> PartialOrder:
    """The pairs ordered the same way in every member of the class."""
    events = tuple(cls.representative.events)
    keep: Optional[set[tuple[Event, Event]]] = None
    for labels in cls.members:
        pos = {e: i for i, e in enumerate(_events_of(labels))}
        pairs = {
            (e, f)
            for i, e in enumerate(events)
            for f in events
            if pos[e] < pos[f]
        }
        keep = pairs if keep is None else keep & pairs
        if not keep:
            break
    return PartialOrder(events, keep or [])


def count_linear_extensions(order: PartialOrder) -> int:
    """Number of linearizations, by dynamic programming over downward
    closed sets."""
    events = order.universe
    n = len(events)
    preds = [0] * n
    for i, e in enumerate(events):
        for j, f in enumerate(events):
            if i != j and order.ordered(f, e):
                preds[i] |= 1 << j
    memo = {0: 1}

    def count(mask: int) -> int:
        got = memo.get(mask)
        if got is not None:
            return got
        total = 0
        for i in range(n):
            bit = 1 << i
            # remove a maximal element of the downward closed set
            if mask & bit and not any(
                preds[j] >> i & 1 for j in range(n) if mask >> j & 1 and j != i
            ):
                total += count(mask ^ bit)
        memo[mask] = total
        return total

    return count((1 << n) - 1)


def check_scope(
    run: Run,
    blocks: BlockSet,
    prefix_len: int,
    event_pos: int,
    bound: Optional[int] = None,
) -> bool:
    """Decompose the run as v·w·e·w' with v the first ``prefix_len``
    events and e the event at ``event_pos``.  Requires that v contains
    every block wholly or not at all, and that no event of w is
    saturation-ordered before e; violations raise ValueError.  Returns
    whether some completion v·e·v' is a proper linearization — which the
    scope property guarantees whenever the blocks are liberally atomic."""
    _check_bound(run, bound, SWAP_BOUND, "scope-completion")
    if not (0 <= prefix_len <= event_pos < len(run)):
        raise ValueError("need 0 <= prefix_len <= event_pos < run length")
    events = run.events
    v = list(events[:prefix_len])
    e = events[event_pos]
    w = events[prefix_len:event_pos]

    vset = set(v)
    for b in blocks:
        ms = set(b.members())
        if ms & vset and not ms <= vset:
            raise ValueError("the prefix splits the block %s" % (b,))
    sat = saturate(run, blocks)
    for f in w:
        if sat.ordered(f, e):
            raise ValueError("%s is ordered before the pivot %s" % (f, e))

    return bool(_proper_search(run, blocks, forced=v + [e], first_only=True))
