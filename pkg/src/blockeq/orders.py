"""Happens-before orders over a run: the trace order, the block order, and
its saturation.

Three orders, coarsest to finest:

* ``mazurkiewicz_hb`` — transitive closure of all dependent pairs in run
  order; its linearizations form the plain commutation class.
* ``block_hb``        — the same, minus cross-thread dependent pairs whose
  endpoints lie in two distinct blocks of a chosen block set.
* ``saturate``        — the least fixpoint that re-adds block-level
  ordering: a same-variable ordered pair between two blocks orders the
  blocks, and ordered blocks order all their members crosswise.

Everything here is offline and dense (full reachability bitmasks); the
constant-space streaming counterpart lives in monitor.py.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .blocks import Block, BlockSet
from .trace import Event, Label, Run, conflicting

# An annotated label: the alphabet symbol plus its block-membership bit.
AnnLabel = tuple[Label, bool]


class PartialOrder:
    """A strict partial order over the events of one run, stored as a full
    reachability structure (bitmask of successors per event)."""

    def __init__(self, universe: Sequence[Event], pairs: Iterable[tuple[Event, Event]]):
        self.universe: tuple[Event, ...] = tuple(universe)
        self._idx = {e: i for i, e in enumerate(self.universe)}
        n = len(self.universe)
        succ = [0] * n
        for e, f in pairs:
            succ[self._idx[e]] |= 1 << self._idx[f]
        _close(succ)
        for i in range(n):
            if succ[i] >> i & 1:
                raise ValueError("cycle through %s" % (self.universe[i],))
        self._succ = succ

    def ordered(self, e: Event, f: Event) -> bool:
        """True iff e strictly before f."""
        return self._succ[self._idx[e]] >> self._idx[f] & 1 == 1

    def leq(self, e: Event, f: Event) -> bool:
        return e == f or self.ordered(e, f)

    def successors(self, e: Event) -> frozenset[Event]:
        m = self._succ[self._idx[e]]
        return frozenset(self.universe[j] for j in _bits(m))

    def pairs(self) -> frozenset[tuple[Event, Event]]:
        return frozenset(
            (self.universe[i], self.universe[j])
            for i in range(len(self.universe))
            for j in _bits(self._succ[i])
        )

    def covering_pairs(self) -> list[tuple[Event, Event]]:
        """Transitive reduction, for edge-list display."""
        out = []
        n = len(self.universe)
        for i in range(n):
            for j in _bits(self._succ[i]):
                # (i,j) is covering unless some k sits strictly between
                if not any(self._succ[k] >> j & 1 for k in _bits(self._succ[i]) if k != j):
                    out.append((self.universe[i], self.universe[j]))
        return out

    def is_linearized_by(self, seq: Sequence[Event]) -> bool:
        pos = {e: i for i, e in enumerate(seq)}
        if len(pos) != len(self.universe) or set(pos) != set(self.universe):
            return False
        return all(
            pos[self.universe[i]] < pos[self.universe[j]]
            for i in range(len(self.universe))
            for j in _bits(self._succ[i])
        )

    def __len__(self):
        return len(self.universe)

    def __eq__(self, other):
        return (
            isinstance(other, PartialOrder)
            and self.universe == other.universe
            and self._succ == other._succ
        )

    def __hash__(self):
        return hash((self.universe, tuple(self._succ)))


def _close(succ: list[int]) -> None:
    """In-place transitive closure of a successor-bitmask table."""
    n = len(succ)
    changed = True
    while changed:
        changed = False
        for i in range(n):
            acc = succ[i]
            for j in _bits(succ[i]):
                acc |= succ[j]
            if acc != succ[i]:
                succ[i] = acc
                changed = True


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def _dependent_pairs(run: Run) -> list[tuple[Event, Event]]:
    out = []
    for i, e in enumerate(run.events):
        for f in run.events[i + 1:]:
            if conflicting(e.label, f.label):
                out.append((e, f))
    return out


def mazurkiewicz_hb(run: Run) -> PartialOrder:
    """Happens-before of the plain commutation equivalence: the transitive
    closure of all dependent pairs in run order."""
    return PartialOrder(run.events, _dependent_pairs(run))


def block_hb(run: Run, blocks: BlockSet) -> PartialOrder:
    """Block happens-before: dependent pairs in run order, except that a
    cross-thread pair whose two events lie in two distinct blocks is
    dropped.  With no blocks this equals mazurkiewicz_hb."""
    kept = []
    for e, f in _dependent_pairs(run):
        if e.label.thread != f.label.thread:
            be, bf = blocks.block_of(e), blocks.block_of(f)
            if be is not None and bf is not None and be is not bf:
                continue
        kept.append((e, f))
    return PartialOrder(run.events, kept)


class BlockOrderOverlay:
    """Block-level pairs (B, B') asserted ordered during saturation."""

    def __init__(self, pairs: Iterable[tuple[Block, Block]]):
        self._pairs = frozenset(pairs)

    def ordered(self, b1: Block, b2: Block) -> bool:
        return (b1, b2) in self._pairs

    def pairs(self) -> frozenset[tuple[Block, Block]]:
        return self._pairs

    def __iter__(self):
        return iter(sorted(self._pairs, key=lambda p: (str(p[0]), str(p[1]))))

    def __len__(self):
        return len(self._pairs)


@dataclass(frozen=True)
class SaturationResult:
    """Fixpoint of the saturation rules: event-level closure plus the
    block-level overlay.  On valid block sets the event component always
    embeds in run order (same-variable blocks never interleave), so
    ``cyclic`` stays False; it is checked anyway and reported rather than
    silently ignored."""

    run: Run
    blocks: BlockSet
    event_pairs: frozenset[tuple[Event, Event]]
    overlay: BlockOrderOverlay
    cyclic: bool
    _order: list = field(default_factory=list, repr=False, compare=False)

    def ordered(self, e: Event, f: Event) -> bool:
        return (e, f) in self.event_pairs

    def leq(self, e: Event, f: Event) -> bool:
        return e == f or (e, f) in self.event_pairs

    @property
    def order(self) -> PartialOrder:
        """The event-level closure as a PartialOrder (raises on a cycle)."""
        if not self._order:
            if self.cyclic:
                raise ValueError("saturation produced a cyclic event order")
            self._order.append(PartialOrder(self.run.events, self.event_pairs))
        return self._order[0]

    def __iter__(self):
        # allow destructuring as (order, overlay)
        yield self.order
        yield self.overlay


def saturate(run: Run, blocks: BlockSet) -> SaturationResult:
    """Least fixpoint of:

    1. every block-happens-before pair is in the result;
    2. a same-variable result pair between members of two distinct blocks
       orders those blocks;
    3. an ordered block pair orders every member of the first block before
       every member of the second;

    closed under transitivity.  Rule 2 is restricted to events that are
    block members (events outside every block never order blocks)."""
    events = run.events
    n = len(events)
    idx = {e: i for i, e in enumerate(events)}

    succ = [0] * n
    for e, f in block_hb(run, blocks).pairs():
        succ[idx[e]] |= 1 << idx[f]

    owner = [blocks.block_of(e) for e in events]
    members = {b: [idx[e] for e in b.members()] for b in blocks}
    member_mask = {b: sum(1 << i for i in members[b]) for b in blocks}

    block_pairs: set[tuple[Block, Block]] = set()
    changed = True
    while changed:
        changed = False
        # rule 2: same-variable ordered pair across two distinct blocks
        for i in range(n):
            bi = owner[i]
            if bi is None:
                continue
            for j in _bits(succ[i]):
                bj = owner[j]
                if bj is None or bj is bi:
                    continue
                if events[i].label.variable != events[j].label.variable:
                    continue
                if (bi, bj) not in block_pairs:
                    block_pairs.add((bi, bj))
                    changed = True
        # rule 3: ordered blocks order all members crosswise
        for b1, b2 in block_pairs:
            m2 = member_mask[b2]
            for i in members[b1]:
                if succ[i] | m2 != succ[i]:
                    succ[i] |= m2
                    changed = True
        if changed:
            _close(succ)

    cyclic = any(succ[i] >> i & 1 for i in range(n))
    pairs = frozenset(
        (events[i], events[j]) for i in range(n) for j in _bits(succ[i]) if i != j
    )
    return SaturationResult(run, blocks, pairs, BlockOrderOverlay(block_pairs), cyclic)


def ann_label(blocks: BlockSet, e: Event) -> AnnLabel:
    """The annotated-alphabet symbol of an event: label plus membership bit."""
    return (e.label, blocks.is_member(e))


def after_set(
    run: Run,
    blocks: BlockSet,
    e: Event,
    sat: Optional[SaturationResult] = None,
) -> frozenset[AnnLabel]:
    """Annotated labels of all events at-or-after e in the saturated order.

    Bounded by the alphabet size regardless of run length, which is what
    makes the streaming monitor's state constant."""
    if sat is None:
        sat = saturate(run, blocks)
    out = {ann_label(blocks, e)}
    for f in run.events:
        if sat.ordered(e, f):
            out.add(ann_label(blocks, f))
    return frozenset(out)


def is_proper_linearization(
    candidate: Run,
    base: Run,
    blocks: BlockSet,
    order: Optional[PartialOrder] = None,
) -> bool:
    """True iff candidate permutes base's events, respects the block
    happens-before of (base, blocks), and no two same-variable blocks
    occupy overlapping position windows in candidate.

    ``order`` substitutes a different order to respect (e.g. the saturated
    one); the accepted set is provably the same either way, which the
    tests check by enumeration.
    """
    if set(candidate.events) != set(base.events) or len(candidate) != len(base):
        raise ValueError("candidate is not a permutation of the base run's events")
    if order is None:
        order = block_hb(base, blocks)
    pos = {e: i for i, e in enumerate(candidate.events)}
    for e, f in order.pairs():
        if pos[e] >= pos[f]:
            return False
    spans = []
    for b in blocks:
        ps = [pos[e] for e in b.members()]
        spans.append((b.variable, min(ps), max(ps)))
    by_var: dict[str, list[tuple[int, int]]] = {}
    for var, lo, hi in spans:
        by_var.setdefault(var, []).append((lo, hi))
    for windows in by_var.values():
        windows.sort()
        for (_, hi1), (lo2, _) in zip(windows, windows[1:]):
            if lo2 <= hi1:
                return False
    return True
