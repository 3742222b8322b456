"""Concurrent run parsing, validation and indexing.

A run is a finite sequence of labels ``<thread, r|w, variable>``.  Runs are
immutable after construction; derived data (program order, the reads-from
map, per-label occurrence counts) is computed once and cached on the object.

The trace file format is line based::

    T1 w x
    T2 r x @      # trailing '@' marks the event as a block member
    # comments and blank lines are ignored

Threads and variables are bare identifiers; the universes are inferred
from the trace, no declaration header is needed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

READ = "r"
WRITE = "w"


@dataclass(frozen=True, order=True)
class Label:
    """An alphabet symbol: one thread performing one access to one variable.

    ``mark`` is normally None.  Relabelling machinery (used when asking
    whether two specific *events* can be reordered) sets it to a small
    integer to obtain a fresh symbol that conflicts exactly like the
    original; all dependence computations ignore it.
    """

    thread: str
    op: str  # READ or WRITE
    variable: str
    mark: Optional[int] = None

    def __post_init__(self):
        if self.op not in (READ, WRITE):
            raise ValueError("op must be %r or %r, got %r" % (READ, WRITE, self.op))

    def is_read(self) -> bool:
        return self.op == READ

    def is_write(self) -> bool:
        return self.op == WRITE

    def __str__(self):
        base = "%s %s %s" % (self.thread, self.op, self.variable)
        if self.mark is not None:
            base += " *%d" % self.mark
        return base


def conflicting(a: Label, b: Label) -> bool:
    """Dependence between symbols: same thread, or same variable with at
    least one write.  Marks are transparent."""
    if a.thread == b.thread:
        return True
    return a.variable == b.variable and (a.op == WRITE or b.op == WRITE)


@dataclass(frozen=True, order=True)
class Event:
    """A single occurrence of a label inside a run.

    Identity is (label, occurrence) with 1-based occurrence counting; two
    runs that are permutations of one another share the same event set,
    because same-label events keep their relative (program) order under
    every equivalence considered here.
    """

    label: Label
    occurrence: int

    def __str__(self):
        return "%s #%d" % (self.label, self.occurrence)


class TraceError(ValueError):
    """Raised for syntax errors and validation failures in trace input."""

    def __init__(self, message, line: Optional[int] = None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class Run:
    """A validated concurrent run.

    Positions are 0-based internally.  Every read is checked to have an
    earlier write on the same variable; a read with no writer is a hard
    validation error rather than an implicit initial write.
    """

    def __init__(self, labels: Iterable[Label], annotations: Optional[Iterable[bool]] = None):
        self.labels: tuple[Label, ...] = tuple(labels)
        if annotations is None:
            self.annotations: tuple[bool, ...] = (False,) * len(self.labels)
        else:
            self.annotations = tuple(bool(b) for b in annotations)
            if len(self.annotations) != len(self.labels):
                raise ValueError("annotation list length does not match run length")

        events = []
        seen: dict[Label, int] = {}
        for lab in self.labels:
            n = seen.get(lab, 0) + 1
            seen[lab] = n
            events.append(Event(lab, n))
        self.events: tuple[Event, ...] = tuple(events)
        self._position: dict[Event, int] = {e: i for i, e in enumerate(events)}

        self.threads: tuple[str, ...] = tuple(sorted({l.thread for l in self.labels}))
        self.variables: tuple[str, ...] = tuple(sorted({l.variable for l in self.labels}))

        # reads-from: each read observes the nearest preceding same-variable write
        rf: dict[int, int] = {}
        last_write: dict[str, int] = {}
        for i, lab in enumerate(self.labels):
            if lab.is_write():
                last_write[lab.variable] = i
            else:
                if lab.variable not in last_write:
                    raise TraceError(
                        "read of %r by %s at position %d has no preceding write"
                        % (lab.variable, lab.thread, i + 1)
                    )
                rf[i] = last_write[lab.variable]
        self._rf_pos = rf

    # -- basic indexing -------------------------------------------------

    def __len__(self):
        return len(self.labels)

    def __iter__(self):
        return iter(self.events)

    def __eq__(self, other):
        return isinstance(other, Run) and self.labels == other.labels and self.annotations == other.annotations

    def __hash__(self):
        return hash((self.labels, self.annotations))

    def position(self, e: Event) -> int:
        return self._position[e]

    def event_at(self, i: int) -> Event:
        return self.events[i]

    def annotation_at(self, i: int) -> bool:
        return self.annotations[i]

    # -- derived relations ----------------------------------------------

    def program_order(self) -> frozenset[tuple[Event, Event]]:
        """All pairs (e, f) with e before f in the same thread."""
        by_thread: dict[str, list[Event]] = {}
        for e in self.events:
            by_thread.setdefault(e.label.thread, []).append(e)
        po = set()
        for chain in by_thread.values():
            for i, e in enumerate(chain):
                for f in chain[i + 1:]:
                    po.add((e, f))
        return frozenset(po)

    def reads_from(self) -> dict[Event, Event]:
        """Map from each read event to the write event it observes."""
        return {self.events[r]: self.events[w] for r, w in self._rf_pos.items()}

    def writer_of(self, e: Event) -> Event:
        i = self._position[e]
        if i not in self._rf_pos:
            raise KeyError("%s is not a read event" % (e,))
        return self.events[self._rf_pos[i]]

    def with_annotations(self, annotations: Iterable[bool]) -> "Run":
        return Run(self.labels, annotations)

    def core(self) -> "Run":
        """The same run with all annotations dropped."""
        return Run(self.labels)

    def to_text(self, with_annotations: bool = True) -> str:
        lines = []
        for lab, on in zip(self.labels, self.annotations):
            line = "%s %s %s" % (lab.thread, lab.op, lab.variable)
            if with_annotations and on:
                line += " @"
            lines.append(line)
        return "\n".join(lines) + "\n"

    def __repr__(self):
        return "Run(%s)" % "; ".join(
            str(l) + ("@" if a else "") for l, a in zip(self.labels, self.annotations)
        )


def parse_run(text: str) -> Run:
    """Parse the line-based trace format into a validated Run.

    Raises TraceError with the offending line number on bad syntax,
    unknown ops, or reads that have no preceding write.
    """
    labels = []
    annots = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        marked = False
        if parts and parts[-1] == "@":
            marked = True
            parts = parts[:-1]
        if len(parts) != 3:
            raise TraceError("expected '<thread> <r|w> <variable> [@]', got %r" % raw.strip(), lineno)
        thread, op, var = parts
        if op not in (READ, WRITE):
            raise TraceError("unknown op %r (expected 'r' or 'w')" % op, lineno)
        labels.append(Label(thread, op, var))
        annots.append(marked)
    try:
        return Run(labels, annots)
    except TraceError:
        raise
    # no other exception kinds escape Run() for parsed input


def program_order(run: Run) -> frozenset[tuple[Event, Event]]:
    return run.program_order()


def reads_from(run: Run) -> dict[Event, Event]:
    return run.reads_from()


def same_equiv_rf(run_a: Run, run_b: Run) -> bool:
    """Reads-from equivalence: equal event sets, equal program order and
    equal reads-from maps."""
    if set(run_a.events) != set(run_b.events):
        return False
    if run_a.program_order() != run_b.program_order():
        return False
    return run_a.reads_from() == run_b.reads_from()


def interleave_threads(per_thread: dict[str, list[Label]]) -> Iterable[tuple[Label, ...]]:
    """All interleavings of the given per-thread label sequences.  Utility
    for oracle-style enumeration; order of emission is deterministic."""
    threads = sorted(per_thread)
    seqs = [tuple(per_thread[t]) for t in threads]

    def rec(ptrs):
        if all(p == len(s) for p, s in zip(ptrs, seqs)):
            yield ()
            return
        for k, (p, s) in enumerate(zip(ptrs, seqs)):
            if p < len(s):
                nxt = list(ptrs)
                nxt[k] += 1
                for rest in rec(tuple(nxt)):
                    yield (s[p],) + rest

    return rec(tuple(0 for _ in seqs))
