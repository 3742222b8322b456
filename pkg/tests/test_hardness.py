"""Tests for the equality-reduction generator.

The load-bearing fact — the two query events are ordered under
reads-from equivalence exactly when the bit vectors are equal — is
checked exhaustively for one- and two-bit vectors against the class
enumeration, with three-bit spot checks kept light here (the acceptance
sweep samples more).
"""

import itertools
import random

import pytest

from blockeq.blocks import blocks_from_annotation
from blockeq.hardness import (
    EqualityInstance,
    check_reduction,
    gen_equality_trace,
    ordered_in_class,
)
from blockeq.monitor import Universe, sat_initial, sat_step, symbols_of
from blockeq.orders import after_set
from blockeq.trace import parse_run


def test_instance_validation():
    with pytest.raises(ValueError):
        EqualityInstance((0, 1), (0,))
    with pytest.raises(ValueError):
        EqualityInstance((), ())
    with pytest.raises(ValueError):
        EqualityInstance((0, 2), (0, 1))
    with pytest.raises(ValueError):
        EqualityInstance.from_strings("10x", "101")
    with pytest.raises(ValueError):
        EqualityInstance.from_strings("", "")
    inst = EqualityInstance.from_strings("1101", "0110")
    assert inst.n == 4 and inst.a == (1, 1, 0, 1) and inst.b == (0, 1, 1, 0)


def test_trace_shape():
    for n in range(1, 6):
        rng = random.Random(n)
        a = tuple(rng.randint(0, 1) for _ in range(n))
        b = tuple(rng.randint(0, 1) for _ in range(n))
        run, t1, t2 = gen_equality_trace(EqualityInstance(a, b))
        assert len(run) == 6 * n + 4
        assert t1.label.thread == "T1" and t1.label.op == "r" and t1.label.variable == "u"
        assert t2.label.thread == "T2" and t2.label.op == "w" and t2.label.variable == "u"
        assert run.position(t1) + 1 == run.position(t2)
        # generated text round-trips through the parser
        assert parse_run(run.to_text()).labels == run.labels
        assert {l.thread for l in run.labels} == {"T1", "T2"}
        assert {l.variable for l in run.labels} <= {"c", "x0", "x1", "y0", "y1", "u"}


def test_ordered_iff_equal_exhaustive():
    for n in (1, 2):
        for bits in itertools.product((0, 1), repeat=2 * n):
            inst = EqualityInstance(bits[:n], bits[n:])
            assert check_reduction(inst), inst


def test_ordered_iff_equal_n3_spot():
    assert check_reduction(EqualityInstance.from_strings("101", "101"))
    assert check_reduction(EqualityInstance.from_strings("101", "110"))


def test_known_inversion_witness():
    # unequal vectors leave a member with the query pair swapped
    run, t1, t2 = gen_equality_trace(EqualityInstance.from_strings("11", "10"))
    assert not ordered_in_class(run, t1, t2)
    run, t1, t2 = gen_equality_trace(EqualityInstance.from_strings("1", "1"))
    assert ordered_in_class(run, t1, t2)
    run, t1, t2 = gen_equality_trace(EqualityInstance.from_strings("1", "0"))
    assert not ordered_in_class(run, t1, t2)


def test_monitor_after_rows_on_reduction_trace():
    # with nothing marked, the monitor's after rows equal the offline
    # commutation-order after sets of each symbol's last occurrence
    run, _, _ = gen_equality_trace(EqualityInstance.from_strings("101", "011"))
    blocks = blocks_from_annotation(run)
    universe = Universe.from_run(run)
    q = sat_initial(universe)
    for s in symbols_of(run):
        q = sat_step(q, s)
    last = {}
    for e in run.events:
        last[(e.label, False)] = e
    for sym, e in last.items():
        assert q.aft_set(sym) == after_set(run, blocks, e)
