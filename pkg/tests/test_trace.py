"""Tests for trace parsing, validation, and the run primitives."""

import math
import random

import pytest

import gen
from blockeq.trace import (
    Event,
    Label,
    Run,
    TraceError,
    conflicting,
    interleave_threads,
    parse_run,
    program_order,
    reads_from,
    same_equiv_rf,
)


def test_parse_round_trip():
    text = "# header comment\nT1 w x @\n\nT2 r x\nT1 w x\n"
    run = parse_run(text)
    assert run.to_text() == "T1 w x @\nT2 r x\nT1 w x\n"
    assert parse_run(run.to_text()).labels == run.labels
    assert run.annotations == (True, False, False)
    # occurrences count per label
    assert [e.occurrence for e in run.events] == [1, 1, 2]


def test_parse_errors():
    with pytest.raises(TraceError):
        parse_run("T1 w")
    with pytest.raises(TraceError):
        parse_run("T1 q x")
    with pytest.raises(TraceError):
        parse_run("T1 w x !")
    err = None
    try:
        parse_run("T1 w x\nbroken line here")
    except TraceError as exc:
        err = exc
    assert err is not None and err.line == 2
    # reads need a preceding write of their variable
    with pytest.raises(TraceError):
        parse_run("T1 r x")
    with pytest.raises(TraceError):
        parse_run("T1 w y\nT1 r x")


def test_conflicting_ignores_marks():
    w1 = Label("T1", "w", "x", mark=3)
    r2 = Label("T2", "r", "x")
    assert conflicting(w1, r2)
    assert conflicting(r2, w1)
    # reads of one variable do not conflict across threads
    assert not conflicting(Label("T1", "r", "x"), Label("T2", "r", "x"))
    # same thread always conflicts
    assert conflicting(Label("T1", "r", "x"), Label("T1", "r", "y"))
    # distinct variables across threads never conflict
    assert not conflicting(Label("T1", "w", "x"), Label("T2", "w", "y"))


def test_run_accessors():
    run = parse_run("T1 w x\nT2 r x\nT1 w x")
    e0, e1, e2 = run.events
    assert run.position(e2) == 2 and run.event_at(0) == e0
    assert run.annotation_at(1) is False
    assert run.writer_of(e1) == e0
    missing = Event(Label("T9", "w", "z"), 1)
    with pytest.raises(KeyError):
        run.position(missing)
    core = run.with_annotations([True, True, False]).core()
    assert core.annotations == (False, False, False)
    assert core.labels == run.labels


def test_program_order_and_reads_from():
    rng = random.Random(5)
    for _ in range(100):
        run = gen.random_run(rng, rng.randint(1, 9))
        po = program_order(run)
        for e, f in po:
            assert e.label.thread == f.label.thread
            assert run.position(e) < run.position(f)
        # count: per-thread k*(k-1)/2
        per = {}
        for e in run.events:
            per[e.label.thread] = per.get(e.label.thread, 0) + 1
        assert len(po) == sum(k * (k - 1) // 2 for k in per.values())
        rf = reads_from(run)
        for e in run.events:
            if e.label.op == "r":
                w = rf[e]
                assert w.label.op == "w" and w.label.variable == e.label.variable
                assert run.position(w) < run.position(e)
                between = run.events[run.position(w) + 1 : run.position(e)]
                assert not any(
                    g.label.op == "w" and g.label.variable == e.label.variable
                    for g in between
                )


def test_same_equiv_rf():
    a = parse_run("T1 w x\nT2 r x\nT1 w y")
    assert same_equiv_rf(a, a)
    # moving the independent y-write keeps po and rf
    b = parse_run("T1 w x\nT1 w y\nT2 r x")
    assert same_equiv_rf(a, b)
    # retargeting the read does not
    c = parse_run("T1 w x\nT1 w y\nT1 w x\nT2 r x")
    d = parse_run("T1 w x\nT1 w y\nT2 r x\nT1 w x")
    assert not same_equiv_rf(c, d)
    # different multisets of labels are never equivalent
    assert not same_equiv_rf(a, parse_run("T1 w x\nT2 r x"))


def test_interleave_threads_counts():
    t1 = [Label("T1", "w", "x"), Label("T1", "r", "x")]
    t2 = [Label("T2", "w", "y"), Label("T2", "r", "y"), Label("T2", "w", "y")]
    words = list(interleave_threads({"T1": t1, "T2": t2}))
    assert len(words) == math.comb(5, 2)
    assert len(set(words)) == len(words)
    for word in words:
        assert [l for l in word if l.thread == "T1"] == t1
        assert [l for l in word if l.thread == "T2"] == t2
