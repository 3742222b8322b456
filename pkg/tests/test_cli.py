"""Golden tests for the command-line front end.

Every command's stdout is byte-deterministic for a fixed command line,
so these tests pin exact output where the format matters and exit codes
everywhere.  ``main`` is called in-process with an argv list.
"""

from pathlib import Path

import pytest

from blockeq.blocks import blocks_from_annotation
from blockeq.cli import main
from blockeq.trace import parse_run

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def trace(name):
    return str(CORPUS / name)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_reports_shape(capsys):
    code, out, err = run_cli(capsys, "validate", trace("three_thread_zx.trace"))
    assert code == 0
    assert out == "ok: 8 events, 3 threads, 2 variables\n"
    assert err == ""


def test_validate_annotated_trace(capsys):
    code, out, _ = run_cli(capsys, "validate", trace("serial_two_blocks.trace"))
    assert code == 0
    assert out.endswith("annotations: well-formed\n")


def test_validate_rejects_bad_content(tmp_path, capsys):
    bad = tmp_path / "bad.trace"
    bad.write_text("T1 r x\n")
    code, _, err = run_cli(capsys, "validate", str(bad))
    assert code == 1
    assert err.startswith("error:")

    # a marked read observing an unmarked write is not a valid marking
    ill = tmp_path / "ill.trace"
    ill.write_text("T1 w x\nT2 r x @\n")
    code, _, err = run_cli(capsys, "validate", str(ill))
    assert code == 1
    assert err.startswith("error:")


def test_missing_file_is_usage_error(capsys):
    code, _, err = run_cli(capsys, "validate", "/no/such/file.trace")
    assert code == 2
    assert err.startswith("error:")


def test_hb_and_bhb_edges(capsys):
    code, out, _ = run_cli(capsys, "hb", trace("two_wr_pairs.trace"))
    assert code == 0
    assert out == "e1 -> e2\ne2 -> e3\ne3 -> e4\n"
    # the two blocks are cross-thread, so their cross pairs are exempt
    code, out, _ = run_cli(capsys, "bhb", trace("two_wr_pairs.trace"))
    assert code == 0
    assert out == "e1 -> e2\ne3 -> e4\n"


def test_hb_dot_output(capsys):
    code, out, _ = run_cli(capsys, "hb", trace("two_wr_pairs.trace"), "--format", "dot")
    assert code == 0
    assert out == (
        "digraph hb {\n"
        '  e1 [label="T1 w x @"];\n'
        '  e2 [label="T1 r x @"];\n'
        '  e3 [label="T2 w x @"];\n'
        '  e4 [label="T2 r x @"];\n'
        "  e1 -> e2;\n"
        "  e2 -> e3;\n"
        "  e3 -> e4;\n"
        "}\n"
    )


def test_bhb_with_selector_matches_annotation_default(capsys):
    _, by_marks, _ = run_cli(capsys, "bhb", trace("two_wr_pairs.trace"))
    _, by_sel, _ = run_cli(
        capsys, "bhb", trace("two_wr_pairs.trace"), "--blocks", "writes=1,3"
    )
    assert by_marks == by_sel


def test_atomicity_yes_no_lines_and_witness(capsys):
    code, out, _ = run_cli(
        capsys, "atomicity", trace("atomic_not_serializable.trace"), "--witness"
    )
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "liberally-atomic: yes"
    assert lines[1] == "conflict-serializable: no"
    assert lines[2] == "witness:"
    witness = parse_run("\n".join(lines[3:]) + "\n")
    # every block of the witness is contiguous
    for block in blocks_from_annotation(witness):
        pos = sorted(witness.position(e) for e in block.members())
        assert pos == list(range(pos[0], pos[0] + len(pos)))


def test_atomicity_rejects_intertwined_blocks(capsys):
    code, out, err = run_cli(
        capsys, "atomicity", trace("intertwined_blocks.trace"), "--witness"
    )
    assert code == 1
    assert out == "liberally-atomic: no\nconflict-serializable: no\n"
    assert err.startswith("warning:")


def test_atomicity_dot_block_graph(capsys):
    code, out, _ = run_cli(
        capsys, "atomicity", trace("intertwined_blocks.trace"), "--format", "dot"
    )
    assert code == 1
    assert out == (
        "digraph blocks {\n"
        '  n0 [label="T1 w x @; T2 r x @"];\n'
        '  n1 [label="T2 w y @; T1 r y @"];\n'
        "  n0 -> n1;\n"
        "  n1 -> n0;\n"
        "}\n"
    )


def test_concurrent_events_ordered_pair(capsys):
    code, out, _ = run_cli(
        capsys,
        "concurrent", trace("three_thread_zx.trace"),
        "--events", "6", "7", "--mode", "maz",
    )
    assert code == 1
    assert out == "concurrent: no\n"


def test_concurrent_events_blocks_mode(capsys):
    code, out, _ = run_cli(
        capsys,
        "concurrent", trace("five_thread_blocks.trace"),
        "--events", "1", "9", "--mode", "blocks",
    )
    assert code == 0
    assert out == "concurrent: yes\n"


def test_concurrent_symbol_queries(capsys):
    code, out, _ = run_cli(
        capsys,
        "concurrent", trace("no_maximal_annotation.trace"),
        "--c", "T2 w x", "--d", "T3 w x", "--mode", "general",
    )
    assert code == 0 and out == "concurrent: yes\n"
    code, out, _ = run_cli(
        capsys,
        "concurrent", trace("no_maximal_annotation.trace"),
        "--c", "T2 w x", "--d", "T3 w x", "--mode", "maz",
    )
    assert code == 1 and out == "concurrent: no\n"


def test_concurrent_stream_strategy_warns(capsys):
    code, out, err = run_cli(
        capsys,
        "concurrent", trace("no_maximal_annotation.trace"),
        "--c", "T2 w x", "--d", "T3 w x", "--mode", "general",
        "--strategy", "stream",
    )
    assert code == 0 and out == "concurrent: yes\n"
    assert err.startswith("warning:")


def test_concurrent_usage_errors(capsys):
    code, _, err = run_cli(
        capsys,
        "concurrent", trace("two_wr_pairs.trace"),
        "--events", "1", "2", "--c", "T1 w x",
    )
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(
        capsys, "concurrent", trace("two_wr_pairs.trace"), "--events", "1", "9"
    )
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(
        capsys, "concurrent", trace("two_wr_pairs.trace"), "--c", "T1 w x"
    )
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(
        capsys,
        "concurrent", trace("two_wr_pairs.trace"),
        "--c", "T1 q x", "--d", "T2 w x",
    )
    assert code == 2 and err.startswith("error:")


def test_enumerate_counts(capsys):
    code, out, _ = run_cli(
        capsys, "enumerate", trace("conciseness_n2.trace"), "--relation", "blocks"
    )
    assert code == 0
    assert out == "members: 6\n"
    _, out, _ = run_cli(
        capsys, "enumerate", trace("conciseness_n2.trace"), "--relation", "maz"
    )
    assert out == "members: 1\n"


def test_enumerate_member_listing(capsys):
    code, out, _ = run_cli(
        capsys,
        "enumerate", trace("two_wr_pairs.trace"), "--relation", "rf", "--limit", "5",
    )
    assert code == 0
    assert out == (
        "members: 2\n"
        "member: T1 w x; T1 r x; T2 w x; T2 r x\n"
        "member: T2 w x; T2 r x; T1 w x; T1 r x\n"
    )


def test_enumerate_limit_with_seed_samples(capsys):
    args = ("enumerate", trace("conciseness_n2.trace"), "--relation", "blocks",
            "--limit", "3")
    _, first, _ = run_cli(capsys, *args, "--seed", "7")
    _, again, _ = run_cli(capsys, *args, "--seed", "7")
    assert first == again
    assert first.startswith("members: 6\n")
    assert first.count("member: ") == 3


def test_enumerate_bound_exceeded(tmp_path, capsys):
    long = tmp_path / "long.trace"
    long.write_text("".join("T%d w x\n" % (i % 3 + 1) for i in range(13)))
    code, _, err = run_cli(capsys, "enumerate", str(long), "--relation", "maz")
    assert code == 3
    assert err.startswith("error:")
    code, out, _ = run_cli(
        capsys, "enumerate", str(long), "--relation", "maz", "--swap-bound", "13"
    )
    assert code == 0 and out == "members: 1\n"


def test_annotate_defaults_to_all_writes(capsys):
    code, out, _ = run_cli(capsys, "annotate", trace("three_thread_zx.trace"))
    assert code == 0
    annotated = parse_run(out)
    # every event is in some block: every write marked, every read follows
    assert all(annotated.annotations)
    blocks_from_annotation(annotated)  # well-formed by construction


def test_annotate_selector_none_strips_marks(capsys):
    code, out, _ = run_cli(
        capsys, "annotate", trace("two_wr_pairs.trace"), "--blocks", "none"
    )
    assert code == 0
    assert "@" not in out
    # and keeping the trace's own marks is the default for marked traces
    _, kept, _ = run_cli(capsys, "annotate", trace("two_wr_pairs.trace"))
    assert parse_run(kept) == parse_run((CORPUS / "two_wr_pairs.trace").read_text())


def test_sat_dump_structure_and_determinism(capsys):
    args = ("sat", trace("serial_two_blocks.trace"), "--dump-state-every", "2")
    code, first, _ = run_cli(capsys, *args)
    assert code == 0
    _, again, _ = run_cli(capsys, *args)
    assert first == again
    headers = [l for l in first.splitlines() if l.startswith("-- after")]
    # snapshots after events 2, 4, 6, plus the final state after 7
    assert headers == [
        "-- after 2 events --",
        "-- after 4 events --",
        "-- after 6 events --",
        "-- after 7 events --",
    ]


def test_sat_json_lines(capsys):
    import json

    code, out, _ = run_cli(
        capsys,
        "sat", trace("serial_two_blocks.trace"),
        "--dump-state-every", "3", "--format", "json-lines",
    )
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert [r["events"] for r in records] == [3, 6, 7]
    assert all(isinstance(r["state"], str) and r["state"] for r in records)


def test_gen_hardness_golden_n1(capsys):
    code, out, err = run_cli(capsys, "gen-hardness", "--a", "1", "--b", "1", "--check")
    assert code == 0
    assert err == ""
    assert out == (
        "T1 w x0\n"
        "T1 w c\n"
        "T1 w x1\n"
        "T1 w u\n"
        "T1 r c\n"
        "T1 r u\n"
        "T2 w u\n"
        "T2 r x1\n"
        "T2 w c\n"
        "T2 r u\n"
        "# first marker: position 6, second marker: position 7\n"
        "# check: markers ordered in every equivalent run iff the strings are equal\n"
    )
    # the emitted text round-trips through the parser (comments dropped)
    assert len(parse_run(out)) == 10


def test_gen_hardness_check_skipped_beyond_n3(capsys):
    code, out, err = run_cli(capsys, "gen-hardness", "--a", "1010", "--b", "1010", "--check")
    assert code == 0
    assert err.startswith("warning:")
    assert len(parse_run(out)) == 6 * 4 + 4


def test_gen_hardness_rejects_bad_bits(capsys):
    code, _, err = run_cli(capsys, "gen-hardness", "--a", "10", "--b", "1x")
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(capsys, "gen-hardness", "--a", "10", "--b", "101")
    assert code == 2 and err.startswith("error:")


def test_format_gating(capsys):
    code, _, err = run_cli(
        capsys, "hb", trace("two_wr_pairs.trace"), "--format", "json-lines"
    )
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(
        capsys, "sat", trace("two_wr_pairs.trace"), "--format", "dot"
    )
    assert code == 2 and err.startswith("error:")
    code, _, err = run_cli(
        capsys, "enumerate", trace("two_wr_pairs.trace"),
        "--relation", "maz", "--format", "dot",
    )
    assert code == 2 and err.startswith("error:")


def test_bounds_must_be_positive(capsys):
    code, _, err = run_cli(
        capsys, "enumerate", trace("two_wr_pairs.trace"),
        "--relation", "maz", "--swap-bound", "0",
    )
    assert code == 2 and err.startswith("error:")


def test_bad_block_selector(capsys):
    code, _, err = run_cli(
        capsys, "bhb", trace("two_wr_pairs.trace"), "--blocks", "writes=2"
    )
    assert code == 2 and err.startswith("error:")
