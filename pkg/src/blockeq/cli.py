"""Command-line front end.

Subcommands cover the whole library surface: trace validation, the two
happens-before orders, atomicity checking, concurrency decisions, class
enumeration, annotation, streaming-state dumps, and generation of the
equality-language hardness family.  All output is byte-deterministic
for a fixed command line, so every command is usable in golden tests.

Exit codes: 0 success (or a positive decision such as "concurrent"),
1 negative decision, 2 usage or input errors, 3 enumeration bound
exceeded.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import dataclass
from pathlib import Path

from .atomicity import (
    block_graph,
    is_conflict_serializable,
    is_liberally_atomic,
    serial_witness,
)
from .blocks import (
    BlockSet,
    annotate,
    blocks_from_annotation,
    is_well_annotated,
    parse_block_selector,
)
from .concurrency import (
    GIVEN_BLOCKS,
    MAZURKIEWICZ,
    MODES,
    MOST_GENERAL,
    conc_events,
    conc_symbols_blocks,
    conc_symbols_general,
    conc_symbols_maz,
)
from .hardness import EqualityInstance, check_reduction, gen_equality_trace
from .monitor import Universe, canonical_text, sat_initial, sat_step, symbols_of
from .oracle import (
    RF_BOUND,
    SWAP_BOUND,
    BoundExceeded,
    enum_block_class,
    enum_maz_class,
    enum_rf_class,
)
from .orders import block_hb, mazurkiewicz_hb
from .trace import READ, WRITE, Label, Run, TraceError, parse_run

EXIT_OK = 0
EXIT_NO = 1
EXIT_USAGE = 2
EXIT_BOUND = 3

FORMATS = ("text", "dot", "json-lines")


@dataclass(frozen=True)
class Config:
    """Shared command configuration.

    ``swap_bound`` caps the run length for swap-closure enumerations,
    ``rf_bound`` for the reads-from interleaving search.  ``seed``
    breaks ties whenever a command samples among equally valid outputs
    (currently: which members ``enumerate --limit`` prints when the
    class is larger than the limit).  ``fmt`` selects the output format;
    each command accepts the subset that makes sense for it.
    """

    swap_bound: int = SWAP_BOUND
    rf_bound: int = RF_BOUND
    seed: int = 0
    fmt: str = "text"

    def __post_init__(self):
        if self.swap_bound <= 0 or self.rf_bound <= 0:
            raise ValueError("enumeration bounds must be positive")
        if self.fmt not in FORMATS:
            raise ValueError("format must be one of %s" % (", ".join(FORMATS)))


def _fail(message: str) -> int:
    print("error: %s" % message, file=sys.stderr)
    return EXIT_USAGE


def _warn(message: str) -> None:
    print("warning: %s" % message, file=sys.stderr)


def _load(path: str) -> Run:
    return parse_run(Path(path).read_text(encoding="utf-8"))


def _blocks_for(run: Run, selector: str | None) -> BlockSet:
    """Blocks from an explicit selector, else from the trace's own
    marks, else the empty block set."""
    if selector is not None:
        return parse_block_selector(run, selector)
    if any(run.annotations):
        return blocks_from_annotation(run)
    return BlockSet(run, ())


def _require_format(cfg: Config, command: str, supported: tuple[str, ...]) -> int | None:
    if cfg.fmt not in supported:
        return _fail("format %r is not supported by %r" % (cfg.fmt, command))
    return None


def _label_text(run: Run, pos: int) -> str:
    text = str(run.labels[pos])
    if run.annotations[pos]:
        text += " @"
    return text


# ---- validate --------------------------------------------------------------

def cmd_validate(args, cfg: Config) -> int:
    bad = _require_format(cfg, "validate", ("text",))
    if bad is not None:
        return bad
    try:
        run = _load(args.trace)
    except TraceError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_NO
    print(
        "ok: %d events, %d threads, %d variables"
        % (len(run), len(run.threads), len(run.variables))
    )
    if any(run.annotations):
        if not is_well_annotated(run):
            print("error: marks do not form valid blocks", file=sys.stderr)
            return EXIT_NO
        print("annotations: well-formed")
    return EXIT_OK


# ---- hb / bhb --------------------------------------------------------------

def _dot_order(name: str, run: Run, pairs) -> str:
    lines = ["digraph %s {" % name]
    for i in range(len(run)):
        lines.append('  e%d [label="%s"];' % (i + 1, _label_text(run, i)))
    for e, f in pairs:
        lines.append("  e%d -> e%d;" % (run.position(e) + 1, run.position(f) + 1))
    lines.append("}")
    return "\n".join(lines) + "\n"


def _emit_order(name: str, run: Run, order, cfg: Config) -> int:
    pairs = order.covering_pairs()
    if cfg.fmt == "dot":
        sys.stdout.write(_dot_order(name, run, pairs))
    else:
        for e, f in pairs:
            print("e%d -> e%d" % (run.position(e) + 1, run.position(f) + 1))
    return EXIT_OK


def cmd_hb(args, cfg: Config) -> int:
    bad = _require_format(cfg, "hb", ("text", "dot"))
    if bad is not None:
        return bad
    run = _load(args.trace)
    return _emit_order("hb", run, mazurkiewicz_hb(run), cfg)


def cmd_bhb(args, cfg: Config) -> int:
    bad = _require_format(cfg, "bhb", ("text", "dot"))
    if bad is not None:
        return bad
    run = _load(args.trace)
    blocks = _blocks_for(run, args.blocks)
    return _emit_order("bhb", run, block_hb(run, blocks), cfg)


# ---- atomicity -------------------------------------------------------------

def _dot_block_graph(run: Run, blocks: BlockSet) -> str:
    g = block_graph(run, blocks)
    lines = ["digraph blocks {"]
    for i, node in enumerate(g.nodes):
        text = "; ".join(_label_text(run, run.position(e)) for e in node)
        lines.append('  n%d [label="%s"];' % (i, text))
    for i, j in sorted(g.edges):
        lines.append("  n%d -> n%d;" % (i, j))
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_atomicity(args, cfg: Config) -> int:
    bad = _require_format(cfg, "atomicity", ("text", "dot"))
    if bad is not None:
        return bad
    run = _load(args.trace)
    blocks = _blocks_for(run, args.blocks)
    atomic = is_liberally_atomic(run, blocks)
    if cfg.fmt == "dot":
        sys.stdout.write(_dot_block_graph(run, blocks))
        return EXIT_OK if atomic else EXIT_NO
    print("liberally-atomic: %s" % ("yes" if atomic else "no"))
    print(
        "conflict-serializable: %s"
        % ("yes" if is_conflict_serializable(run, blocks) else "no")
    )
    if args.witness:
        if atomic:
            print("witness:")
            sys.stdout.write(serial_witness(run, blocks).to_text())
        else:
            _warn("not liberally atomic; no serial witness exists")
    return EXIT_OK if atomic else EXIT_NO


# ---- concurrent ------------------------------------------------------------

def _parse_symbol(text: str) -> tuple[Label, bool]:
    parts = text.split()
    marked = False
    if parts and parts[-1] == "@":
        marked = True
        parts = parts[:-1]
    if len(parts) != 3:
        raise TraceError("expected '<thread> <r|w> <variable> [@]', got %r" % text)
    thread, op, var = parts
    if op not in (READ, WRITE):
        raise TraceError("unknown op %r (expected 'r' or 'w')" % op)
    return Label(thread, op, var), marked


def cmd_concurrent(args, cfg: Config) -> int:
    bad = _require_format(cfg, "concurrent", ("text",))
    if bad is not None:
        return bad
    run = _load(args.trace)
    if args.mode == GIVEN_BLOCKS and args.blocks is not None:
        run = annotate(run.core(), parse_block_selector(run.core(), args.blocks))

    if args.events is not None:
        if args.c is not None or args.d is not None:
            return _fail("--events replaces --c/--d; give one or the other")
        i, j = args.events
        if not (1 <= i <= len(run) and 1 <= j <= len(run)):
            return _fail("event positions must lie in 1..%d" % len(run))
        if i == j:
            return _fail("need two distinct event positions")
        concurrent = conc_events(run, run.event_at(i - 1), run.event_at(j - 1), args.mode)
    else:
        if args.c is None or args.d is None:
            return _fail("give both --c and --d (or --events)")
        c, c_marked = _parse_symbol(args.c)
        d, d_marked = _parse_symbol(args.d)
        if args.mode == MAZURKIEWICZ:
            if c_marked or d_marked:
                _warn("marks on query symbols are ignored outside blocks mode")
            concurrent = conc_symbols_maz(run, c, d)
        elif args.mode == GIVEN_BLOCKS:
            cq = (c, True) if c_marked else c
            dq = (d, True) if d_marked else d
            concurrent = conc_symbols_blocks(run, cq, dq)
        else:
            if c_marked or d_marked:
                _warn("marks on query symbols are ignored outside blocks mode")
            if args.strategy == "stream":
                _warn("streaming search may report concurrent where exact enumeration would not")
            concurrent = conc_symbols_general(run, c, d, strategy=args.strategy)

    print("concurrent: %s" % ("yes" if concurrent else "no"))
    return EXIT_OK if concurrent else EXIT_NO


# ---- enumerate -------------------------------------------------------------

def cmd_enumerate(args, cfg: Config) -> int:
    bad = _require_format(cfg, "enumerate", ("text",))
    if bad is not None:
        return bad
    run = _load(args.trace)
    if args.relation == "maz":
        cls = enum_maz_class(run, bound=cfg.swap_bound)
    elif args.relation == "blocks":
        cls = enum_block_class(run, _blocks_for(run, args.blocks), bound=cfg.swap_bound)
    else:
        cls = enum_rf_class(run, bound=cfg.rf_bound)
    print("members: %d" % len(cls.members))
    if args.limit:
        members = sorted(cls.members)
        if len(members) > args.limit:
            if cfg.seed:
                members = sorted(random.Random(cfg.seed).sample(members, args.limit))
            else:
                members = members[: args.limit]
        for labs in members:
            print("member: " + "; ".join(str(l) for l in labs))
    return EXIT_OK


# ---- annotate --------------------------------------------------------------

def cmd_annotate(args, cfg: Config) -> int:
    bad = _require_format(cfg, "annotate", ("text",))
    if bad is not None:
        return bad
    run = _load(args.trace)
    if args.blocks is not None:
        selector = args.blocks
    elif any(run.annotations):
        selector = None  # keep the trace's own blocks
    else:
        selector = "all"
    core = run.core()
    blocks = blocks_from_annotation(run) if selector is None else parse_block_selector(core, selector)
    sys.stdout.write(annotate(core, blocks).to_text())
    return EXIT_OK


# ---- sat (streaming-state dumps) -------------------------------------------

def _dump_state(count: int, state, cfg: Config) -> None:
    text = canonical_text(state)
    if cfg.fmt == "json-lines":
        print(json.dumps({"events": count, "state": text}, sort_keys=True))
    else:
        print("-- after %d events --" % count)
        sys.stdout.write(text)


def cmd_sat(args, cfg: Config) -> int:
    bad = _require_format(cfg, "sat", ("text", "json-lines"))
    if bad is not None:
        return bad
    if args.dump_state_every is not None and args.dump_state_every <= 0:
        return _fail("--dump-state-every needs a positive count")
    run = _load(args.trace)
    aw = annotate(run.core(), _blocks_for(run, args.blocks))
    universe = Universe.from_run(aw)
    state = sat_initial(universe)
    every = args.dump_state_every
    dumped_last = False
    for count, sym in enumerate(symbols_of(aw), start=1):
        state = sat_step(state, sym)
        dumped_last = every is not None and count % every == 0
        if dumped_last:
            _dump_state(count, state, cfg)
    if not dumped_last:
        _dump_state(len(aw), state, cfg)
    return EXIT_OK


# ---- gen-hardness ----------------------------------------------------------

def cmd_gen_hardness(args, cfg: Config) -> int:
    bad = _require_format(cfg, "gen-hardness", ("text",))
    if bad is not None:
        return bad
    try:
        inst = EqualityInstance.from_strings(args.a, args.b)
    except ValueError as exc:
        return _fail(str(exc))
    run, theta1, theta2 = gen_equality_trace(inst)
    sys.stdout.write(run.to_text())
    print("# first marker: position %d, second marker: position %d"
          % (run.position(theta1) + 1, run.position(theta2) + 1))
    if args.check:
        if inst.n > 3:
            _warn("--check skipped: the exact class search is practical only for n <= 3")
        elif check_reduction(inst):
            print("# check: markers ordered in every equivalent run iff the strings are equal")
        else:
            print("error: reduction check failed", file=sys.stderr)
            return EXIT_NO
    return EXIT_OK


# ---- parser ----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--swap-bound", type=int, default=SWAP_BOUND, metavar="N",
                        help="max events for swap-closure enumeration (default %d)" % SWAP_BOUND)
    common.add_argument("--rf-bound", type=int, default=RF_BOUND, metavar="N",
                        help="max events for the reads-from search (default %d)" % RF_BOUND)
    common.add_argument("--seed", type=int, default=0,
                        help="tie-break seed for sampled output (default 0: no sampling)")
    common.add_argument("--format", choices=FORMATS, default="text",
                        help="output format (default text)")

    blocksel = argparse.ArgumentParser(add_help=False)
    blocksel.add_argument("--blocks", metavar="SEL",
                          help="block selector: 'all', 'none', or 'writes=i,j,k' "
                               "(1-based write positions); default: the trace's @ marks")

    p = argparse.ArgumentParser(
        prog="blockeq",
        description="Analyze concurrent read/write traces under commutativity-"
                    "based equivalences: happens-before orders, block atomicity, "
                    "causal concurrency, class enumeration.",
    )
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    sp = sub.add_parser("validate", parents=[common],
                        help="parse a trace and report basic shape (exit 1 if invalid)")
    sp.add_argument("trace")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("hb", parents=[common],
                        help="happens-before order of the trace as covering edges")
    sp.add_argument("trace")
    sp.set_defaults(func=cmd_hb)

    sp = sub.add_parser("bhb", parents=[common, blocksel],
                        help="block happens-before order (cross-thread pairs inside "
                             "two distinct blocks are exempted)")
    sp.add_argument("trace")
    sp.set_defaults(func=cmd_bhb)

    sp = sub.add_parser("atomicity", parents=[common, blocksel],
                        help="report liberal atomicity and conflict serializability "
                             "of the trace's blocks")
    sp.add_argument("trace")
    sp.add_argument("--witness", action="store_true",
                    help="also print one equivalent run with every block contiguous")
    sp.set_defaults(func=cmd_atomicity)

    sp = sub.add_parser("concurrent", parents=[common, blocksel],
                        help="decide whether two symbols or events can execute in "
                             "the other order in some equivalent run")
    sp.add_argument("trace")
    sp.add_argument("--c", metavar="SYM", help="first symbol, e.g. 'T1 r x'")
    sp.add_argument("--d", metavar="SYM", help="second symbol, e.g. 'T2 w x'")
    sp.add_argument("--events", type=int, nargs=2, metavar=("I", "J"),
                    help="query two specific events by 1-based trace position")
    sp.add_argument("--mode", choices=MODES, default=MAZURKIEWICZ,
                    help="equivalence to decide under (default maz)")
    sp.add_argument("--strategy", choices=("enumerate", "stream"), default="enumerate",
                    help="general mode only: exact enumeration or streaming "
                         "over-approximation (default enumerate)")
    sp.set_defaults(func=cmd_concurrent)

    sp = sub.add_parser("enumerate", parents=[common, blocksel],
                        help="enumerate an equivalence class by brute force")
    sp.add_argument("trace")
    sp.add_argument("--relation", choices=("maz", "blocks", "rf"), required=True)
    sp.add_argument("--limit", type=int, default=0, metavar="N",
                    help="print up to N members after the count")
    sp.set_defaults(func=cmd_enumerate)

    sp = sub.add_parser("annotate", parents=[common, blocksel],
                        help="print the trace with @ marks for the selected blocks "
                             "(default: every write starts a block)")
    sp.add_argument("trace")
    sp.set_defaults(func=cmd_annotate)

    sp = sub.add_parser("sat", parents=[common, blocksel],
                        help="stream the trace through the saturation monitor and "
                             "dump canonical state snapshots")
    sp.add_argument("trace")
    sp.add_argument("--dump-state-every", type=int, metavar="K",
                    help="snapshot after every K events (default: final state only)")
    sp.set_defaults(func=cmd_sat)

    sp = sub.add_parser("gen-hardness", parents=[common],
                        help="emit the two-thread trace whose marker events are "
                             "causally ordered in every equivalent run iff a = b")
    sp.add_argument("--a", required=True, metavar="BITS", help="first bit string, e.g. 1101")
    sp.add_argument("--b", required=True, metavar="BITS", help="second bit string")
    sp.add_argument("--check", action="store_true",
                    help="verify the ordered-iff-equal property (n <= 3 only)")
    sp.set_defaults(func=cmd_gen_hardness)

    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = Config(
            swap_bound=args.swap_bound,
            rf_bound=args.rf_bound,
            seed=args.seed,
            fmt=args.format,
        )
    except ValueError as exc:
        return _fail(str(exc))
    try:
        return args.func(args, cfg)
    except BoundExceeded as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_BOUND
    except TraceError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    sys.exit(main())
