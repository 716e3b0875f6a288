"""Command-line front end.

    digieco {pan,handover,gossip,sweep} --scenario FILE [--out FILE]
            [--seed N] [--trials N] [--quiet]

Every CSV starts with a ``#`` comment line recording the tool version, the
master seed and the subcommand, followed by a header row. Without ``--out``
the CSV goes to ``$DIGIECO_OUT_DIR/<subcommand>.csv`` when that variable is
set, else to stdout.

Exit codes: 0 success, 1 usage or scenario error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .gossip import SWEEP_CSV_HEADER, run_trials, sweep
from .netselect import HANDOVER_CSV_HEADER, simulate_handover
from .pan import configure
from .scenario import Scenario, ScenarioError, load_scenario
from .simcore import derive_stream

log = logging.getLogger("digieco")

EXIT_OK = 0
EXIT_SCENARIO = 1
EXIT_RUNTIME = 2

OUT_DIR_ENV = "DIGIECO_OUT_DIR"

PAN_CSV_HEADER = ["uid", "record", "subject", "peer", "detail"]
GOSSIP_CSV_HEADER = ["trial", "origin", "coverage", "mean_hops", "duplicates", "transmissions"]


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCENARIO, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="digieco", description="Digital ecosystem simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{pan,handover,gossip,sweep}", parser_class=_Parser)
    sub.required = True
    helps = {
        "pan": "configure each organism's PAN and elect coordinator/gateway",
        "handover": "simulate interface selection and handovers",
        "gossip": "run repeated disseminations on one overlay",
        "sweep": "parameter sweep over fresh overlays",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", help="output CSV path ('-' for stdout)")
        p.add_argument("--seed", type=_u64, help="override the scenario master seed")
        p.add_argument("--trials", type=_positive, help="override the scenario trial count")
        p.add_argument("--quiet", action="store_true", help="no summary line")
    return parser


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _num(x: float) -> str:
    return repr(float(x))


def pan_rows(scenario: Scenario) -> tuple[list[list[str]], str]:
    if not scenario.organisms:
        raise ScenarioError("E_MISSING", "pan needs at least one organism", key="organisms")
    rows = []
    summary = []
    for uid, devices in scenario.organisms.items():
        org = configure(devices, scenario.weights)
        for e in org.edges:
            rows.append([uid, "edge", e.a, e.b, e.tech.value])
        for i, comp in enumerate(org.components):
            rows.append([uid, "component", str(i), "", " ".join(comp.members)])
            rows.append([uid, "coordinator", comp.coordinator, "", f"component={i}"])
            rows.append([uid, "gateway", comp.gateway or "", "", f"component={i}"])
        for w in org.warnings:
            rows.append([uid, "warning", w.code, "", w.message])
        summary.append(f"{uid}: coordinator={org.coordinator} gateway={org.gateway or '-'}"
                       f" components={len(org.components)}")
    return rows, "; ".join(summary)


def handover_rows(scenario: Scenario) -> tuple[list[list[str]], str]:
    h = scenario.handover
    if h is None:
        raise ScenarioError("E_MISSING", "handover needs a 'handover' section", key="handover")
    trace = simulate_handover(h.interfaces, h.duration, h.period, scenario.weights, h.penalty_ms, h.battery)
    summary = f"packets={len(trace.packets)} handovers={len(trace.handovers)} drops={trace.drops}"
    return trace.csv_rows(), summary


def gossip_rows(scenario: Scenario) -> tuple[list[list[str]], str]:
    if scenario.overlay is None or scenario.gossip is None:
        raise ScenarioError("E_MISSING", "gossip needs 'overlay' and 'gossip' sections", key="gossip")
    if scenario.gossip_origin is not None and scenario.gossip_origin >= scenario.overlay.n:
        raise ScenarioError("E_RANGE", "origin outside the overlay", key="gossip.origin")
    g = scenario.overlay.build(derive_stream(scenario.seed, 0))
    results = run_trials(g, scenario.gossip, scenario.trials, scenario.seed,
                         origin=scenario.gossip_origin, stream_base=1)
    rows = [[str(t), str(m.origin), _num(m.coverage), _num(m.mean_hops), str(m.duplicates), str(m.transmissions)]
            for t, m in enumerate(results)]
    mean_cov = sum(m.coverage for m in results) / len(results)
    return rows, f"trials={len(results)} mean_coverage={mean_cov:.4f}"


def sweep_rows(scenario: Scenario) -> tuple[list[list[str]], str]:
    s = scenario.sweep
    if scenario.overlay is None or s is None:
        raise ScenarioError("E_MISSING", "sweep needs 'overlay' and 'sweep' sections", key="sweep")
    table = sweep(scenario.overlay, s.protocol, s.values, s.ttls, s.caches,
                  scenario.trials, scenario.seed, workers=s.workers)
    failed = sum(1 for r in table if r.error)
    return [r.csv_row() for r in table], f"cells={len(table)} failed={failed} trials={scenario.trials}"


COMMANDS = {
    "pan": (PAN_CSV_HEADER, pan_rows),
    "handover": (HANDOVER_CSV_HEADER, handover_rows),
    "gossip": (GOSSIP_CSV_HEADER, gossip_rows),
    "sweep": (SWEEP_CSV_HEADER, sweep_rows),
}


def render_csv(command: str, seed: int, header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    buf.write(f"# digieco {__version__} seed={seed} command={command}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def run(command: str, scenario: Scenario, out: str | None, quiet: bool = False) -> int:
    header, producer = COMMANDS[command]
    try:
        rows, summary = producer(scenario)
    except ScenarioError as exc:
        print(f"digieco: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    except Exception as exc:
        print(f"digieco: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    text = render_csv(command, scenario.seed, header, rows)

    if out is None and os.environ.get(OUT_DIR_ENV):
        out = str(Path(os.environ[OUT_DIR_ENV]) / f"{command}.csv")
    to_stdout = out is None or out == "-"
    if to_stdout:
        sys.stdout.write(text)
    else:
        try:
            with open(out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"digieco: cannot write {out}: {exc.strerror}", file=sys.stderr)
            return EXIT_RUNTIME
    if not quiet:
        print(f"{command}: {summary} seed={scenario.seed}", file=sys.stderr if to_stdout else sys.stdout)
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"digieco: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.trials is not None:
        scenario = replace(scenario, trials=args.trials)
    log.info("master seed %d", scenario.seed)
    return run(args.command, scenario, args.out, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
