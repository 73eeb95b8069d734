"""gss design-search: pick the candidate graph minimizing a design measure"""

import argparse
from pathlib import Path

from gss.cli.simulate import write_report
from gss.models.schemas import MeasureKind, PopulationSpec, TauSpec
from gss.services.builtin_graphs import parse_grid
from gss.services.sim_harness import run_design_search
from gss.services.storage import LocalStorage


def register(subparsers) -> None:
    parser = subparsers.add_parser("design-search", help="search 2-regular graphs for the best design measure")
    parser.add_argument("--grid", default="3x3", help="rook-contiguous grid RxC (default: %(default)s)")
    parser.add_argument("--measure", choices=[m.value for m in MeasureKind], default=MeasureKind.XI.value)
    parser.add_argument("--n", type=int, default=3, help="EpSSWoR sample size")
    parser.add_argument("--population", default=None, help="JSON population spec (needed for re/essb)")
    parser.add_argument("--family", choices=["auto", "noncontiguous", "recursive"], default="auto")
    parser.add_argument("--parts-per-side", type=int, default=4, help="recursive family partition")
    parser.add_argument("--budget", type=int, default=None, help="maximum candidates evaluated")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--graph-out", default="best_graph.txt", help="edge list of the winner")
    parser.add_argument("--out", default=None, help="CSV report; stdout when omitted")
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> None:
    population = None
    if args.population:
        text = Path(args.population).read_text() if Path(args.population).is_file() else args.population
        population = PopulationSpec.model_validate_json(text)
    tau = TauSpec(measure=MeasureKind(args.measure), n=args.n, population=population)
    result, report = run_design_search(
        parse_grid(args.grid),
        tau,
        budget=args.budget,
        seed=args.seed,
        family=args.family,
        parts_per_side=args.parts_per_side,
        threads=args.threads,
    )
    LocalStorage().save_graph(result.graph, args.graph_out)
    write_report(report, args.out)
