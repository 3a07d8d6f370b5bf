import argparse
import logging
import sys
from pathlib import Path

root_dir = Path(__file__).parent
sys.path.insert(0, str(root_dir))

from api.errors import (ConfigurationError, ConnectivityError, DegenerateModelError, ProtocolError,
                        SelectivityError, StructureParseError, StructureValidationError,
                        UndefinedConditionalError)
from api.models.query import EvidenceQuery
from project_platform.core import APPROX_MPC, EXACT_MPC, INFER_MODES, LEARN_MODES, SpnPlatform
from project_platform.plugin_manager import PluginManager
from project_platform.run_config import RunConfig

log = logging.getLogger("spn_platform")

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_PROTOCOL = 4
EXIT_CONNECTIVITY = 5
EXIT_DEGENERATE = 6

# Checked in order; subclasses come before their bases.
EXIT_CODES = (
    (StructureValidationError, EXIT_VALIDATION),
    (SelectivityError, EXIT_VALIDATION),
    (StructureParseError, EXIT_VALIDATION),
    (ConfigurationError, EXIT_USAGE),
    (ProtocolError, EXIT_PROTOCOL),
    (ConnectivityError, EXIT_CONNECTIVITY),
    (UndefinedConditionalError, EXIT_DEGENERATE),
    (DegenerateModelError, EXIT_DEGENERATE),
)

# Flag dest -> RunConfig field.
CONFIG_FLAGS = {
    "prime": "prime", "scale_d": "scale_d", "precision_e": "precision_e", "rho": "rho",
    "parties": "parties", "threshold": "threshold", "transport": "transport",
    "latency_ms": "latency_ms", "seed": "seed", "structure": "structure", "data": "data",
    "out": "out", "debug_reconstruct": "debug_reconstruct", "batching": "batching",
    "alpha": "laplace_alpha", "timeout": "timeout",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration; flags override it")
    common.add_argument("--prime", type=int, help="field modulus p")
    common.add_argument("--scale-d", type=int, help="fixed-point scale d")
    common.add_argument("--precision-e", type=int, help="reciprocal precision e (power of two)")
    common.add_argument("--rho", type=int, help="mask width in bits")
    common.add_argument("--parties", type=int, help="number of members n")
    common.add_argument("--threshold", type=int, help="polynomial degree t (default (n-1)//2)")
    common.add_argument("--transport", choices=["in-process", "socket"])
    common.add_argument("--latency-ms", type=float, help="simulated one-way latency (in-process only)")
    common.add_argument("--seed", type=int, help="seed for reproducible runs")
    common.add_argument("--timeout", type=float, help="seconds without progress before aborting")
    common.add_argument("--structure", help="SPN structure file (.yaml or .json)")
    common.add_argument("--data", action="append", help="dataset partition file; repeat per member")
    common.add_argument("--out", help="output model file (oracle) or share directory (mpc)")
    common.add_argument("--debug-reconstruct", action="store_const", const=True,
                        help="open learned weights to the manager and compare with the oracle")
    common.add_argument("--batching", action="store_const", const=True,
                        help="run independent edges in shared exercises")
    common.add_argument("--alpha", type=int, help="Laplace smoothing of the oracle learner")
    common.add_argument("--format", default="table", help="report renderer for stdout")
    common.add_argument("--report", help="also write a JSON report to this path")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="spn-platform",
                                     description="Private learning and inference for sum-product networks")
    commands = parser.add_subparsers(dest="command", required=True)

    commands.add_parser("validate", parents=[common], help="check an SPN structure")

    learn = commands.add_parser("learn", parents=[common], help="learn sum-edge weights")
    learn.add_argument("--mode", choices=LEARN_MODES, default="oracle")

    infer = commands.add_parser("infer", parents=[common], help="compute Pr(x | e)")
    infer.add_argument("--mode", choices=INFER_MODES, default="mpc")
    infer.add_argument("--model", required=True, help="plaintext model file or share directory")
    infer.add_argument("--query", required=True, help="assignment such as X1=1,X2=0")
    infer.add_argument("--evidence", help="evidence assignment, empty for a marginal")

    bench = commands.add_parser("bench", parents=[common], help="traffic per party count")
    bench.add_argument("--mode", choices=[EXACT_MPC, APPROX_MPC], default=EXACT_MPC)
    bench.add_argument("--party-counts", type=int, nargs="+", default=[3, 5])
    return parser


def configure_logging(args):
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def run_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    return config.merged({field: getattr(args, dest) for dest, field in CONFIG_FLAGS.items()}, source="flags")


def run(args) -> int:
    platform = SpnPlatform(run_config(args))
    if args.command == "validate":
        result = platform.validate()
    elif args.command == "learn":
        result = platform.learn(args.mode)
    elif args.command == "infer":
        result = platform.infer(EvidenceQuery.parse(args.query, args.evidence), args.model, args.mode)
    else:
        result = platform.bench(args.party_counts, args.mode)

    plugins = PluginManager()
    print(plugins.instantiate_renderer(args.format).render(result.report))
    if args.report:
        with open(args.report, 'w', encoding='utf-8') as f:
            f.write(plugins.instantiate_renderer("json").render(result.report))
    for path in result.files:
        log.info("Wrote %s", path)

    if args.command == "validate" and result.report["rows"]:
        return EXIT_VALIDATION
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args)
    try:
        return run(args)
    except Exception as e:
        for error_type, code in EXIT_CODES:
            if isinstance(e, error_type):
                log.error("%s", e)
                return code
        log.exception("Unexpected error")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
