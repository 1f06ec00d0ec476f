from importlib.resources import read_text
import argparse
import json
import logging
import sys

from pydantic import ValidationError

from relaycov.adapters.json import load_scenario_json_str
from relaycov.domain.model import GraphValidationError
from relaycov.domain.scenario import ScenarioError
from relaycov.service_layer.services import run_experiment, compare_betas

EXIT_CONFIG_ERROR = 2
LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def parse_args(argv=None):
    parser = argparse.ArgumentParser("relaycov: hybrid relay-chain and coverage planner for UAV swarms")
    parser.add_argument('-c', '--config', default=None,
                        help="Path to a scenario json file. Defaults to the bundled reference scenario.")
    parser.add_argument('-o', '--output', default="results",
                        help="Directory receiving per-run artifacts and the comparison table.")
    parser.add_argument('--seed', type=int, action='append',
                        help="Run with this seed instead of the configured ones (repeatable).")
    parser.add_argument('--beta', type=float, action='append',
                        help="Run with this beta instead of the configured ones (repeatable).")
    parser.add_argument('--k', type=int, default=None,
                        help="Visits per node required for coverage.")
    parser.add_argument('-w', '--workers', type=int, default=1,
                        help="Parallel simulation processes.")
    parser.add_argument('-v', '--verbose', action='count', default=0,
                        help="-v for progress, -vv for solver detail.")

    return parser.parse_args(argv)


def read_config_text(path):
    if path is None:
        return read_text("relaycov.scenarios", "reference.json")
    with open(path) as infile:
        return infile.read()


def report_config_error(err: Exception):
    if isinstance(err, ValidationError):
        for detail in err.errors():
            location = ".".join(str(part) for part in detail["loc"])
            print("config error at {}: {}".format(location, detail["msg"]), file=sys.stderr)
    elif getattr(err, "loc", None):
        location = ".".join(str(part) for part in err.loc)
        print("config error at {}: {}".format(location, err.message), file=sys.stderr)
    else:
        print("config error: {}".format(getattr(err, "message", err)), file=sys.stderr)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=LOG_LEVELS[min(args.verbose, len(LOG_LEVELS) - 1)],
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        config = load_scenario_json_str(read_config_text(args.config))
        config = config.with_overrides(seeds=args.seed, betas=args.beta, k=args.k)
        summaries = run_experiment(config, out_dir=args.output, workers=args.workers)
    except (ValidationError, json.JSONDecodeError, GraphValidationError, ScenarioError, OSError) as err:
        report_config_error(err)
        return EXIT_CONFIG_ERROR

    print("*** Comparison by beta (medians over seeds) ***")
    print(compare_betas(summaries).to_string())
    return 0


if __name__ == "__main__":
    sys.exit(main())
