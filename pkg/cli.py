#!/usr/bin/env python3
"""
Command-line front end.

    python cli.py certify --spec problem.json
    python cli.py zeros --spec problem.json --delta 1/100
    python cli.py membership --spec problem.json
    python cli.py perturb --spec family.json --epsilon "1/2**(order+1)" --rounds 3 --out run.json

Exit codes: 0 success or true, 1 refuted or false, 2 budget exhausted or
undecided, 3 input error. Numbers in the output are exact "p/q" strings.
"""
import argparse
import json
import logging
import os
import sys
from typing import Callable, Dict, Optional, Sequence

from dotenv import load_dotenv

from budget import DEFAULT_BUDGET, DEFAULT_PRECISION, Budget, BudgetExhausted, get_budget_from_env
from family import EpsilonMap, FamilyEvaluator, Undecided, load_family_spec
from genericity import (
    MembershipProblem,
    SPolyName,
    ZeroLedger,
    check_ledger,
    find_nonsingular_zeros,
    make_generic,
    membership_ideal,
)
from holo import HoloEvaluator, cauchy_derivative
from ifcert import NotCertified, certificate_to_json
from polyalg import MultiPoly
from utils import interval_to_json, parse_frac, parse_fracs

load_dotenv()
logger = logging.getLogger("quasigen.cli")

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_UNDECIDED = 2
EXIT_INPUT = 3


class InputError(ValueError):
    """Raised for malformed command input."""
    pass


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from e


def _problem(doc: dict) -> dict:
    if "problem" not in doc:
        raise InputError("the spec document has no \"problem\" object")
    return doc["problem"]


def _budget(args: argparse.Namespace) -> Budget:
    if args.budget is not None:
        if args.budget <= 0:
            raise InputError("--budget must be positive")
        return Budget(args.budget, name=args.command)
    return get_budget_from_env("QUASIGEN_DEFAULT", DEFAULT_BUDGET, name=args.command)


def _precision(args: argparse.Namespace) -> int:
    precision = DEFAULT_PRECISION if args.precision is None else args.precision
    if precision <= 0:
        raise InputError("--precision must be positive")
    return precision


def _verdict(value) -> tuple:
    if isinstance(value, Undecided):
        return EXIT_UNDECIDED, {"verdict": "undecided", "reason": value.reason, "budget": value.budget}
    return (EXIT_OK if value else EXIT_REFUTED), {"verdict": bool(value)}


def cmd_certify(args: argparse.Namespace, doc: dict) -> tuple:
    fam = FamilyEvaluator(load_family_spec(doc["family"]))
    prob = MembershipProblem.from_json(_problem(doc))
    outcome = prob.certify(fam, _budget(args), _precision(args))
    if isinstance(outcome, NotCertified):
        code = EXIT_REFUTED if outcome.reason == "refuted" else EXIT_UNDECIDED
        return code, {"certified": False, "reason": outcome.reason, "detail": outcome.detail}
    body = {"certified": True}
    if hasattr(outcome, "cert"):
        body["certificate"] = certificate_to_json(outcome.cert)
    return EXIT_OK, body


def cmd_zeros(args: argparse.Namespace, doc: dict) -> tuple:
    fam = FamilyEvaluator(load_family_spec(doc["family"]))
    name_doc = dict(_problem(doc)["name"])
    name_doc.setdefault("d", 0)
    name = SPolyName.from_json(name_doc).check(fam.spec)
    delta = parse_frac(args.delta)
    zeros = find_nonsingular_zeros(name, fam, delta, _budget(args), _precision(args))
    return EXIT_OK, {"delta": args.delta, "zeros": [z.to_json() for z in zeros]}


def cmd_membership(args: argparse.Namespace, doc: dict) -> tuple:
    fam = FamilyEvaluator(load_family_spec(doc["family"]))
    problem = _problem(doc)
    prob = MembershipProblem.from_json(problem)
    nvars = prob.name.m + prob.name.n
    if args.command == "precision":
        if "coordinate" not in problem:
            raise InputError("the precision command needs problem.coordinate")
        q = MultiPoly.variable(nvars, int(problem["coordinate"]))
    else:
        if "query" not in problem:
            raise InputError("the membership command needs problem.query")
        q = MultiPoly.from_json(problem["query"], nvars)
    found = membership_ideal(prob, fam, _budget(args), _precision(args), args.seed)
    if isinstance(found, Undecided):
        return _verdict(found)
    code, body = _verdict(found.contains(q))
    body["ideal"] = found.to_json()
    return code, body


def cmd_perturb(args: argparse.Namespace, doc: dict) -> tuple:
    fam = FamilyEvaluator(load_family_spec(doc["family"]))
    eps = EpsilonMap.parse(args.epsilon)
    if args.rounds < 0:
        raise InputError("--rounds must be nonnegative")
    final, ledger = make_generic(fam, eps, args.rounds, _budget(args), _precision(args), args.seed)
    return EXIT_OK, {"family": final.spec.to_json(), "ledger": ledger.to_json()}


def cmd_check_ledger(args: argparse.Namespace, doc: dict) -> tuple:
    fam = FamilyEvaluator(load_family_spec(doc["family"]))
    if args.ledger:
        ledger_doc = _load_json(args.ledger)
        ledger_doc = ledger_doc.get("ledger", ledger_doc)
    elif "ledger" in doc:
        ledger_doc = doc["ledger"]
    else:
        raise InputError("no ledger given (--ledger or a \"ledger\" object in the spec)")
    ledger = ZeroLedger.from_json(ledger_doc)
    up_to = args.rounds if args.rounds is not None else len(ledger.rounds)
    report = check_ledger(ledger, fam, up_to, _budget(args), _precision(args))
    return (EXIT_OK if report.passed else EXIT_REFUTED), report.to_json()


def cmd_derivative(args: argparse.Namespace, doc: dict) -> tuple:
    fam = HoloEvaluator(load_family_spec(doc["family"]))
    problem = _problem(doc)
    try:
        sigma = str(problem["sigma"])
        alpha = tuple(int(a) for a in problem["alpha"])
        point = parse_fracs(problem["point"])
    except KeyError as e:
        raise InputError(f"the derivative command needs problem.{e.args[0]}") from e
    enclosure = cauchy_derivative(fam, sigma, alpha, point, precision=_precision(args))
    return EXIT_OK, {"sigma": sigma, "alpha": list(alpha), "enclosure": interval_to_json(enclosure)}


COMMANDS: Dict[str, Callable[[argparse.Namespace, dict], tuple]] = {
    "certify": cmd_certify,
    "zeros": cmd_zeros,
    "membership": cmd_membership,
    "precision": cmd_membership,
    "perturb": cmd_perturb,
    "check-ledger": cmd_check_ledger,
    "derivative": cmd_derivative,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasigen", description="Certified computations with generic function families")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--spec", required=True, help="JSON document with \"family\" and an optional \"problem\"")
    parser.add_argument("--budget", type=int, default=None, help="step budget (default QUASIGEN_DEFAULT_BUDGET)")
    parser.add_argument("--precision", type=int, default=None, help="precision index (default QUASIGEN_DEFAULT_PRECISION)")
    parser.add_argument("--delta", default="1/100", help="zero margin δ as p/q")
    parser.add_argument("--epsilon", default="1", help="ε as an expression in `order`")
    parser.add_argument("--rounds", type=int, default=None, help="perturbation rounds / inequations checked")
    parser.add_argument("--seed", type=int, default=0, help="seed of the deterministic retry sequences")
    parser.add_argument("--ledger", default=None, help="ledger JSON for check-ledger")
    parser.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    return parser


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else os.getenv("QUASIGEN_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    if args.command == "perturb" and args.rounds is None:
        args.rounds = 0
    try:
        doc = _load_json(args.spec)
        if "family" not in doc:
            raise InputError("the spec document has no \"family\" object")
        code, body = COMMANDS[args.command](args, doc)
    except BudgetExhausted as e:
        print(f"quasigen: {e}", file=sys.stderr)
        return EXIT_UNDECIDED
    except (ValueError, KeyError) as e:
        print(f"quasigen: {e}", file=sys.stderr)
        return EXIT_INPUT
    text = json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    logger.info("%s finished with exit code %d", args.command, code)
    return code


if __name__ == "__main__":
    sys.exit(main())
