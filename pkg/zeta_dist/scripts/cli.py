#!/usr/bin/env python3
"""
zeta-dist command line

Evaluates Euler products, classifies their normalized functions, enumerates
Levy measures, searches for witnesses and samples compound Poisson laws.

Usage:
    # Euler product and its log at s = 2
    zeta-dist eval --catalog riemann --sigma 2

    # Classification with evidence
    zeta-dist classify --catalog L1 --sigma 2

    # Witness search (exit 1 when none is found within the budget)
    zeta-dist witness --catalog md_iv --sigma 2,0.5 --budget 1000000

    # Samples as CSV plus a JSON sidecar
    zeta-dist sample --catalog riemann --sigma 2 --seed 7 --n 100000 --out x.csv

Exit codes: 0 success, 1 no witness found, 2 invalid input or domain error.

Part of: zeta-dist
"""

import argparse
import csv
import itertools
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from zeta_dist import catalog, classify as classify_mod, levy, product, sampler, witness
from zeta_dist.config import Settings, load_settings, settings_to_dict
from zeta_dist.errors import DomainError, SpecValidationError, ZetaDistError
from zeta_dist.product import EvalPoint, ProductSpec, TruncationPolicy
from zeta_dist.scripts.run_log import log_run
from zeta_dist.spec_io import dump_spec, load_spec, spec_to_dict

logger = logging.getLogger("zeta_dist.cli")

EXIT_OK = 0
EXIT_NO_WITNESS = 1
EXIT_INVALID = 2


@dataclass
class RunConfig:
    """Everything a run depends on; embedded in every JSON output."""

    command: str
    spec: Optional[str] = None
    catalog: Optional[str] = None
    params: Dict[str, str] = field(default_factory=dict)
    sigma: Optional[List[float]] = None
    t: List[List[float]] = field(default_factory=list)
    policy: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    n: int = 1000
    budget: int = 10**6
    strategy: str = "direct"
    out: Optional[str] = None
    threads: int = 1
    settings: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def parse_vector(text: str, what: str) -> List[float]:
    """Comma-separated decimals."""
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise SpecValidationError(
            [{"field": what, "message": f"cannot parse {text!r} as numbers",
              "recommendation": "Use comma-separated decimals, e.g. 2,0.5"}]
        )


def parse_params(items: Sequence[str]) -> Dict[str, str]:
    params: Dict[str, str] = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise SpecValidationError(
                [{"field": "--param", "message": f"expected key=value, got {item!r}",
                  "recommendation": "Use e.g. --param alpha=1/3"}]
            )
        params[key.strip()] = value.strip()
    return params


def _complex(z: complex) -> Dict[str, float]:
    return {"re": z.real, "im": z.imag}


def _json(data: Any) -> str:
    return json.dumps(data, indent=2, allow_nan=False)


class Runner:
    """Resolves the inputs of one invocation and runs its subcommand."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.args = args
        self.settings = self._settings()
        self.entry: Optional[catalog.CatalogEntry] = None
        self.spec: Optional[ProductSpec] = None
        self.sigma: Optional[List[float]] = None
        self.config = RunConfig(command=args.command)

    def _settings(self) -> Settings:
        args = self.args
        base = load_settings(getattr(args, "config", None))
        return base.with_overrides(
            prime_limit=getattr(args, "prime_limit", None),
            power_limit=getattr(args, "power_limit", None),
            tail_tol=getattr(args, "tol", None),
        )

    @property
    def policy(self) -> TruncationPolicy:
        return TruncationPolicy.from_settings(self.settings)

    def load(self) -> None:
        """Resolve spec source, sigma and t; validate their dimensions."""
        args = self.args
        params = parse_params(args.param or [])
        if args.catalog:
            self.entry = catalog.get(args.catalog, **params)
            self.spec = self.entry.spec
        elif args.spec:
            if params:
                raise SpecValidationError(
                    [{"field": "--param", "message": "--param only applies to --catalog",
                      "recommendation": "Drop --param or use --catalog"}]
                )
            self.spec = load_spec(Path(args.spec))
        product.validate(self.spec)

        if args.sigma is not None:
            self.sigma = parse_vector(args.sigma, "--sigma")
        elif self.entry is not None:
            self.sigma = list(self.entry.default_sigma)
        else:
            raise SpecValidationError(
                [{"field": "--sigma", "message": "sigma is required with --spec",
                  "recommendation": "Pass --sigma, e.g. --sigma 2"}]
            )
        if len(self.sigma) != self.spec.d:
            raise DomainError(
                f"sigma has {len(self.sigma)} components, spec has d = {self.spec.d}",
                {"sigma": self.sigma, "d": self.spec.d},
            )

        self.config = RunConfig(
            command=args.command,
            spec=args.spec,
            catalog=args.catalog,
            params=params,
            sigma=self.sigma,
            t=self.t_points(),
            policy=self.policy.to_dict(),
            seed=getattr(args, "seed", 0),
            n=getattr(args, "n", 1000),
            budget=getattr(args, "budget", 10**6),
            strategy=getattr(args, "strategy", "direct"),
            out=args.out,
            threads=args.threads,
            settings=settings_to_dict(self.settings),
        )

    def t_points(self) -> List[List[float]]:
        """Each --t is one vector; with d = 1 a comma list is a list of points."""
        assert self.spec is not None
        raw = getattr(self.args, "t", None) or []
        points: List[List[float]] = []
        for text in raw:
            values = parse_vector(text, "--t")
            if self.spec.d == 1:
                points.extend([x] for x in values)
            elif len(values) == self.spec.d:
                points.append(values)
            else:
                raise DomainError(
                    f"t has {len(values)} components, spec has d = {self.spec.d}",
                    {"t": values, "d": self.spec.d},
                )
        return points or [[0.0] * self.spec.d]

    # -- subcommands ---------------------------------------------------------

    def cmd_eval(self) -> Tuple[int, Dict[str, Any]]:
        points = []
        for t in self.config.t:
            point = EvalPoint(tuple(self.sigma), tuple(t))
            log_value, tail = product.eval_log(self.spec, point, self.policy)
            value = product.eval(self.spec, point, self.policy)
            points.append(
                {"t": t, "value": _complex(value), "log": _complex(log_value), "tail": tail}
            )
        result = points[0] if len(points) == 1 else {"points": points}
        return EXIT_OK, result

    def cmd_cf(self) -> Tuple[int, Dict[str, Any]]:
        v = product.convergence_margin(self.spec, self.sigma)
        resolved = self.policy.resolved(v, self.spec.m, self.settings)
        error = 2.0 * product.tail_bound(resolved, v, self.spec.m)
        rows = []
        for t in self.config.t:
            f = product.normalized_cf(self.spec, self.sigma, t, self.policy)
            rows.append({"t": t, "re": f.real, "im": f.imag, "log_error": error})
        if self.args.out:
            path = Path(self.args.out)
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                writer.writerow([f"t_{j + 1}" for j in range(self.spec.d)] + ["re", "im"])
                for row in rows:
                    writer.writerow([repr(x) for x in row["t"]] + [repr(row["re"]), repr(row["im"])])
            return EXIT_OK, {"points": len(rows), "csv": str(path), "log_error": error}
        return EXIT_OK, (rows[0] if len(rows) == 1 else {"points": rows})

    def cmd_classify(self) -> Tuple[int, Dict[str, Any]]:
        if self.args.resolve:
            result = classify_mod.resolve(self.spec, self.sigma, self.policy, self.settings)
        else:
            result = classify_mod.classify(self.spec, self.sigma, settings=self.settings)
            if result.verdict is classify_mod.Verdict.OUT_OF_THEOREM_SCOPE:
                result.certification = classify_mod.certify_by_atoms(
                    self.spec, self.sigma, self.policy, self.settings
                )
        out = result.to_dict()
        if self.entry is not None:
            out["expected_classification"] = self.entry.expected_classification.value
        return EXIT_OK, out

    def _measure(self) -> levy.LevyMeasure:
        return levy.enumerate_atoms(
            self.spec, self.sigma, self.policy, self.settings, threads=self.args.threads
        )

    def cmd_levy(self) -> Tuple[int, Dict[str, Any]]:
        measure = self._measure()
        v = product.convergence_margin(self.spec, self.sigma)
        out = measure.summary()
        out["nonnegative"] = measure.is_nonnegative
        out["mass_upper_bound"] = levy.mass_upper_bound(v, self.spec.m)
        if self.args.out:
            sidecar = levy.export_atoms(measure, Path(self.args.out))
            out["csv"] = self.args.out
            out["sidecar"] = str(sidecar)
        return EXIT_OK, out

    def cmd_witness(self) -> Tuple[int, Dict[str, Any]]:
        strategy = witness.SearchStrategy(self.args.strategy)
        result = witness.search(
            self.spec, self.sigma, strategy, self.args.budget, self.policy, self.settings,
            threads=self.args.threads,
        )
        out = result.to_dict()
        if result.witness is None:
            return EXIT_NO_WITNESS, out
        finer = witness.doubled_policy(self.spec, self.sigma, result.witness.policy)
        again = witness.recertify(result.witness, self.spec, self.sigma, finer)
        out["recertified"] = {
            "policy": finer.to_dict(),
            "D": again.D_value,
            "certified_margin": again.certified_margin,
        }
        return EXIT_OK, out

    def cmd_sample(self) -> Tuple[int, Dict[str, Any]]:
        measure = self._measure()
        batch = sampler.sample(
            measure, self.args.seed, self.args.n, self.settings, threads=self.args.threads,
            provenance={"catalog": self.args.catalog, "spec_file": self.args.spec},
        )
        out = batch.metadata()
        out["mean"] = batch.values.mean(axis=0).tolist()
        if self.args.out:
            sidecar = sampler.export_samples(batch, Path(self.args.out))
            out["csv"] = self.args.out
            out["sidecar"] = str(sidecar)
        return EXIT_OK, out

    def cmd_moments(self) -> Tuple[int, Dict[str, Any]]:
        measure = self._measure()
        d = self.spec.d
        cumulants = []
        for total in range(1, 5):
            for order in itertools.product(range(total + 1), repeat=d):
                if sum(order) != total:
                    continue
                cumulants.append({
                    "order": list(order),
                    "value": levy.cumulant(measure, order),
                    "error": levy.cumulant_error_estimate(measure, order),
                })
        absolute = {str(k): levy.absolute_moment(measure, k) for k in range(1, 9)}
        return EXIT_OK, {"cumulants": cumulants, "absolute_moments": absolute,
                         "omitted_tail": measure.omitted_tail}

    def run(self) -> Tuple[int, Dict[str, Any]]:
        self.load()
        handler = getattr(self, f"cmd_{self.args.command}")
        code, result = handler()
        result = {**result, "config": self.config.to_dict()}
        if self.args.out and self.args.command in ("eval", "classify", "witness", "moments"):
            path = Path(self.args.out)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(_json(result) + "\n")
        return code, result


def run_catalog(args: argparse.Namespace) -> Tuple[int, Dict[str, Any]]:
    if args.catalog_command == "list":
        entries = [catalog.get(name) for name in catalog.list_names()]
        return EXIT_OK, {"entries": [{"name": e.name, "d": e.spec.d, "description": e.description}
                                     for e in entries]}
    entry = catalog.get(args.name, **parse_params(args.param or []))
    if args.catalog_command == "show":
        return EXIT_OK, {**entry.to_dict(), "spec": spec_to_dict(entry.spec)}
    if not args.out:
        return EXIT_OK, spec_to_dict(entry.spec)
    dump_spec(entry.spec, Path(args.out))
    return EXIT_OK, {"name": entry.name, "written": args.out}


def format_text(command: str, result: Dict[str, Any]) -> str:
    """Human-readable banner summary."""
    lines = ["=" * 60, f"zeta-dist {command}", "=" * 60]
    if command == "classify":
        ok = result["verdict"] == "CompoundPoisson"
        lines.append(f"{'✅' if ok else '❌'} {result['verdict']} ({result['theorem_used']})")
        for l, p in result["offending"]:
            lines.append(f"   negative at direction {l}, p = {p}")
        lines.extend(f"   {note}" for note in result["notes"])
    elif command == "witness":
        if result["found"]:
            w = result["witness"]
            lines.append(f"✅ witness t0 = {w['t0']}")
            lines.append(f"   D = {w['D']!r}, certified margin = {w['certified_margin']!r}")
        else:
            lines.append(f"❌ no witness in {result['evaluations']} evaluations")
            lines.append(f"   max D observed = {result['max_d_observed']!r}")
    else:
        for key, value in result.items():
            if key != "config":
                lines.append(f"{key}: {json.dumps(value)}")
    lines.append("=" * 60)
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeta-dist",
        description="Multidimensional polynomial Euler products as probability laws",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    # Z_E and log Z_E at s = 2
    zeta-dist eval --catalog riemann --sigma 2

    # f_sigma on a grid, as CSV
    zeta-dist cf --catalog dedekind_qi --sigma 2 --t 0,0.5,1,1.5 --out cf.csv

    # Verdict and offending (direction, prime) pairs
    zeta-dist classify --catalog L1 --sigma 2

    # Levy atoms as CSV + JSON sidecar
    zeta-dist levy --catalog md_iii --sigma 2,0 --out atoms.csv

    # Witness search along reduction lines
    zeta-dist witness --catalog L_chi4 --sigma 2 --strategy kronecker

    # Catalog
    zeta-dist catalog list
    zeta-dist catalog export rank_shift --param alpha=1/3 --out rank_shift.json

Part of: zeta-dist
        """,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group(required=True)
    source.add_argument("--spec", help="ProductSpec file (JSON, or YAML by suffix)")
    source.add_argument("--catalog", help="Catalog entry name (see: catalog list)")
    common.add_argument("--param", action="append", help="Catalog parameter key=value")
    common.add_argument("--sigma", help="Real part, comma-separated (default: entry default)")
    common.add_argument("--prime-limit", type=int, help="Prime limit P")
    common.add_argument("--power-limit", type=int, help="Power limit R")
    common.add_argument("--tol", type=float, help="Target tail tolerance (raises P)")
    common.add_argument("--out", help="Output path")
    common.add_argument("--threads", type=int, default=1, help="Worker threads (default: 1)")
    common.add_argument("--config", type=Path, help="YAML settings file")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--run-log", type=Path, help="Append a JSONL record of this run")
    common.add_argument("-v", "--verbose", action="count", default=0)

    with_t = argparse.ArgumentParser(add_help=False)
    with_t.add_argument("--t", action="append", help="t vector (repeatable)")

    sub.add_parser("eval", parents=[common, with_t], help="Z_E(s) and log Z_E(s)")
    sub.add_parser("cf", parents=[common, with_t], help="f_sigma over t points")
    p_classify = sub.add_parser("classify", parents=[common], help="Verdict with evidence")
    p_classify.add_argument("--resolve", action="store_true",
                            help="Settle out-of-scope specs with the atom certificate")
    sub.add_parser("levy", parents=[common], help="Levy measure atoms")
    p_witness = sub.add_parser("witness", parents=[common], help="Search t0 with |f| > 1")
    p_witness.add_argument("--budget", type=int, default=10**6, help="Evaluation budget")
    p_witness.add_argument("--strategy", choices=["direct", "kronecker"], default="direct")
    p_sample = sub.add_parser("sample", parents=[common], help="Compound Poisson samples")
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--n", type=int, default=1000)
    sub.add_parser("moments", parents=[common], help="Cumulants up to order 4")

    p_catalog = sub.add_parser("catalog", help="Catalog entries")
    p_catalog.add_argument("--format", choices=["json", "text"], default="json")
    p_catalog.add_argument("-v", "--verbose", action="count", default=0)
    cat_sub = p_catalog.add_subparsers(dest="catalog_command", required=True)
    cat_sub.add_parser("list", help="Entry names")
    for name in ("show", "export"):
        p = cat_sub.add_parser(name)
        p.add_argument("name")
        p.add_argument("--param", action="append", help="Parameter key=value")
        p.add_argument("--out", help="Output file (export)")
    return parser


def _configure_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity == 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)

    try:
        if args.command == "catalog":
            code, result = run_catalog(args)
        else:
            code, result = Runner(args).run()
    except ZetaDistError as exc:
        print(_json(exc.to_dict()), file=sys.stderr)
        code, result = EXIT_INVALID, {"error": exc.to_dict()}
        _record(args, code, result)
        return code

    if args.format == "text":
        print(format_text(args.command, result))
    else:
        print(_json(result))
    _record(args, code, result)
    return code


def _record(args: argparse.Namespace, code: int, result: Dict[str, Any]) -> None:
    path = getattr(args, "run_log", None)
    if path is None:
        return
    config = result.get("config", {"command": args.command})
    summary = {k: v for k, v in result.items() if k != "config" and not isinstance(v, list)}
    log_run(path, args.command, config, summary, code)


if __name__ == "__main__":
    raise SystemExit(main())
