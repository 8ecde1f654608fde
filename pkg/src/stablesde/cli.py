"""Command line entry point: ``stablesde <experiment> [flags]``.

Settings are layered preset < config file < flags. Exit status is 0 when
every claim passes, 3 when some claim failed, and 2 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import DomainError
from .experiments import EXPERIMENTS, VERIFY_ORDER, ExperimentConfig, Verdict, _merge, preset_config, run_experiment
from .report import emit_report

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

log = logging.getLogger("stablesde")


def load_config_file(path: str | Path) -> dict:
    """TOML config, or JSON (a config dict or a verdict carrying its echo)."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        d = json.loads(text)
        if "config" in d and "experiment" in d.get("config", {}):
            d = d["config"]
        return d
    return tomllib.loads(text)


def parse_scheme(value: str) -> dict:
    if value == "exact":
        return {"scheme": "exact"}
    if value.startswith("jump:"):
        try:
            eps = float(value.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad jump threshold in {value!r}") from None
        return {"scheme": "jump", "epsilon": eps}
    raise argparse.ArgumentTypeError("scheme must be 'exact' or 'jump:EPS'")


def _flag_overrides(ns: argparse.Namespace) -> dict:
    over: dict = {}
    model = {k: v for k, v in (("alpha", ns.alpha), ("beta", ns.beta), ("a", ns.a)) if v is not None}
    if model:
        over["model"] = model
    run: dict = {}
    if ns.paths is not None:
        run["n_paths"] = ns.paths
    if ns.lambdas:
        run["lambdas"] = ns.lambdas
    if ns.scheme is not None:
        run.update(ns.scheme)
    if run:
        over["run"] = run
    if ns.level is not None:
        over["stats"] = {"level": ns.level}
    if ns.out is not None:
        over["io"] = {"out_dir": ns.out}
    if ns.seed is not None:
        over["master_seed"] = ns.seed
        # the retry seed follows the master seed unless set explicitly
        over["retry_seed"] = ns.retry_seed
    elif ns.retry_seed is not None:
        over["retry_seed"] = ns.retry_seed
    return over


def build_config(experiment: str, ns: argparse.Namespace) -> ExperimentConfig:
    over: dict = {}
    if ns.config:
        over = load_config_file(ns.config)
        named = over.get("experiment", experiment)
        if named != experiment:
            raise DomainError(f"config file is for {named!r}, not {experiment!r}")
    over = _merge(over, _flag_overrides(ns))
    over["experiment"] = experiment
    return preset_config(experiment, quick=ns.quick, overrides=over)


def _print_claims(v: Verdict) -> None:
    for c in v.claims:
        status = "PASS" if c.passed else "FAIL"
        tries = f" (retry used, {len(c.attempts)} attempts)" if len(c.attempts) > 1 else ""
        print(f"[{status}] criterion {c.criterion} {v.experiment}:{c.name}{tries}")


def _run_one(experiment: str, ns: argparse.Namespace, out_dir: Path | None = None) -> Verdict:
    cfg = build_config(experiment, ns)
    target = out_dir if out_dir is not None else Path(cfg.io.out_dir)
    log.info("running %s (seed %d, workers %d)", experiment, cfg.master_seed, ns.workers)
    v = run_experiment(cfg, workers=ns.workers)
    emit_report(v, target, cfg.io.formats)
    _print_claims(v)
    return v


def verify_all(ns: argparse.Namespace) -> list[Verdict]:
    out = Path(ns.out or "results")
    verdicts = []
    for exp in VERIFY_ORDER:
        verdicts.append(_run_one(exp, ns, out))
    summary = {
        "schema_version": 1,
        "experiments": {
            v.experiment: {
                "passed": v.passed,
                "claims": [{"criterion": c.criterion, "name": c.name, "passed": c.passed} for c in v.claims],
            }
            for v in verdicts
        },
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return verdicts


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config (a verdict JSON also works)")
    common.add_argument("--seed", type=int, help="master seed (64-bit)")
    common.add_argument("--retry-seed", type=int, dest="retry_seed", help="seed for the single permitted re-run")
    common.add_argument("--out", help="output directory")
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--a", type=float)
    common.add_argument("--paths", type=int, help="number of paths or samples")
    common.add_argument("--lambda", dest="lambdas", type=float, action="append", help="repeatable")
    common.add_argument("--scheme", type=parse_scheme, help="exact | jump:EPS")
    common.add_argument("--level", type=float, help="KS significance level")
    common.add_argument("--workers", type=int, default=1, help="processes for ensembles (results do not depend on it)")
    common.add_argument("--quick", action="store_true", help="reduced smoke-test scale")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="stablesde", description="Scaling-limit experiments for SDEs driven by stable noise.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sub.add_parser("verify-all", parents=[common], help="run every acceptance experiment with its preset")
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if ns.command == "verify-all":
            verdicts = verify_all(ns)
        else:
            verdicts = [_run_one(ns.command, ns)]
    except (DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0 if all(v.passed for v in verdicts) else 3


if __name__ == "__main__":
    sys.exit(main())
