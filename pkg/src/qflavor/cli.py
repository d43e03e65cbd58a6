"""Command-line experiment harness.

    qflavor --suite aas --seed 7
    qflavor --config run.json --format csv --out report.csv

Exit status: 0 when every row passes, 1 when any row fails, 2 on a bad
configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

from .commitments import scheme_to_json
from .experiments import SUITE_ORDER, SUITES, perfect_zoo, suite_rng
from .qcore import QCoreError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
FIELDS = ("suite", "instance_id", "measured", "expected", "abs_error", "pass")
SIZE_KEYS = {
    "aas": {"instances", "max_dim"},
    "generalized": {"instances", "max_dim"},
    "conversion": {"my_tables", "my_n"},
    "zoo": {"my_tables", "my_n", "hm_lambdas"},
    "pke": {"cyclic", "dihedral", "symmetric"},
    "oss": {"N", "trials", "group_n", "forger_N", "p", "abort_N", "abort_trials"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    seed: int = 0
    suite: str = "all"
    sizes: dict[str, dict[str, Any]] = field(default_factory=dict)
    out: str | None = None
    format: str = "json"
    jobs: int = 1

    def validate(self):
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.suite != "all" and self.suite not in SUITES:
            raise ConfigError(f"unknown suite {self.suite!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown format {self.format!r}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs must be a positive integer")
        if self.out is not None and not isinstance(self.out, str):
            raise ConfigError("out must be a path")
        if not isinstance(self.sizes, dict):
            raise ConfigError("sizes must be an object keyed by suite")
        for name, params in self.sizes.items():
            if name not in SIZE_KEYS:
                raise ConfigError(f"sizes given for unknown suite {name!r}")
            if not isinstance(params, dict):
                raise ConfigError(f"sizes[{name!r}] must be an object")
            extra = set(params) - SIZE_KEYS[name]
            if extra:
                raise ConfigError(f"unknown size keys for {name}: {sorted(extra)}")
            for key, val in params.items():
                _check_size(name, key, val)

    def suites(self) -> list[str]:
        return list(SUITE_ORDER) if self.suite == "all" else [self.suite]


LIST_KEYS = {"cyclic", "dihedral", "symmetric", "hm_lambdas"}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _check_size(suite: str, key: str, val):
    if key == "p":
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not 0 <= val <= 1:
            raise ConfigError(f"sizes[{suite}].p must be a probability")
    elif key in LIST_KEYS:
        if not isinstance(val, list) or not all(_is_int(v) and v >= 1 for v in val):
            raise ConfigError(f"sizes[{suite}].{key} must be a list of positive integers")
        if key == "hm_lambdas" and not set(val) <= {1, 2}:
            raise ConfigError("hm_lambdas supports 1 and 2")
    elif not _is_int(val) or val < 1:
        raise ConfigError(f"sizes[{suite}].{key} must be a positive integer")


def _format_number(v: float) -> str:
    return "%.17g" % v


def _json_value(v: Any) -> str:
    """JSON text with floats at 17 significant digits and sorted keys."""
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if v != v or v in (float("inf"), float("-inf")):
            return json.dumps(str(v))
        return _format_number(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v[k])}" for k in sorted(v)) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    if hasattr(v, "item"):
        return _json_value(v.item())
    raise TypeError(f"cannot serialize {type(v).__name__}")


def render(rows: Sequence[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(_json_value(r) + "\n" for r in rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS + ("detail",))
    for r in rows:
        detail = {k: v for k, v in r.items() if k not in FIELDS}
        w.writerow([
            r["suite"], r["instance_id"],
            _format_number(r["measured"]), _format_number(r["expected"]), _format_number(r["abs_error"]),
            "true" if r["pass"] else "false",
            _json_value(detail) if detail else "",
        ])
    return buf.getvalue()


def _run_suite(args: tuple[str, int, dict]) -> list[dict]:
    name, seed, sizes = args
    return SUITES[name](seed, sizes)


def run(config: ExperimentConfig) -> tuple[int, list[dict]]:
    config.validate()
    tasks = [(s, config.seed, config.sizes.get(s, {})) for s in config.suites()]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            results = list(pool.map(_run_suite, tasks))
    else:
        results = [_run_suite(t) for t in tasks]
    rows = sorted((r for rs in results for r in rs), key=lambda r: (SUITE_ORDER.index(r["suite"]), r["instance_id"]))
    return (EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL), rows


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qflavor", description="Run the verification suites and emit report rows.")
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--suite", choices=list(SUITE_ORDER) + ["all"])
    p.add_argument("--seed", type=int)
    p.add_argument("--sizes", help='JSON object of per-suite sizes, e.g. \'{"aas": {"instances": 20}}\'')
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--jobs", type=int, help="worker processes across suites")
    p.add_argument("--export-scheme", metavar="NAME",
                   help="print the JSON of a seeded zoo scheme (injective, keyed_injective, dms, gl) and exit")
    return p


def load_config(ns: argparse.Namespace) -> ExperimentConfig:
    doc: dict[str, Any] = {}
    if ns.config:
        try:
            with open(ns.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {ns.config}: {e}") from e
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(doc) - {"seed", "suite", "sizes", "out", "format", "jobs"}
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
    cfg = ExperimentConfig(**doc)
    if ns.sizes is not None:
        try:
            cfg.sizes = json.loads(ns.sizes)
        except json.JSONDecodeError as e:
            raise ConfigError(f"--sizes is not valid JSON: {e}") from e
    for key in ("suite", "seed", "out", "format", "jobs"):
        val = getattr(ns, key)
        if val is not None:
            setattr(cfg, key, val)
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_CONFIG
    try:
        cfg = load_config(ns)
        if ns.export_scheme:
            zoo = perfect_zoo(suite_rng(cfg.seed, "zoo"))
            if ns.export_scheme not in zoo:
                raise ConfigError(f"unknown scheme {ns.export_scheme!r}; choose from {sorted(zoo)}")
            _emit(json.dumps(scheme_to_json(zoo[ns.export_scheme])) + "\n", cfg.out)
            return EXIT_OK
        status, rows = run(cfg)
    except (ConfigError, QCoreError) as e:
        # QCoreError here means the requested sizes broke the dimension cap
        print(f"qflavor: config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(render(rows, cfg.format), cfg.out)
    if status != EXIT_OK:
        failed = sum(not r["pass"] for r in rows)
        print(f"qflavor: {failed} of {len(rows)} rows failed", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
