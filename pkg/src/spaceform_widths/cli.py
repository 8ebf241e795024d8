"""Command-line batch runner.

Examples
--------
Run one suite and write ``reports/widths.json`` and ``reports/widths.csv``::

    spaceform-widths --suite widths

Export a fixture::

    spaceform-widths export critical-catenoid --resolution 64 --path catenoid.off
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .suites import SUITE_FUNCTIONS, RunConfig

OUT_ENV = "SPACEFORM_WIDTHS_OUT"

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

_CONFIG_KEYS = {
    "suite": str,
    "seed": int,
    "out": str,
    "resolution": int,
    "gamma": float,
    "tolerance_scale": float,
    "jobs": int,
}

VARIFOLD_EXPORTS = ("equatorial-disk", "offcenter-disk", "doubled-disk")
MESH_EXPORTS = ("critical-catenoid", "geodesic-disk-hyperbolic", "hemisphere-disk")
FIXTURES = VARIFOLD_EXPORTS + MESH_EXPORTS


class ConfigError(ValueError):
    pass


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment, dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _CONFIG_KEYS[key](value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def build_config(args: argparse.Namespace, environ=os.environ) -> RunConfig:
    """Defaults < config file < environment (output dir) < command-line flags."""
    values = {}
    if args.config:
        values.update(read_config(args.config))
    if environ.get(OUT_ENV):
        values["out"] = environ[OUT_ENV]
    for key in _CONFIG_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    cfg = RunConfig(**values)
    try:
        cfg.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg


# ---------------------------------------------------------------------------
# reports


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def make_report(name: str, cfg: RunConfig, checks) -> dict:
    conf = dataclasses.asdict(cfg)
    conf["suite"] = name
    # where and how the run executes does not change its results
    del conf["out"], conf["jobs"]
    return {
        "suite": name,
        "config": conf,
        "passed": not any(c.failed for c in checks),
        "counts": {s: sum(c.status == s for c in checks)
                   for s in ("pass", "fail", "info-pass", "info-fail")},
        "checks": [{k: _clean(v) for k, v in c.to_dict().items()} for c in checks],
    }


CSV_FIELDS = ("name", "status", "measured", "expected", "tolerance", "relation", "provenance",
              "anchor", "gate")


def report_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for c in report["checks"]:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in c.items()})
    return buf.getvalue()


def write_report(report: dict, out: Path) -> tuple[Path, Path]:
    out.mkdir(parents=True, exist_ok=True)
    jp = out / f"{report['suite']}.json"
    cp = out / f"{report['suite']}.csv"
    jp.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    cp.write_text(report_csv(report))
    return jp, cp


def run_suite(name: str, cfg: RunConfig) -> dict:
    """Run one suite and return its report dictionary (nothing is written)."""
    if name not in SUITE_FUNCTIONS:
        raise ConfigError(f"unknown suite {name!r}")
    return make_report(name, cfg, SUITE_FUNCTIONS[name](cfg))


# ---------------------------------------------------------------------------
# fixtures


def export_fixture(name: str, resolution: int | None, path) -> Path:
    """Write a fixture: varifolds as JSON lines, meshes in the SFOFF text format."""
    path = Path(path)
    if name in VARIFOLD_EXPORTS:
        from .varifold_fixtures import VARIFOLD_FIXTURES

        V = VARIFOLD_FIXTURES[name](resolution or 100)
        V.to_jsonl(path)
    elif name in MESH_EXPORTS:
        from .stability import MESH_FIXTURES, check_minimality

        mesh = MESH_FIXTURES[name](resolution or (64 if name == "critical-catenoid" else 16))
        mesh.validate()
        check_minimality(mesh)
        mesh.to_off(path)
    else:
        raise ConfigError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return path


# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spaceform-widths",
                                description="Verification suites for widths of space-form balls.")
    p.add_argument("--suite", help="suite name, comma list, or 'all'")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--out", help=f"output directory (env {OUT_ENV} overrides the config file)")
    p.add_argument("--resolution", type=int, help="suite-specific resolution")
    p.add_argument("--gamma", type=float, help="monotonicity constant")
    p.add_argument("--tolerance-scale", dest="tolerance_scale", type=float)
    p.add_argument("--jobs", type=int, help="run suites in parallel processes")
    sub = p.add_subparsers(dest="command")
    ex = sub.add_parser("export", help="write a fixture file")
    ex.add_argument("fixture")
    ex.add_argument("--path", required=True)
    ex.add_argument("--resolution", dest="export_resolution", type=int)
    return p


def _print_summary(report: dict, stream) -> None:
    c = report["counts"]
    state = "PASS" if report["passed"] else "FAIL"
    print(f"[{state}] {report['suite']}: {c['pass']} passed, {c['fail']} failed, "
          f"{c['info-pass'] + c['info-fail']} diagnostics", file=stream)
    for chk in report["checks"]:
        if chk["status"] == "fail":
            print(f"  FAIL {chk['name']}: measured {chk['measured']!r} vs expected "
                  f"{chk['expected']!r} ({chk['relation']}, tol {chk['tolerance']!r}) "
                  f"[{chk['anchor']}]", file=stream)


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_PASS
    try:
        if args.command == "export":
            export_fixture(args.fixture, args.export_resolution or args.resolution, args.path)
            print(f"wrote {args.path}")
            return EXIT_PASS
        cfg = build_config(args)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    names = cfg.suites()
    if cfg.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            reports = list(pool.map(run_suite, names, [cfg] * len(names)))
    else:
        reports = [run_suite(n, cfg) for n in names]
    out = Path(cfg.out)
    for rep in reports:
        write_report(rep, out)
        _print_summary(rep, sys.stdout)
    return EXIT_PASS if all(r["passed"] for r in reports) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
