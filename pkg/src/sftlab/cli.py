"""Command line: ``sftlab run <scenario> --out <dir> [--seed N] [--set key=value]...``.

Exit status is 0 when every verdict-bearing task passes, 1 when a task
fails, 2 for scenario errors, 3 when a resource cap is hit and 4 for other
numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import ResourceLimitError, SftLabError
from .scenario import ScenarioError, bundled, load
from .tasks import RUNNERS, TaskOutput

EXIT_OK, EXIT_FAIL, EXIT_SCENARIO, EXIT_RESOURCE, EXIT_NUMERIC = 0, 1, 2, 3, 4


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple)):
        return " ".join(format_value(x) for x in v)
    return str(v)


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings inf, -inf, nan."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return obj


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(out_dir: Path, name: str, out: TaskOutput):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(out.header)
    for r in out.rows:
        w.writerow([format_value(v) for v in r])
    _atomic_write(out_dir / f"{name}.csv", buf.getvalue())
    _atomic_write(out_dir / f"{name}.json", json.dumps(jsonable(out.summary), indent=2, allow_nan=False) + "\n")


def resolve_path(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    return bundled(arg)


def run(scenario_path, out_dir, overrides=(), seed=None, log=print) -> int:
    """Run every task of a scenario and write its reports; returns the exit status."""
    try:
        sc = load(resolve_path(str(scenario_path)), overrides, seed)
    except ScenarioError as e:
        log(f"error: {e}")
        return EXIT_SCENARIO
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for task in sc.tasks:
        name = task["name"]
        try:
            out = RUNNERS[task["type"]](sc, task)
        except ScenarioError as e:
            log(f"error: {e}")
            return EXIT_SCENARIO
        except ResourceLimitError as e:
            log(f"error: task {name!r}: {e}")
            return EXIT_RESOURCE
        except SftLabError as e:
            log(f"error: task {name!r}: {e}")
            return EXIT_NUMERIC
        write_outputs(out_dir, name, out)
        label = "INFO" if out.passed is None else ("PASS" if out.passed else "FAIL")
        log(f"{label} {task['type']} {name}")
        if out.passed is False:
            status = EXIT_FAIL
    return status


def list_bundled() -> list[str]:
    return sorted(p.stem for p in (Path(__file__).parent / "scenarios").glob("*.json"))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sftlab", description="Pressure, rate function and large deviation audits on shifts of finite type.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario file or a bundled scenario name")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override a scenario field by dotted path")
    sub.add_parser("list", help="list bundled scenarios")
    args = parser.parse_args(argv)
    if args.command == "list":
        for name in list_bundled():
            print(name)
        return EXIT_OK
    return run(args.scenario, args.out, args.overrides, args.seed)


if __name__ == "__main__":
    sys.exit(main())
