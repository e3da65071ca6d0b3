"""Command line interface.

Exit codes: 0 success, 2 validation failure, 3 solver infeasibility or size
limit, 4 malformed or ambiguous JSON input.

Every run writes a manifest (command, input hashes, seed, parameters, tool
version, output paths, headline results) to ``--manifest``, to
``<out>.manifest.json`` when ``--out`` is given, and to stderr otherwise.
Manifests carry no timestamps, so identical runs give identical bytes.
"""
from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from pathlib import Path

from . import __version__
from . import io as fio
from .adm import convergence_experiment, rows_to_csv
from .errors import InfeasibleError, InputFormatError, SizeLimitError, ValidationError
from .gw import glue, gw_distance
from .hypergraph import build_hypergraph, hypergraph_to_field
from .lipschitz import MASS_MODES, field_one_point_extend
from .metric import MMField, validate_field

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_FORMAT = 4


def _num(x):
    """Round to 12 significant digits for display; infinities become strings."""
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(format(x, ".12g"))


def _p(text: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not p >= 1:
        raise argparse.ArgumentTypeError("p must be >= 1 (or inf)")
    return p


def _float_list(text: str) -> list[float]:
    return [_p(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Collects what a command read and wrote, then emits the manifest."""

    def __init__(self, args):
        self.args = args
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.results: dict = {}

    def field(self, path) -> MMField:
        f = fio.load_field(path)
        self.inputs[str(path)] = _sha256(path)
        report = validate_field(f)
        if not report.ok:
            raise ValidationError(f"{path}: invalid field\n{fio.dumps(report.to_dict())}")
        return f

    def json(self, path):
        obj = fio.load_json(path)
        self.inputs[str(path)] = _sha256(path)
        return obj

    def emit(self, text: str):
        out = self.args.out
        if out:
            Path(out).write_text(text, encoding="utf-8", newline="\n")
            self.outputs.append(str(out))
        else:
            sys.stdout.write(text)

    def manifest(self) -> dict:
        skip = {"func", "out", "manifest", "command", "hcommand"}
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in skip and not k.startswith("file")}
        return {
            "command": self.args.command + (f" {self.args.hcommand}" if getattr(self.args, "hcommand", None) else ""),
            "inputs": self.inputs,
            "seed": getattr(self.args, "seed", None),
            "parameters": {k: _jsonable(v) for k, v in params.items()},
            "version": __version__,
            "outputs": self.outputs,
            "results": self.results,
        }

    def write_manifest(self):
        text = fio.dumps(self.manifest())
        target = self.args.manifest or (f"{self.args.out}.manifest.json" if self.args.out else None)
        if target:
            Path(target).write_text(text, encoding="utf-8", newline="\n")
        else:
            sys.stderr.write(text)


def _jsonable(v):
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, list):
        return [_jsonable(x) for x in v]
    return v


# --- commands -------------------------------------------------------------------


def cmd_validate(run: Run) -> int:
    f = fio.load_field(run.args.file)
    run.inputs[str(run.args.file)] = _sha256(run.args.file)
    report = validate_field(f, tol=run.args.tol)
    d = report.to_dict()
    for v in d["violations"]:
        v["slack"] = _num(v["slack"])
    run.emit(fio.dumps(d))
    run.results = {"ok": report.ok, "total": report.total}
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_gw(run: Run) -> int:
    a = run.args
    fX, fY = run.field(a.fileX), run.field(a.fileY)
    res = gw_distance(fX, fY, a.p, mode=a.mode, grid_step=a.grid_step, restarts=a.restarts, seed=a.seed)
    out = {
        "value": _num(res.value),
        "p": _num(res.p),
        "mode": res.mode,
        "coupling": [[_num(x) for x in row] for row in res.coupling.P],
        "error_bound": _num(res.error_bound),
    }
    run.emit(fio.dumps(out))
    run.results = {"value": out["value"], "solver": res.solver, "certificate": res.certificate}
    return EXIT_OK


def cmd_adm(run: Run) -> int:
    a = run.args
    fX, fY = run.field(a.fileX), run.field(a.fileY)
    rows = convergence_experiment(fX, fY, [a.n], a.N, a.p, a.seed, bootstrap=a.bootstrap)
    run.emit(rows_to_csv(rows))
    run.results = {"estimate": _num(rows[0].estimate)}
    return EXIT_OK


def cmd_converge(run: Run) -> int:
    a = run.args
    fX, fY = run.field(a.fileX), run.field(a.fileY)
    rows = convergence_experiment(fX, fY, a.n_list, a.N, a.p, a.seed, bootstrap=a.bootstrap, threads=a.threads)
    run.emit(rows_to_csv(rows))
    run.results = {"estimates": [_num(r.estimate) for r in rows]}
    return EXIT_OK


def cmd_hypergraph(run: Run) -> int:
    a = run.args
    obj = run.json(a.input)
    if isinstance(obj, dict) and "metric" in obj:
        obj = obj["metric"]
    m = fio.parse_metric(obj)
    h = build_hypergraph(m, a.r, a.p)
    f = hypergraph_to_field(h, a.p[0])
    run.emit(fio.serialize_field(f))
    run.results = {
        "simplices": [list(s) for s in h.simplices],
        "centrality": {str(_num(p)): [_num(x) for x in v] for p, v in h.centrality.items()},
    }
    return EXIT_OK


def cmd_glue(run: Run) -> int:
    a = run.args
    fX, fY = run.field(a.fileX), run.field(a.fileY)
    if a.optimal:
        P = gw_distance(fX, fY, math.inf, mode="exact").coupling
    else:
        P = fio.parse_coupling(run.json(a.coupling))
    Z, r = glue(fX, fY, P, weights=(a.weight, 1.0 - a.weight))
    run.emit(fio.serialize_field(Z))
    run.results = {"r": _num(r)}
    return EXIT_OK


def cmd_extend(run: Run) -> int:
    a = run.args
    f = run.field(a.file)
    c = fio.parse_candidate(run.json(a.candidate), f.target)
    g = field_one_point_extend(f, c, a.mass_mode)
    run.emit(fio.serialize_field(g))
    run.results = {"n": g.n}
    return EXIT_OK


# --- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json, else stderr)")
    common.add_argument("--seed", type=int, default=0, help="64-bit seed; MMFIELD_SEED overrides")
    common.add_argument("--threads", type=int, default=1, help="worker cap for parallel stages")

    parser = argparse.ArgumentParser(prog="mmfield", description="Finite metric-measure field toolkit")
    parser.add_argument("--version", action="version", version=f"mmfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check metric axioms, Lipschitz bound and measure")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gw", parents=[common], help="field Gromov-Wasserstein distance")
    p.add_argument("fileX")
    p.add_argument("fileY")
    p.add_argument("--p", type=_p, default=math.inf)
    p.add_argument("--mode", choices=["exact", "local-search"], default="exact")
    p.add_argument("--grid-step", type=float, default=1e-2)
    p.add_argument("--restarts", type=int, default=32)
    p.set_defaults(func=cmd_gw)

    for name, func, help_ in (
        ("adm", cmd_adm, "ADM Wasserstein estimate at one order"),
        ("converge", cmd_converge, "ADM estimates over several orders"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("fileX")
        p.add_argument("fileY")
        if name == "adm":
            p.add_argument("--n", type=int, required=True)
        else:
            p.add_argument("--n-list", type=_int_list, required=True)
        p.add_argument("--N", type=int, default=500)
        p.add_argument("--p", type=_p, default=1.0)
        p.add_argument("--bootstrap", type=int, default=40, help="bootstrap replicates for the noise band")
        p.set_defaults(func=func)

    p = sub.add_parser("hypergraph", help="community hypergraph of a point cloud or metric")
    hsub = p.add_subparsers(dest="hcommand", required=True)
    hb = hsub.add_parser("build", parents=[common])
    hb.add_argument("--input", required=True)
    hb.add_argument("--r", type=float, required=True)
    hb.add_argument("--p", type=_float_list, default=[1.0], help="comma list; the first order becomes the field values")
    hb.set_defaults(func=cmd_hypergraph)

    p = sub.add_parser("glue", parents=[common], help="glue two fields along a coupling")
    p.add_argument("fileX")
    p.add_argument("fileY")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--coupling")
    g.add_argument("--optimal", action="store_true", help="use the exact p=inf optimal coupling")
    p.add_argument("--weight", type=float, default=0.5, help="mass given to the first field")
    p.set_defaults(func=cmd_glue)

    p = sub.add_parser("extend", parents=[common], help="one-point extension of a field")
    p.add_argument("file")
    p.add_argument("--candidate", required=True)
    p.add_argument("--mass-mode", choices=MASS_MODES, default="zero-mass")
    p.set_defaults(func=cmd_extend)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    env_seed = os.environ.get("MMFIELD_SEED")
    if env_seed is not None and hasattr(args, "seed"):
        try:
            args.seed = int(env_seed)
        except ValueError:
            print(f"error: MMFIELD_SEED is not an integer: {env_seed!r}", file=sys.stderr)
            return EXIT_FORMAT
    run = Run(args)
    try:
        code = args.func(run)
    except InputFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (InfeasibleError, SizeLimitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    run.write_manifest()
    return code


if __name__ == "__main__":
    sys.exit(main())
