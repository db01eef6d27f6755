"""Command-line interface.

    hitchinq <command> --manifest run.json [--out out.jsonl] [--cache c.jsonl]
             [--tol T] [--threads N] [--seed S] [--emit-csv table.csv]

Commands: monodromy, fn, solve, yang, semiclassical, sov-check.  Each run
writes one JSON record.  Exit status 2 means the manifest is invalid and 3
means a numerical failure; in the latter case a partial record carrying an
``error`` field is still written.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .errors import NumericalError, ValidationError

log = logging.getLogger("hitchinq")

CACHE_ENV = "HITCHINQ_CACHE"
COMMANDS = ("monodromy", "fn", "solve", "yang", "semiclassical", "sov-check")
EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# -- serialisation ---------------------------------------------------------

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def dumps(obj) -> str:
    """Compact JSON with sorted keys and 17-significant-digit floats.

    Complex numbers become ``[re, im]``; numpy scalars and arrays are
    unwrapped.
    """
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(str(k)) + ":" + dumps(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return "[" + _fmt_float(c.real) + "," + _fmt_float(c.imag) + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def cx(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)


def manifest_hash(command: str, manifest: dict, overrides: dict) -> str:
    blob = dumps({"command": command, "manifest": manifest, "overrides": overrides})
    return hashlib.sha256(blob.encode()).hexdigest()


def load_schema() -> dict:
    text = resources.files("hitchinq").joinpath("manifest.schema.json").read_text()
    return json.loads(text)


def validate_manifest(manifest) -> None:
    try:
        jsonschema.validate(manifest, load_schema())
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"manifest: {exc.message}") from exc


# -- cache -----------------------------------------------------------------

def cache_lookup(path: Path | None, key: str) -> dict | None:
    """Most recent record stored under ``key``; corrupt lines are skipped."""
    if path is None or not path.exists():
        return None
    found = None
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError:
                log.warning("skipping corrupt cache line %d in %s", lineno, path)
                continue
            if isinstance(rec, dict) and rec.get("hash") == key:
                found = rec
    return found


def cache_store(path: Path | None, record: dict) -> None:
    if path is None:
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        fh.write(dumps(record) + "\n")


# -- manifest helpers ------------------------------------------------------

def _config(man):
    from .oper import OperConfig, Puncture

    if "punctures" not in man or "epsilon1" not in man:
        raise ValidationError("manifest needs epsilon1 and punctures for this command")
    ps = []
    for p in man["punctures"]:
        ps.append(Puncture(cx(p["z"]), cx(p["delta"]) if "delta" in p else None,
                           cx(p["j"]) if "j" in p else None))
    return OperConfig(cx(man["epsilon1"]), tuple(ps))


def _accessory(man, config):
    from .quantiser import reduce_accessory

    if "accessory" in man:
        return [cx(v) for v in man["accessory"]]
    if "accessory_free" in man:
        return list(reduce_accessory(config, [cx(v) for v in man["accessory_free"]]).values)
    raise ValidationError("manifest needs accessory or accessory_free")


def _cycle(spec):
    from .monodromy import PathSpec, circle_path

    if "circle" in spec:
        c = spec["circle"]
        return circle_path(cx(c["center"]), float(c["radius"]), int(c.get("sides", 64)))
    return PathSpec(tuple(cx(v) for v in spec["vertices"]), bool(spec.get("closed", False)))


def _mono_opts(man):
    tol = man.get("tolerances", {})
    return {"rtol": float(tol["rtol"])} if "rtol" in tol else {}


def _fn_record(fn):
    return {"lambda": fn.lam, "kappa": fn.kappa, "nu": fn.nu, "root_sign": fn.root_sign}


def _traces_record(tc):
    out = {"L": list(tc.L)}
    if tc.Ls is not None:
        out.update(Ls=tc.Ls, Lt=tc.Lt, Lu=tc.Lu)
    return out


# -- commands --------------------------------------------------------------

def cmd_monodromy(man, ctx):
    from .ensembles import random_oper4
    from .monodromy import (cyclic_residual, monodromy_rep, quartic_residual,
                            trace_coordinates)
    from .oper import build_oper, local_exponents

    mono = _mono_opts(man)
    if "ensemble" in man:
        ens = man["ensemble"]
        rng = np.random.default_rng(ctx["seed"])
        kw = {k: ens[k] for k in ("jitter", "free_box") if k in ens}
        if "delta_range" in ens:
            kw["delta_range"] = tuple(ens["delta_range"])
        worst = {"det": 0.0, "cyclic": 0.0, "local_trace": 0.0, "quartic": 0.0}
        for _ in range(int(ens["count"])):
            oper = random_oper4(rng, **kw)
            rep = monodromy_rep(oper, threads=ctx["threads"], **mono)
            tc = trace_coordinates(rep)
            worst["det"] = max(worst["det"], max(abs(np.linalg.det(m) - 1) for m in rep.matrices))
            worst["cyclic"] = max(worst["cyclic"], cyclic_residual(rep))
            worst["local_trace"] = max(worst["local_trace"], max(
                abs(tc.L[r] - local_exponents(oper, r).trace) for r in range(4)))
            worst["quartic"] = max(worst["quartic"], abs(quartic_residual(tc)))
        return {"ensemble": {"count": ens["count"], "seed": ctx["seed"]}}, worst, []

    config = _config(man)
    oper = build_oper(config, _accessory(man, config))
    base = cx(man["basepoint"]) if "basepoint" in man else None
    rep = monodromy_rep(oper, base, threads=ctx["threads"], **mono)
    tc = trace_coordinates(rep) if config.n in (3, 4) else None
    warnings = []
    exps = []
    for r in range(config.n):
        e = local_exponents(oper, r)
        if e.resonant:
            warnings.append(f"puncture {r}: resonant exponents")
        exps.append({"rho_plus": e.rho_plus, "rho_minus": e.rho_minus, "m": e.m,
                     "trace": e.trace})
    results = {"matrices": [m for m in rep.matrices], "basepoint": rep.basepoint,
               "local_exponents": exps}
    if tc is not None:
        results["traces"] = _traces_record(tc)
    residuals = {
        "det": max(abs(np.linalg.det(m) - 1) for m in rep.matrices),
        "cyclic": cyclic_residual(rep),
        "infinity": list(oper.infinity_residual),
    }
    if tc is not None and tc.Ls is not None:
        residuals["quartic"] = quartic_residual(tc)
    return results, residuals, warnings


def cmd_fn(man, ctx):
    from .fenchel_nielsen import FNCoords, fn_to_traces, traces_to_fn
    from .monodromy import TraceCoordinates, quartic_residual

    results, residuals = {}, {}
    if "fn" in man:
        f = man["fn"]
        fn = FNCoords(cx(f["lambda"]), cx(f["kappa"]))
        tc = fn_to_traces(fn, [cx(v) for v in f["boundary"]])
        results["traces"] = _traces_record(tc)
        residuals["quartic"] = quartic_residual(tc)
    if "traces" in man:
        t = man["traces"]
        tc = TraceCoordinates(tuple(cx(v) for v in t["L"]), cx(t["Ls"]), cx(t["Lt"]), cx(t["Lu"]))
        fn = traces_to_fn(tc)
        results["fn"] = _fn_record(fn)
        back = fn_to_traces(fn, tc.L)
        residuals["round_trip"] = max(abs(a - b) for a, b in zip(back.as_tuple(), tc.as_tuple()))
    if not results:
        raise ValidationError("fn command needs an fn or traces block")
    return results, residuals, []


def cmd_solve(man, ctx):
    from .quantiser import (QuantisationLabel, SolverOptions, continue_tracker,
                            solve_spectrum)

    config = _config(man)
    labels = man.get("labels") or []
    if not labels:
        raise ValidationError("solve needs at least one label")
    tol = ctx["tol"] or man.get("tolerances", {}).get("solver", 1e-10)
    opts = SolverOptions(tol=float(tol), mono_opts=_mono_opts(man))
    ref = cx(man["reference"]) if "reference" in man else None

    def one(lab):
        label = QuantisationLabel(int(lab["n"]), int(lab["m"]), int(lab.get("nu", 1)))
        guess = lab.get("initial_guess", man.get("initial_guess"))
        if guess is None:
            raise ValidationError("label needs an initial_guess")
        e0 = cx(guess)
        tracker = None
        if ref is not None:
            tracker = continue_tracker(config, e0, ref, **opts.mono_opts)
        return solve_spectrum(config, label, e0, opts, tracker)

    workers = ctx["threads"] or 1
    with ThreadPoolExecutor(workers) as pool:
        points = list(pool.map(one, labels))
    results = {"spectrum": [{
        "label": {"n": p.label.n, "m": p.label.m, "nu": p.label.nu},
        "eigenvalues": list(p.eigenvalues),
        "accessory": list(p.accessory.values),
        "fn": _fn_record(p.fn),
        "traces": _traces_record(p.traces),
        "holonomy_class": p.holonomy_class.value,
        "accepted": p.accepted,
        "iterations": p.iterations,
        "tracker_state": p.tracker_state,
    } for p in points]}
    residuals = {"quantisation": [list(p.residual) for p in points]}
    warnings = [w for p in points for w in p.warnings]
    ctx["csv"] = [("n", "m", "re_E", "im_E")] + [
        (p.label.n, p.label.m, p.eigenvalues[0].real, p.eigenvalues[0].imag) for p in points]
    return results, residuals, warnings


def cmd_yang(man, ctx):
    from .yang import MovingPuncture, initial_sample, pants_N, upsilon_cl, w_increment

    results, residuals = {}, {}
    if "upsilon" in man:
        xs = [cx(v) for v in man["upsilon"]]
        results["upsilon"] = [{"x": x, "value": upsilon_cl(x)} for x in xs]
    if "pants" in man:
        results["pants_N"] = [{"l": [cx(v) for v in l], "value": pants_N([cx(v) for v in l])}
                              for l in man["pants"]]
    if "paths" in man:
        config = _config(man)
        fam = MovingPuncture(config, int(man.get("moving_index", 1)))
        tol = float(man.get("tolerances", {}).get("quadrature", 1e-9))
        mono = _mono_opts(man)
        out = []
        rows = [("path", "re_q", "im_q", "re_W", "im_W")]
        for k, p in enumerate(man["paths"]):
            verts = [(cx(v["lambda"]), cx(v["q"])) for v in p["vertices"]]
            start = initial_sample(fam, verts[0][0], verts[0][1], cx(p["initial_guess"]), **mono)
            w = w_increment(fam, verts, start, tol=tol, **mono)
            out.append({"increment": w.increment, "segments": list(w.segment_increments),
                        "Y_increment": 4j * math.pi * w.increment})
            acc = 0j
            rows.append((k, verts[0][1].real, verts[0][1].imag, 0.0, 0.0))
            for (lam, q), inc in zip(verts[1:], w.segment_increments):
                acc += inc
                rows.append((k, q.real, q.imag, acc.real, acc.imag))
        results["paths"] = out
        ctx["csv"] = rows
    if not results:
        raise ValidationError("yang command needs upsilon, pants or paths")
    return results, residuals, []


def cmd_semiclassical(man, ctx):
    from .semiclassical import (PeriodPair, SpectralCurveData, bs_residual,
                                branch_points, period, wkb_trace_check)

    config = _config(man)
    acc = _accessory(man, config)
    curve = SpectralCurveData.from_config(config, acc)
    cycles = [_cycle(c) for c in man.get("cycles", [])]
    results = {"branch_points": [b.position for b in branch_points(curve)]}
    residuals = {}
    warnings = []
    periods = [period(curve, c) for c in cycles]
    results["periods"] = periods
    results["real_actions"] = [p.real for p in periods]
    if "bs" in man:
        if len(periods) < 2:
            raise ValidationError("bs block needs two cycles")
        b = man["bs"]
        residuals["bs"] = list(bs_residual(PeriodPair(periods[0], periods[1]),
                                           float(b["eps1"]), int(b["n"]), int(b["m"])))
    if "eps_sweep" in man:
        k = int(man.get("wkb_cycle", 0))
        if k >= len(cycles):
            raise ValidationError("wkb_cycle index out of range")
        rows = wkb_trace_check(config.positions, config.weights, acc,
                               [float(e) for e in man["eps_sweep"]], cycles[k],
                               **_mono_opts(man))
        if not rows:
            warnings.append("period vanishes; WKB check skipped")
        results["wkb"] = [{"eps1": r.eps1, "trace": r.trace, "err": r.err} for r in rows]
        ctx["csv"] = [("eps1", "err")] + [(r.eps1, r.err) for r in rows]
    return results, residuals, warnings


def cmd_sov_check(man, ctx):
    from .monodromy import monodromy_rep
    from .oper import build_oper
    from .sov import EPS, invariant_hermitian_form, real_basis, single_valuedness_residual

    config = _config(man)
    oper = build_oper(config, _accessory(man, config))
    rep = monodromy_rep(oper, threads=ctx["threads"], **_mono_opts(man))
    cls = invariant_hermitian_form(rep)
    mats = rep.matrices
    if cls.form is not None and cls.signature == (1, 1):
        mats = rep.conjugated(real_basis(cls.form)).matrices
    res = [single_valuedness_residual(m, EPS) for m in mats]
    results = {"holonomy_class": cls.kind.value,
               "signature": list(cls.signature) if cls.signature else None,
               "form": cls.form}
    return results, {"single_valuedness": res}, []


DISPATCH = {
    "monodromy": cmd_monodromy,
    "fn": cmd_fn,
    "solve": cmd_solve,
    "yang": cmd_yang,
    "semiclassical": cmd_semiclassical,
    "sov-check": cmd_sov_check,
}


# -- driver ----------------------------------------------------------------

def run(command: str, manifest: dict, *, tol=None, threads=None, seed=0,
        cache: Path | None = None) -> tuple[dict, int, list | None]:
    """Execute one command.  Returns ``(record, exit_code, csv_rows)``."""
    if command not in DISPATCH:
        raise ValidationError(f"unknown command {command!r}")
    validate_manifest(manifest)
    overrides = {"tol": tol, "seed": seed}
    key = manifest_hash(command, manifest, overrides)
    hit = cache_lookup(cache, key)
    if hit is not None:
        return hit, EXIT_NUMERICAL if "error" in hit else EXIT_OK, None
    ctx = {"tol": tol, "threads": threads, "seed": seed, "csv": None}
    record = {"command": command, "hash": key, "version": __version__,
              "results": {}, "residuals": {}, "warnings": []}
    t0 = time.perf_counter()
    code = EXIT_OK
    try:
        results, residuals, warnings = DISPATCH[command](manifest, ctx)
        record.update(results=results, residuals=residuals, warnings=warnings)
    except NumericalError as exc:
        record["error"] = {"type": type(exc).__name__, "message": str(exc)}
        code = EXIT_NUMERICAL
    record["timing_ms"] = (time.perf_counter() - t0) * 1e3
    cache_store(cache, record)
    return record, code, ctx["csv"]


def _parser():
    p = argparse.ArgumentParser(prog="hitchinq", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--out", type=Path)
    p.add_argument("--cache", type=Path)
    p.add_argument("--tol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--emit-csv", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cache = args.cache
    if cache is None and os.environ.get(CACHE_ENV):
        cache = Path(os.environ[CACHE_ENV])
    try:
        manifest = json.loads(args.manifest.read_text())
        record, code, rows = run(args.command, manifest, tol=args.tol,
                                 threads=args.threads, seed=args.seed, cache=cache)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        print(f"hitchinq: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    line = dumps(record) + "\n"
    if args.out:
        args.out.write_text(line)
    else:
        sys.stdout.write(line)
    if args.emit_csv and rows:
        with args.emit_csv.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(
                [[_fmt_float(v) if isinstance(v, float) else v for v in r] for r in rows])
    if "error" in record:
        print(f"hitchinq: {record['error']['type']}: {record['error']['message']}",
              file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
