"""Command-line front end.

Every command prints (or writes) one JSON record with the fields
``command``, ``config``, ``value``, ``report``, ``grid_fingerprint`` and
``version``.  Exit status: 0 success, 2 not certified, 1 usage or IO error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from . import __version__
from .ap_certifier import (
    Certificate,
    ClassSpec,
    FailureTrace,
    SearchConfig,
    Variant,
    WeightSpec,
    certify,
    replay_certificate,
)
from .function_model import Box, Domain, FunctionHandle
from .gallery import gallery_ids, get_entry
from .schedules import ConvergenceReport, LSchedule
from .vexp_lebesgue import QuadratureConfig, luxemburg_norm

EXIT_OK, EXIT_ERROR, EXIT_NOT_CERTIFIED = 0, 1, 2


class GridFileError(ValueError):
    """Malformed grid file; the message names the offending line."""


class UsageError(ValueError):
    pass


# grid files ------------------------------------------------------------------


@dataclass(frozen=True)
class GridFile:
    n: int
    axes: tuple          # ((lo, hi, count), ...)
    arity: str
    values: np.ndarray   # shape (count_0, ..., count_{n-1})

    @property
    def box(self) -> Box:
        return Box(tuple(a[0] for a in self.axes), tuple(a[1] for a in self.axes))


def _tokens(text: str):
    """``(line number, tokens)`` for non-blank lines with comments removed."""
    for i, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].split()
        if body:
            yield i, body


def parse_grid(text: str, source: str = "<grid>") -> GridFile:
    """Parse the plain-text grid format.

    ::

        n 2
        axis 0 1 11
        axis -1 1 5
        arity real        # or complex: two numbers per sample
        values
        <row-major samples, last axis fastest>
    """
    lines = list(_tokens(text))
    it = iter(lines)
    n, axes, arity = None, [], "real"

    def fail(lineno, msg):
        raise GridFileError(f"{source}:{lineno}: {msg}")

    for lineno, tok in it:
        key = tok[0]
        try:
            if key == "n":
                n = int(tok[1])
                if n < 1:
                    fail(lineno, "dimension must be positive")
            elif key == "axis":
                lo, hi, count = float(tok[1]), float(tok[2]), int(tok[3])
                if not hi > lo or count < 2:
                    fail(lineno, "axis needs lo < hi and at least 2 samples")
                axes.append((lo, hi, count))
            elif key == "arity":
                arity = tok[1]
                if arity not in ("real", "complex"):
                    fail(lineno, f"unknown arity {arity!r}")
            elif key == "values":
                break
            else:
                fail(lineno, f"unknown header key {key!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, GridFileError):
                raise
            fail(lineno, f"bad header line: {' '.join(tok)}")
    else:
        fail(lines[-1][0] if lines else 0, "missing 'values' line")
    if n is None:
        fail(1, "missing dimension line 'n'")
    if len(axes) != n:
        fail(lines[0][0], f"expected {n} axis lines, found {len(axes)}")
    per = 2 if arity == "complex" else 1
    numbers, where = [], []
    for lineno, tok in it:
        for s in tok:
            try:
                v = float(s)
            except ValueError:
                fail(lineno, f"not a number: {s!r}")
            if not math.isfinite(v):
                fail(lineno, f"non-finite sample {s!r} (row {len(numbers) // per})")
            numbers.append(v)
            where.append(lineno)
    expected = math.prod(a[2] for a in axes) * per
    if len(numbers) != expected:
        fail(where[-1] if where else lines[-1][0],
             f"sample count mismatch: expected {expected} numbers, found {len(numbers)}")
    data = np.asarray(numbers)
    if per == 2:
        data = data[0::2] + 1j * data[1::2]
    shape = tuple(a[2] for a in axes)
    return GridFile(n, tuple(axes), arity, data.reshape(shape))


def ingest_grid(path) -> FunctionHandle:
    """Multilinear interpolant of a grid file, extended by 0 outside its box.

    Evaluating outside the box warns once per call and sets
    ``handle.meta["outside"]``.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise GridFileError(f"{path}: {exc.strerror}") from exc
    grid = parse_grid(text, str(path))
    axes = [np.linspace(lo, hi, c) for lo, hi, c in grid.axes]
    interp = RegularGridInterpolator(axes, grid.values, method="linear",
                                     bounds_error=False, fill_value=0.0)
    box = grid.box
    meta = {"source": str(path), "outside": False,
            "sha256": hashlib.sha256(text.encode()).hexdigest()}

    def func(t, x):
        inside = box.contains(t)
        if not np.all(inside):
            meta["outside"] = True
            warnings.warn("grid function evaluated outside its box; using 0", stacklevel=2)
        out = interp(t)
        return out if grid.arity == "complex" else np.real(out)

    return FunctionHandle(func=func, n=grid.n, label=path.name,
                          sup_bound=float(np.max(np.abs(grid.values))), meta=meta)


# plot data -------------------------------------------------------------------


def emit_plot_data(report, path, fingerprint: str = "") -> str:
    """Write ``scale value`` rows with a ``#`` header; returns the text.

    Convergence reports give one row per sample (modulus of complex values);
    certificates give ``probe-index measured-value`` rows.
    """
    lines = [f"# weylap {__version__}", f"# fingerprint {fingerprint}"]
    if isinstance(report, ConvergenceReport):
        lines.append("# columns: scale value")
        rows = [(s, abs(v)) for s, v in report.samples]
    elif isinstance(report, Certificate):
        lines.append("# columns: probe measured")
        rows = [(k, v) for k, v in sorted(report.measured.items())]
    else:
        raise TypeError("expected a ConvergenceReport or Certificate")
    lines += [f"{float(a)!r} {float(b)!r}" for a, b in rows]
    text = "\n".join(lines) + "\n"
    Path(path).write_text(text)
    return text


# helpers -----------------------------------------------------------------------


def _fingerprint(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _load_function(args) -> FunctionHandle:
    if getattr(args, "grid", None):
        return ingest_grid(args.grid)
    if not getattr(args, "gallery", None):
        raise UsageError("give --gallery ID or --grid PATH")
    return get_entry(args.gallery).handle


def _default_probes(n: int, radius: float):
    if n == 1:
        return [(-radius,), (-radius / 2,), (radius / 2,), (radius,)]
    return [tuple(s * radius / 2 for s in signs)
            for signs in np.array(np.meshgrid(*[[-1, 1]] * n, indexing="ij")).reshape(n, -1).T]


def _domain(args, n: int) -> Domain:
    R = args.box_radius
    probes = _default_probes(n, R) if not args.probe else [tuple(p) for p in args.probe]
    return Domain(n=n, probe_box=Box.cube(0.0, R, n), probes=tuple(probes),
                  grid_step=args.grid_step)


def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(points_per_axis=args.points_per_axis, refine_tol=args.refine_tol,
                            max_refinements=args.max_refinements)


def _weights(args, n: int, p: float) -> WeightSpec:
    if args.weight == "weyl":
        return WeightSpec.weyl(n, p)
    return WeightSpec.power(args.sigma)


def _record(command, config, value, report, fingerprint) -> dict:
    return {"command": command, "config": config, "value": value, "report": report,
            "grid_fingerprint": fingerprint, "version": __version__}


def _config(args) -> dict:
    skip = {"func", "out"}   # where the record goes is not part of the run
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    return v


# commands ----------------------------------------------------------------------


def cmd_gallery(args):
    if args.id is None:
        return EXIT_OK, _record("gallery", _config(args), gallery_ids(), {}, "")
    e = get_entry(args.id)
    claims = [{"claim": c.claim_id, "parameters": c.parameters, "expected": c.expected}
              for c in e.truth]
    h = e.handle
    value = {"id": args.id, "n": h.n, "description": e.description, "claims": claims,
             "sup_bound": h.sup_bound, "piecewise_constant": h.piecewise_constant}
    return EXIT_OK, _record("gallery", _config(args), value, {}, "")


def cmd_norm(args):
    F = _load_function(args)
    lo = args.lo if args.lo else [0.0] * F.n
    hi = args.hi if args.hi else [1.0] * F.n
    if len(lo) != F.n or len(hi) != F.n:
        raise UsageError(f"--lo/--hi need {F.n} values")
    quad = _quad(args)
    val, info = luxemburg_norm(F, args.p, Box(tuple(lo), tuple(hi)), quad, full_output=True)
    return EXIT_OK, _record("norm", _config(args), val, info, quad.fingerprint())


def cmd_distance(args):
    from .weyl_metrics import stepanov_distance, weyl_distance

    F = _load_function(args)
    G = get_entry(args.other).handle if args.other else None
    domain = _domain(args, F.n)
    quad = _quad(args)
    fp = _fingerprint([domain.fingerprint(), quad.fingerprint()])
    if args.l is not None:
        v = stepanov_distance(F, G, args.p, args.l, domain, quad=quad)
        return EXIT_OK, _record("distance", _config(args), v, {"kind": "stepanov"}, fp)
    sched = LSchedule(args.l0, args.ratio, args.K, args.tail)
    v, rep = weyl_distance(F, G, args.p, sched, domain, quad=quad)
    if args.plot:
        emit_plot_data(rep, args.plot, fp)
    return EXIT_OK, _record("distance", _config(args), v, rep.to_dict(), fp)


def _load_certificate(path) -> Certificate:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read certificate {path}: {exc}") from exc
    v = d.get("value", d)
    if v.get("kind") != "certificate":
        raise UsageError(f"{path} does not hold a certificate")
    return Certificate(v["epsilon"], v["l"], v["l_tail"], v["L"], v["probes"],
                       {int(k): w for k, w in v["witnesses"].items()},
                       {int(k): m for k, m in v["measured"].items()}, v["grids"], v["spec"])


def cmd_certify(args):
    F = _load_function(args)
    domain = _domain(args, F.n)
    weights = _weights(args, F.n, args.p)
    spec = ClassSpec(Variant(args.variant), args.p, weights, args.equi, domain)
    search = SearchConfig(L_schedule=tuple(args.L), scales=tuple(args.scales),
                          schedule=LSchedule(args.l0, args.ratio, args.K, args.tail),
                          tau_step=args.tau_step, max_evaluations=args.max_evaluations,
                          quad=_quad(args))
    fp = _fingerprint([domain.fingerprint(), search.to_dict()])
    if args.replay:
        cert = _load_certificate(args.replay)
        out = replay_certificate(F, spec, cert, search)
        value = {"identical": out["identical"],
                 "measured": {str(k): v for k, v in sorted(out["measured"].items())}}
        return (EXIT_OK if out["identical"] else EXIT_NOT_CERTIFIED,
                _record("certify", _config(args), value, {"replay": args.replay}, fp))
    result = certify(F, spec, args.eps, search)
    if args.plot and isinstance(result, Certificate):
        emit_plot_data(result, args.plot, fp)
    status = EXIT_OK if isinstance(result, Certificate) else EXIT_NOT_CERTIFIED
    return status, _record("certify", _config(args), result.to_dict(),
                           {"certified": status == EXIT_OK}, fp)


def cmd_fourier(args):
    from .harmonic import bohr_fourier_coefficient, spectrum_scan, symmetric_cube_coefficient

    F = _load_function(args)
    T = sorted(args.T)
    if args.scan:
        lo, hi, step = args.scan
        grid = np.arange(lo, hi + step / 2, step).reshape(-1, 1)
        if F.n != 1:
            raise UsageError("--scan supports n = 1")
        est = spectrum_scan(F, grid, args.threshold, T)
        return EXIT_OK, _record("fourier", _config(args), len(est.entries), est.to_dict(), "")
    lam = args.lam or [0.0] * F.n
    fn = symmetric_cube_coefficient if args.symmetric else bohr_fourier_coefficient
    v, rep = fn(F, lam, T)
    return EXIT_OK, _record("fourier", _config(args), _jsonable(complex(v)), rep.to_dict(), "")


def cmd_convolve(args):
    from .pde_apps import box_kernel, convolve, heat_kernel

    F = _load_function(args)
    h = heat_kernel(args.time, F.n) if args.kernel == "heat" else box_kernel(args.width, F.n)
    res = convolve(h, F, args.radius)
    pts = np.asarray(args.at, dtype=float).reshape(-1, F.n)
    vals = [_jsonable(complex(v)) if np.iscomplexobj(v) else float(v) for v in res.handle(pts)]
    report = {"truncation_radius": res.truncation_radius,
              "est_truncation_error": res.est_truncation_error}
    return EXIT_OK, _record("convolve", _config(args), vals, report, "")


def cmd_wave(args):
    from .pde_apps import dalembert_solution

    f, g = get_entry(args.f).handle, get_entry(args.g).handle
    x, t = np.asarray(args.x, dtype=float), np.asarray(args.t, dtype=float)
    if x.shape != t.shape:
        raise UsageError("--x and --t need the same number of values")
    u = dalembert_solution(f, g, args.a, x, t)
    vals = [_jsonable(complex(v)) if np.iscomplexobj(v) else float(v) for v in u]
    return EXIT_OK, _record("wave", _config(args), vals, {}, "")


def cmd_reproduce(args):
    from . import reproduce

    targets = reproduce.TARGETS if args.target == "all" else {args.target: reproduce.TARGETS[args.target]}
    results = {name: fn() for name, fn in targets.items()}
    ok = all(r["matches_claim"] for r in results.values())
    return (EXIT_OK if ok else EXIT_NOT_CERTIFIED,
            _record("reproduce", _config(args), {k: r["matches_claim"] for k, r in results.items()},
                    results, ""))


# parser ------------------------------------------------------------------------


def _add_function(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gallery", metavar="ID", help="gallery function id")
    g.add_argument("--grid", metavar="PATH", help="grid file with samples")


def _add_numerics(p):
    p.add_argument("--points-per-axis", type=int, default=32)
    p.add_argument("--refine-tol", type=float, default=1e-9)
    p.add_argument("--max-refinements", type=int, default=10)


def _add_domain(p):
    p.add_argument("--box-radius", type=float, default=20.0,
                   help="half width of the probe box (default 20)")
    p.add_argument("--probe", type=float, nargs="+", action="append",
                   help="probe point; repeat for several (default: four points in the box)")
    p.add_argument("--grid-step", type=float, default=0.5)


def _add_schedule(p, K=12):
    p.add_argument("--l0", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=2.0)
    p.add_argument("--K", type=int, default=K)
    p.add_argument("--tail", type=int, default=3)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="PATH", help="write the JSON record here")
    common.add_argument("--seed", type=int, default=0, help="seed recorded with the run")
    ap = argparse.ArgumentParser(prog="weylap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_parser(name, **kw):
        return sub.add_parser(name, parents=[common], **kw)

    p = add_parser("gallery", help="list gallery ids or show one entry")
    p.add_argument("id", nargs="?")
    p.set_defaults(func=cmd_gallery)

    p = add_parser("norm", help="Luxemburg norm over a box")
    _add_function(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--lo", type=float, nargs="+")
    p.add_argument("--hi", type=float, nargs="+")
    _add_numerics(p)
    p.set_defaults(func=cmd_norm)

    p = add_parser("distance", help="Stepanov or Weyl distance")
    _add_function(p)
    p.add_argument("--other", metavar="ID", help="second gallery function (default 0)")
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--l", type=float, help="single Stepanov scale; omit for the Weyl limit")
    p.add_argument("--plot", metavar="PATH", help="write (l, distance) plot data")
    _add_schedule(p, K=10)
    _add_domain(p)
    _add_numerics(p)
    p.set_defaults(func=cmd_distance)

    p = add_parser("certify", help="search almost periods for every probe")
    _add_function(p)
    p.add_argument("--variant", default="paren", choices=[v.value for v in Variant])
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--weight", choices=["power", "weyl"], default="power")
    p.add_argument("--sigma", type=float, default=1.0, help="power weight l^-sigma")
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--equi", action="store_true", help="one scale for all translations")
    p.add_argument("--scales", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--L", type=float, nargs="+", default=[1.0, 2.0, 4.0])
    p.add_argument("--tau-step", type=float, default=0.5)
    p.add_argument("--max-evaluations", type=int, default=200_000)
    p.add_argument("--replay", metavar="PATH", help="re-verify a stored certificate")
    p.add_argument("--plot", metavar="PATH", help="write (probe, measured) plot data")
    _add_schedule(p)
    _add_domain(p)
    _add_numerics(p)
    p.set_defaults(func=cmd_certify)

    p = add_parser("fourier", help="Bohr-Fourier coefficient or spectrum scan")
    _add_function(p)
    p.add_argument("--lam", type=float, nargs="+")
    p.add_argument("--T", type=float, nargs="+", default=[25.0, 50.0, 100.0, 200.0])
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--scan", type=float, nargs=3, metavar=("LO", "HI", "STEP"))
    p.add_argument("--threshold", type=float, default=0.05)
    p.set_defaults(func=cmd_fourier)

    p = add_parser("convolve", help="kernel convolution at points")
    _add_function(p)
    p.add_argument("--kernel", choices=["heat", "box"], default="heat")
    p.add_argument("--time", type=float, default=1.0)
    p.add_argument("--width", type=float, default=1.0)
    p.add_argument("--radius", type=float)
    p.add_argument("--at", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_convolve)

    p = add_parser("wave", help="d'Alembert solution at points")
    p.add_argument("--f", required=True, metavar="ID")
    p.add_argument("--g", required=True, metavar="ID")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--x", type=float, nargs="+", required=True)
    p.add_argument("--t", type=float, nargs="+", required=True)
    p.set_defaults(func=cmd_wave)

    from .reproduce import TARGETS

    p = add_parser("reproduce", help="regenerate a worked example")
    p.add_argument("target", choices=sorted(TARGETS) + ["all"])
    p.set_defaults(func=cmd_reproduce)
    return ap


def _write(record: dict, out: str | None) -> None:
    text = json.dumps(record, sort_keys=True, indent=2, default=_jsonable) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        status, record = args.func(args)
        _write(record, args.out)
    except (UsageError, GridFileError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"weylap: error: {msg}", file=sys.stderr)
        return EXIT_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
