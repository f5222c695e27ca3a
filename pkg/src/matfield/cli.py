"""
Command-line interface.

Every subcommand writes CSV (header row first) or JSON (one object per
line) to stdout or ``--output``. Exit codes: 0 success, 1 a check failed,
2 usage or domain error. Errors go to stderr as a single line
``ERROR:<code>:<message>``.
"""

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__, cosmology, geometry, matcore
from .dynamics import orbits
from .geometry import DomainError, NumericalQualityError
from .metrics import conformal, flat, spherical, units

METRICS = (
    "minkowski",
    "schwarzschild",
    "weak",
    "general-weak",
    "general-spherical",
    "rectilinear",
    "fl-uniform",
    "fl-bigbang",
    "flat-frame",
)

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2


class CliError(Exception):
    def __init__(self, code, message, exit_code=EXIT_USAGE):
        super().__init__(message)
        self.code = code
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", f"{self.prog}: {message}")


def _num(v):
    """Shortest round-trip text for a float; NaN and infinities spelled out."""
    v = float(v) + 0.0  # folds -0.0 into 0.0
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


class Emitter:
    """Collects rows and writes them as CSV or JSON lines."""

    def __init__(self, fmt, columns):
        self.fmt = fmt
        self.columns = list(columns)
        self.rows = []

    def add(self, **row):
        self.rows.append(row)

    def render(self):
        buf = io.StringIO()
        if self.fmt == "json":
            for row in self.rows:
                buf.write(json.dumps(_json_safe(row)) + "\n")
            return buf.getvalue()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_cell(row.get(c, "")) for c in self.columns])
        return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _num(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_num(x) for x in np.ravel(v))
    return v


def _write(args, text):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_point(text):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise CliError("usage", f"point {text!r} must be comma-separated numbers") from None
    if not all(math.isfinite(v) for v in values):
        raise CliError("usage", f"point {text!r} has non-finite entries")
    return np.array(values)


def build_metric(args):
    """The :class:`MetricField` selected by ``--metric`` and its parameters."""
    name = args.metric
    if name == "minkowski":
        return spherical.minkowski(4)
    if name == "schwarzschild":
        return spherical.schwarzschild(args.rM)
    if name == "weak":
        return spherical.weak_spherical(args.rM, c7=args.c7, c8=args.c8)
    if name == "general-weak":
        r_M, rho = args.rM, args.rho
        if args.g33 == "euclidean":
            return spherical.general_weak(lambda r: -1.0, r_M, rho=rho, c8=args.c8, dg33_fn=lambda r: 0.0)

        def g44(r):
            return 1 - 2 * r_M / r - rho / 3 * r * r

        def dg33(r):
            return (2 * r_M / r**2 - 2 * rho / 3 * r) / g44(r) ** 2

        return spherical.general_weak(lambda r: -1.0 / g44(r), r_M, rho=rho, c8=args.c8, dg33_fn=dg33)
    if name in ("general-spherical", "rectilinear"):
        params = spherical.SphericalSolutionParams(c5=args.c5, c6=args.c6, c7=args.c7, c8=args.c8)
        return spherical.general_spherical(params) if name == "general-spherical" else spherical.rectilinear_spherical(params)
    if name == "fl-uniform":
        return cosmology.cosmo_metric(cosmology.CosmoModel.uniform(args.rho))
    if name == "fl-bigbang":
        return cosmology.cosmo_metric(cosmology.CosmoModel.bigbang(args.sm, args.rhom, args.d))
    if name == "flat-frame":
        return flat.flat_frame_metric(flat.random_flat_spec(np.random.default_rng(args.seed)))
    raise CliError("usage", f"unknown metric {name!r}")


def expected_density(args):
    """Density the selected metric should carry, or ``None`` when it varies."""
    name = args.metric
    if name in ("minkowski", "schwarzschild", "flat-frame"):
        return 0.0
    if name in ("weak", "general-spherical", "rectilinear"):
        return 3.0 * args.c7
    if name in ("general-weak", "fl-uniform"):
        return args.rho
    return None


def _points(args, field):
    if args.point:
        return [_parse_point(p) for p in args.point]
    return list(geometry.sample_points(field, np.random.default_rng(args.seed), args.grid))


def _index(*idx):
    return ";".join(str(i + 1) for i in idx)


def cmd_curvature(args):
    field = build_metric(args)
    if not args.point:
        raise CliError("usage", "curvature needs at least one --point")
    em = Emitter(args.format, ["point", "quantity", "index", "value"])
    for x in (_parse_point(p) for p in args.point):
        b = geometry.ricci(field, x)
        if args.format == "json":
            em.add(
                point=x,
                metric=b.metric,
                christoffel_first=b.christoffel.first_kind,
                christoffel_second=b.christoffel.second_kind,
                curvature=b.sigma_ab,
                ricci=b.ricci,
                scalar=b.scalar,
                eigenvalues=list(b.eigen.values),
            )
            continue
        n = field.dim
        label = ";".join(_num(v) for v in x)
        for i in range(n):
            for j in range(n):
                em.add(point=label, quantity="metric", index=_index(i, j), value=b.metric[i, j])
        for name, arr in (("christoffel_first", b.christoffel.first_kind), ("christoffel_second", b.christoffel.second_kind)):
            for idx in np.ndindex(arr.shape):
                em.add(point=label, quantity=name, index=_index(*idx), value=arr[idx])
        for idx in np.ndindex(b.sigma_ab.shape):
            em.add(point=label, quantity="curvature", index=_index(*idx), value=b.sigma_ab[idx])
        for i in range(n):
            for j in range(n):
                em.add(point=label, quantity="ricci", index=_index(i, j), value=b.ricci[i, j])
        em.add(point=label, quantity="scalar", index="", value=b.scalar)
        for i, mu in enumerate(b.eigen.values):
            em.add(point=label, quantity="eigenvalue", index=_index(i), value=mu)
    _write(args, em.render())
    return EXIT_OK


def _bigbang_check(args, field, x):
    """Second-type field equation ``R = (mu4 - mu1) g u u^T g + mu1 g`` with ``mu4 = rho(s)``."""
    model = cosmology.CosmoModel.bigbang(args.sm, args.rhom, args.d)
    sc = cosmology.scale_function(model)
    s = conformal.interval(x)
    b = geometry.ricci(field, x)
    mu1, mu4 = cosmology.fl_eigenvalues(sc, s)
    gu = b.metric @ cosmology.fl_velocity(x, sc)
    model_R = (mu4 - mu1) * np.outer(gu, gu) + mu1 * b.metric
    scale = 1.0 + np.max(np.abs(b.ricci))
    res = np.max(np.abs(b.ricci - model_R)) / scale
    rho = cosmology.bigbang_density(model, s)
    res = max(res, abs(mu4 - rho) / (1.0 + abs(rho)))
    return rho, res, rho


def cmd_verify(args):
    field = build_metric(args)
    expected = expected_density(args)
    tol = args.tol if args.tol is not None else 1e-6
    em = Emitter(args.format, ["point", "rho", "expected_rho", "residual", "passed"])
    failed = 0
    for x in _points(args, field):
        if args.metric == "fl-bigbang":
            rho, res, exp = _bigbang_check(args, field, x)
        else:
            check = geometry.verify_field_equation(field, x)
            rho, res, exp = check.rho, check.max_residual, expected
            if exp is not None:
                res = max(res, abs(rho - exp) / (1.0 + abs(exp)))
        ok = bool(res < tol)
        failed += not ok
        em.add(point=x, rho=rho, expected_rho=exp if exp is not None else float("nan"), residual=res, passed=ok)
    _write(args, em.render())
    if failed:
        raise CliError("check-failed", f"{failed} point(s) violate the field equation beyond {tol:g}", EXIT_CHECK)
    return EXIT_OK


def cmd_identities(args):
    field = build_metric(args)
    tol = args.tol if args.tol is not None else geometry.IDENTITY_TOL
    em = Emitter(args.format, ["point", "identity", "violation", "tolerance", "passed"])
    failed = 0
    for x in _points(args, field):
        report = geometry.identity_suite(field, x, tol=tol)
        for c in report.checks:
            failed += not c.passed
            em.add(point=x, identity=c.name, violation=c.violation, tolerance=c.tolerance, passed=c.passed)
    _write(args, em.render())
    if failed:
        raise CliError("check-failed", f"{failed} identity check(s) exceed {tol:g}", EXIT_CHECK)
    return EXIT_OK


def _constants(args):
    try:
        return units.load_constants(args.constants)
    except OSError as exc:
        raise CliError("input", f"cannot read constants file: {exc}") from None


def _planets(args):
    try:
        return orbits.load_planets(args.planets)
    except OSError as exc:
        raise CliError("input", f"cannot read planets file: {exc}") from None


def _orbit_spec(args):
    if args.planet:
        consts = _constants(args)
        matches = [r for r in _planets(args) if r.name.lower() == args.planet.lower()]
        if not matches:
            raise CliError("input", f"planet {args.planet!r} not found")
        rec = matches[0]
        return orbits.OrbitSpec(rec.perihelion_km, rec.aphelion_km, units.mass_to_length(consts.M_sun, consts) / 1000.0)
    if args.p is None or args.a is None:
        raise CliError("usage", "orbit needs --planet or both --p and --a")
    return orbits.OrbitSpec(args.p, args.a, args.rM)


def cmd_orbit(args):
    spec = _orbit_spec(args)
    closed = orbits.precession(spec)
    h_max = None
    if args.steps:
        period = 2 * math.pi * math.sqrt((0.5 * (spec.a + spec.p)) ** 3 / spec.r_M)
        h_max = period / args.steps
    dphi, traj = orbits.precession_geodesic(spec, rtol=args.rtol, h_max=h_max)
    if args.summary:
        numeric = orbits.precession_numeric(spec)
        em = Emitter(args.format, ["method", "dphi_rad", "dphi_arcsec", "relative_to_closed_form", "steps", "norm_drift"])
        em.add(method="closed_form", dphi_rad=closed, dphi_arcsec=closed * orbits.ARCSEC_PER_RAD, relative_to_closed_form=0.0)
        for method, value, steps, drift in (
            ("orbit_equation", numeric, "", ""),
            ("geodesic", dphi, traj.steps, traj.norm_drift),
        ):
            em.add(
                method=method,
                dphi_rad=value,
                dphi_arcsec=value * orbits.ARCSEC_PER_RAD,
                relative_to_closed_form=value / closed - 1,
                steps=steps,
                norm_drift=drift,
            )
        _write(args, em.render())
        return EXIT_OK
    field = spherical.weak_spherical(spec.r_M)
    em = Emitter(args.format, ["tau", "x1", "x2", "x3", "x4", "u1", "u2", "u3", "u4", "norm_error"])
    for t, x, u in zip(traj.tau, traj.x, traj.u):
        norm = float(u @ field.raw(x) @ u) - 1.0
        em.add(tau=t, x1=x[0], x2=x[1], x3=x[2], x4=x[3], u1=u[0], u2=u[1], u3=u[2], u4=u[3], norm_error=norm)
    _write(args, em.render())
    return EXIT_OK


def cmd_planets(args):
    consts = _constants(args)
    rows = orbits.planet_table(_planets(args), consts)
    em = Emitter(
        args.format, ["name", "dphi_per_rev_arcsec", "dphi_per_century_arcsec", "v_min_kms", "v_max_kms", "status"]
    )
    for r in rows:
        em.add(
            name=r.name,
            dphi_per_rev_arcsec=r.dphi_per_rev,
            dphi_per_century_arcsec=r.dphi_per_century,
            v_min_kms=r.v_min,
            v_max_kms=r.v_max,
            status="ok" if not r.error else f"error: {r.error}",
        )
    _write(args, em.render())
    bad = [r.name for r in rows if r.error]
    if bad:
        raise CliError("check-failed", f"rows failed: {', '.join(bad)}", EXIT_CHECK)
    return EXIT_OK


def cmd_radial(args):
    r_M = args.rM
    if not r_M > 0:
        raise CliError("usage", "radial needs --rM > 0")
    if args.from_rest_at_infinity:
        y30, beta30 = math.inf, 0.0
    else:
        if args.y30 is None:
            raise CliError("usage", "radial needs --from-rest-at-infinity or --y30")
        y30, beta30 = args.y30, args.beta30
    y_max = min(args.rmax * r_M, y30)
    grid = np.geomspace(2 * r_M * (1 + 1e-6), y_max, args.grid)
    want_s = args.geometry in ("schwarzschild", "both")
    want_w = args.geometry in ("weak", "both")
    c4 = orbits.schwarzschild_energy(y30, beta30, r_M)
    if want_s:
        try:
            ym = orbits.radial_extremum(c4, r_M).y3m
            if grid[0] < ym < grid[-1]:
                grid = np.unique(np.append(grid, ym))
        except DomainError:
            pass
    columns = ["y3"] + (["beta3_schwarzschild"] if want_s else []) + (["beta3_weak"] if want_w else [])
    em = Emitter(args.format, columns)
    for y in grid:
        row = {"y3": y}
        if want_s:
            row["beta3_schwarzschild"] = orbits.radial_velocity_schwarzschild(y, c4, r_M)
        if want_w:
            row["beta3_weak"] = orbits.radial_velocity_weak(y, y30, beta30, r_M)
        em.add(**row)
    _write(args, em.render())
    return EXIT_OK


def cmd_cosmo(args):
    if args.bigbang:
        model = cosmology.CosmoModel.bigbang(args.sm, args.rhom, args.d)
    else:
        model = cosmology.CosmoModel.uniform(args.rho)
    if args.spectrum:
        try:
            samples = cosmology.read_spectrum_csv(args.spectrum)
        except OSError as exc:
            raise CliError("input", f"cannot read spectrum file: {exc}") from None
        fit = cosmology.spectrum_compare(samples, d=args.d, normalization=args.normalization)
        _write(args, json.dumps(_json_safe(fit.to_dict())) + "\n")
        return EXIT_OK
    sc = cosmology.scale_function(model)
    if model.kind == "bigbang":
        grid = cosmology.log_grid(model.s_m, args.grid)
        drho = lambda s: cosmology.bigbang_density_derivative(model, s)  # noqa: E731
    else:
        if not model.rho > 0:
            grid = np.geomspace(1e-2, 10.0, args.grid)
        else:
            grid = np.geomspace(1e-2, 0.9 * math.sqrt(12 / model.rho), args.grid)
        drho = lambda s: 0.0  # noqa: E731
    em = Emitter(args.format, ["s", "f", "rho", "mu1", "mu4", "continuity_residual"])
    for s in grid:
        mu1, mu4 = cosmology.fl_eigenvalues(sc, s)
        res = cosmology.continuity_residual(sc, model.density, s, drho) if model.kind == "bigbang" else float("nan")
        em.add(s=s, f=sc(s), rho=model.density(s), mu1=mu1, mu4=mu4, continuity_residual=res)
    _write(args, em.render())
    return EXIT_OK


def cmd_flatdemo(args):
    rng = np.random.default_rng(args.seed)
    tol = args.tol if args.tol is not None else 1e-8
    em = Emitter(args.format, ["spec", "point", "max_curvature", "orthogonality_drift", "passed"])
    failed = 0
    for i in range(args.specs):
        spec = flat.random_flat_spec(rng)
        field = flat.flat_frame_metric(spec)
        frame = flat.FlatFrame(spec)
        for x in geometry.sample_points(field, rng, args.grid):
            curv = float(np.max(np.abs(geometry.riemann(field, x).sigma_ab)))
            drift = frame.orthogonality_drift(x[spec.k])
            ok = curv < tol and drift < 1e-10
            failed += not ok
            em.add(spec=i, point=x, max_curvature=curv, orthogonality_drift=drift, passed=ok)
    _write(args, em.render())
    if failed:
        raise CliError("check-failed", f"{failed} grid point(s) are not flat within {tol:g}", EXIT_CHECK)
    return EXIT_OK


def _metric_options(p):
    p.add_argument("--metric", choices=METRICS, required=True)
    p.add_argument("--rM", type=float, default=1.0, help="central mass as a length")
    p.add_argument("--c5", type=float, default=0.0)
    p.add_argument("--c6", type=float, default=0.0)
    p.add_argument("--c7", type=float, default=0.0)
    p.add_argument("--c8", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.0, help="density for general-weak and fl-uniform")
    p.add_argument("--g33", choices=("euclidean", "schwarzschild"), default="euclidean", help="radial part of general-weak")
    p.add_argument("--d", type=float, default=5.4)
    p.add_argument("--sm", type=float, default=1.0)
    p.add_argument("--rhom", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--point", action="append", help="comma-separated coordinates (repeatable)")
    p.add_argument("--grid", type=int, default=10, help="number of sampled points")
    p.add_argument("--tol", type=float, default=None)


def _common(p):
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--output", help="write to this file instead of stdout")


def build_parser():
    parser = _Parser(prog="matfield", description="Metric-field toolkit: curvature, field equations, orbits, cosmology.")
    parser.add_argument("--version", action="version", version=f"matfield {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("curvature", help="Christoffel, curvature and Ricci matrices at points")
    _metric_options(p)
    _common(p)
    p.set_defaults(run=cmd_curvature)

    p = sub.add_parser("verify", help="check R = rho g at sampled or given points")
    _metric_options(p)
    _common(p)
    p.set_defaults(run=cmd_verify)

    p = sub.add_parser("identities", help="run the curvature identity suite")
    _metric_options(p)
    _common(p)
    p.set_defaults(run=cmd_identities)

    p = sub.add_parser("orbit", help="integrate one revolution of a plane orbit")
    p.add_argument("--planet", help="name from the planets file")
    p.add_argument("--p", type=float, help="perihelion distance")
    p.add_argument("--a", type=float, help="aphelion distance")
    p.add_argument("--rM", type=float, default=1.0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--steps", type=int, default=0, help="cap the step at period / steps")
    p.add_argument("--summary", action="store_true", help="compare precession methods instead of the trajectory")
    p.add_argument("--planets", help="planets CSV (default: bundled)")
    p.add_argument("--constants", help="constants file (default: bundled)")
    _common(p)
    p.set_defaults(run=cmd_orbit)

    p = sub.add_parser("planets", help="precession and extreme velocities for each planet")
    p.add_argument("--planets", help="planets CSV (default: bundled)")
    p.add_argument("--constants", help="constants file (default: bundled)")
    _common(p)
    p.set_defaults(run=cmd_planets)

    p = sub.add_parser("radial", help="radial infall velocity profiles")
    p.add_argument("--geometry", choices=("schwarzschild", "weak", "both"), default="both")
    p.add_argument("--rM", type=float, default=1.0)
    p.add_argument("--from-rest-at-infinity", action="store_true")
    p.add_argument("--y30", type=float, help="start radius")
    p.add_argument("--beta30", type=float, default=0.0, help="start velocity (negative for infall)")
    p.add_argument("--grid", type=int, default=200)
    p.add_argument("--rmax", type=float, default=1000.0, help="largest radius in units of rM")
    _common(p)
    p.set_defaults(run=cmd_radial)

    p = sub.add_parser("cosmo", help="scale function, density and eigenvalues on a grid, or a spectrum fit")
    p.add_argument("--bigbang", action="store_true")
    p.add_argument("--d", type=float, default=5.4)
    p.add_argument("--sm", type=float, default=1.0)
    p.add_argument("--rhom", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=0.12, help="density of the uniform model")
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--spectrum", help="CSV with header s,intensity to fit")
    p.add_argument("--normalization", type=float, default=1.0)
    _common(p)
    p.set_defaults(run=cmd_cosmo)

    p = sub.add_parser("flatdemo", help="curvature of random flat-frame metrics")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--specs", type=int, default=5)
    p.add_argument("--grid", type=int, default=10)
    p.add_argument("--tol", type=float, default=None)
    _common(p)
    p.set_defaults(run=cmd_flatdemo)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        for name in ("grid", "specs", "steps"):
            v = getattr(args, name, None)
            if v is not None and v < 0:
                raise CliError("usage", f"--{name} must be non-negative")
        tol = getattr(args, "tol", None)
        if tol is not None and not tol > 0:
            raise CliError("usage", "--tol must be positive")
        return args.run(args)
    except CliError as exc:
        print(f"ERROR:{exc.code}:{exc}", file=sys.stderr)
        return exc.exit_code
    except DomainError as exc:
        print(f"ERROR:domain:{exc}", file=sys.stderr)
        return EXIT_USAGE
    except matcore.SingularMatrixError as exc:
        print(f"ERROR:singular:{exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalQualityError, matcore.EigenError, orbits.DivergenceError) as exc:
        print(f"ERROR:numerical:{exc}", file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        print(f"ERROR:input:{exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
