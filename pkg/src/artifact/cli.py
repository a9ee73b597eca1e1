"""Command-line front end.

Every output starts with a config echo: CSV files carry it as a
``# config: {...}`` comment line, JSON files under the ``config`` key.
Exit codes: 0 success, 2 invalid input, 3 a numerical check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .compactification import ChartId, ChartKind, DomainError
from .dynamics import (
    FlowStatus,
    RadialSetId,
    all_radial_sets,
    display_field,
    flow,
    linearize,
    native_chart,
    radial_residual,
)
from .phase_space import (
    FiberChartId,
    FiberKind,
    characteristic_lam,
    characteristic_s,
    characteristic_zeta,
    make_point,
    symbol_p,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3

SCHEMAS = {
    "portrait": {
        "kind": "'field' for grid samples, 'radial' for marked radial-set locations",
        "c1": "first plotted coordinate (s for inftf, -lam for infsf, 2/pi*arctan(t-r) for nf-global)",
        "c2": "second plotted coordinate (signed eta_hat; fiber angle theta for nf-global)",
        "f1": "field component along c1",
        "f2": "field component along c2",
        "rho": "fiber-infinity coordinate solved from the characteristic set",
        "label": "radial-set label on 'radial' rows",
    },
    "flow": {
        "lambda": "flow parameter (continued across chart switches)",
        "chart": "fiber chart kind",
        "base": "base chart kind",
        "sigma": "half-space of the base chart",
        "mirror": "mirror flag of fiber-infinity charts",
        "c1": "rho_nf (or t)",
        "c2": "rho_Tf / rho_Sf (or r)",
        "f1": "xi / rho / tau",
        "f2": "zeta / s / lam / Xi",
        "f3": "angular size",
        "ptilde": "rescaled symbol",
    },
    "flow-batch": {
        "index": "start index",
        "status": "termination status",
        "radial_set": "label of the set reached, if any",
        "max_ptilde": "max |ptilde| along the trace",
        "samples": "number of samples",
    },
    "radial": {
        "label": "radial set family[sheet,halfspace]",
        "chart": "native chart",
        "residual": "max |field| over sampled points on the set",
        "eigenvalues": "eigenvalues of the displayed-field Jacobian (semicolon separated)",
        "classification": "source / sink / saddle / degenerate on the transverse spectrum",
    },
    "propagator": {
        "t": "time",
        "r": "radius",
        "v": "|t| - r",
        "rho": "(|t| + r)^(-1/2)",
        "D": "smooth part of the propagator",
        "asymptotic": "leading null-infinity term",
        "difference": "D - asymptotic",
    },
    "solve1d": {
        "scheme": "spectral or fd",
        "ray": "timelike or null",
        "exponent": "fitted decay exponent of the envelope",
        "r2": "fit R^2",
        "flagged": "True when R^2 < 0.9",
    },
    "thresholds": {"json": "JSON only; see the thresholds module for the row schema"},
}


class ValidationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _config_echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in ("func",):
            continue
        out[k] = v
    return out


def _emit(args, columns, rows, extra=None):
    cfg = _config_echo(args)
    fmt = args.format
    if fmt == "json":
        payload = {"config": cfg, "columns": list(columns), "rows": [dict(zip(columns, r)) for r in rows]}
        if extra:
            payload.update(extra)
        text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    else:
        lines = ["# config: " + json.dumps(cfg, sort_keys=True, default=_json_default)]
        if extra:
            lines.append("# meta: " + json.dumps(extra, sort_keys=True, default=_json_default))
        buf = io.StringIO()
        buf.write("\n".join(lines) + "\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows([_fmt(v) for v in r] for r in rows)
        text = buf.getvalue()
    _write(args.out, text)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def read_config_echo(text: str) -> dict:
    """Recover the config echo from CSV or JSON output."""
    text = text.lstrip()
    if text.startswith("{"):
        return json.loads(text)["config"]
    for line in text.splitlines():
        if line.startswith("# config: "):
            return json.loads(line[len("# config: ") :])
    raise ValueError("no config echo found")


def _floats(s, n=None, name="value"):
    try:
        vals = [float(v) for v in str(s).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from None
    if n is not None and len(vals) not in (n if isinstance(n, tuple) else (n,)):
        raise ValidationError(f"{name}: expected {n} comma-separated numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{name}: values must be finite")
    return vals


def _sign(v, name):
    if v not in (1, -1):
        raise ValidationError(f"{name} must be +1 or -1")
    return v


def _parse_radial_id(text: str) -> RadialSetId:
    t = text.strip().replace("[", "").replace("]", "").replace(",", "")
    if len(t) != 3 or t[0] not in "RNCKA" or any(c not in "+-" for c in t[1:]):
        raise ValidationError(f"radial id must look like 'N++' or 'R[+,-]', got {text!r}")
    sg = lambda c: 1 if c == "+" else -1
    return RadialSetId(t[0], sg(t[1]), sg(t[2]))


# ---------------------------------------------------------------------------
# subcommands


def cmd_portrait(args):
    m = args.mass
    n = args.grid if args.grid is not None else 40
    if n < 0:
        raise ValidationError("--grid must be >= 0")
    chart = args.chart or "inftf"
    rows = []
    marks = []
    if chart == "inftf":
        fc = FiberChartId(FiberKind.INFTF, ChartId(ChartKind.NFTF, 1))
        for s in np.linspace(0.0, 2.0, n) if n else []:
            for h in np.linspace(-1.0, 1.0, n):
                disc = 1 - (s - 1) ** 2 - h * h
                if disc < 0:
                    continue
                rho = math.sqrt(disc) / m
                f = display_field(fc, np.array([0.0, 0.0, rho, s, h]))
                rows.append(("field", float(s), float(h), float(f[3]), float(f[4]), rho, ""))
        for s, h, lab in ((0.0, 0.0, "N[+,+]"), (1.0, 0.0, "R[+,+]"), (2.0, 0.0, "C[+,+]")):
            rho = math.sqrt(max(1 - (s - 1) ** 2 - h * h, 0.0)) / m
            f = display_field(fc, np.array([0.0, 0.0, rho, s, h]))
            marks.append(("radial", s, h, float(f[3]), float(f[4]), rho, lab))
    elif chart == "infsf":
        fc = FiberChartId(FiberKind.INFSF, ChartId(ChartKind.NFSF, 1))
        for ml in np.linspace(-1.0, 3.0, n) if n else []:
            lam = -ml
            for h in np.linspace(-1.0, 1.0, n):
                disc = 1 - 0.25 * (lam + 1) ** 2 - h * h
                if disc < 0:
                    continue
                rho = math.sqrt(disc) / m
                f = display_field(fc, np.array([0.0, 0.0, rho, lam, h]))
                rows.append(("field", float(ml), float(h), float(-f[3]), float(f[4]), rho, ""))
        for ml, h, lab in ((-1.0, 0.0, "N[+,+]"), (1.0, 1.0, "A[+,+]"), (1.0, -1.0, "A[+,+]"), (3.0, 0.0, "K[+,+]")):
            lam = -ml
            rho = math.sqrt(max(1 - 0.25 * (lam + 1) ** 2 - h * h, 0.0)) / m
            f = display_field(fc, np.array([0.0, 0.0, rho, lam, h]))
            marks.append(("radial", ml, h, float(-f[3]), float(f[4]), rho, lab))
    elif chart == "nf-global":
        # fiber infinity over nf, d = 2, in the InfTf chart with a large offset
        # so that v = 1/y - T covers the plotted range; (s, eta) = (1 - cos th, sin th)
        # and dv/dlambda is divided by (v + T)(1 + v^2) to keep the portrait bounded
        T = 100.0
        fc = FiberChartId(FiberKind.INFTF, ChartId(ChartKind.NFTF, 1, T))
        for a in np.linspace(-0.99, 0.99, n) if n else []:
            v = math.tan(0.5 * math.pi * a)
            y = 1.0 / (v + T)
            for th in np.linspace(0.0, 2 * math.pi, n):
                s, h = 1 - math.cos(th), math.sin(th)
                f = display_field(fc, np.array([0.0, y, 0.0, s, h]))
                dv = -f[1] / (y * y)
                da = (2 / math.pi) * dv / ((v + T) * (1 + v * v))
                dth = f[3] * math.sin(th) + f[4] * math.cos(th)
                rows.append(("field", float(a), float(th), float(da), float(dth), 0.0, ""))
        for th, lab in ((0.0, "N[+,+]"), (math.pi, "C[+,+]")):
            marks.append(("radial", float("nan"), th, 0.0, 0.0, 0.0, lab))
    else:
        raise ValidationError("portrait --chart must be inftf, infsf or nf-global")
    cols = ("kind", "c1", "c2", "f1", "f2", "rho", "label")
    _emit(args, cols, (rows + marks) if n else [])
    return EXIT_OK


def _start_point(args):
    chart = args.chart or "desc-nftf"
    m = args.mass
    sigma = _sign(args.sigma, "--sigma")
    sheet = _sign(args.sheet, "--sheet")
    vals = _floats(args.start, (3, 4), "--start")
    c1, c2, f1 = vals[:3]
    h = vals[3] if len(vals) == 4 else 0.0
    if chart in ("desc-nftf", "desc-nfsf"):
        kind = ChartKind.NFTF if chart == "desc-nftf" else ChartKind.NFSF
        fc = FiberChartId(FiberKind.DESC, ChartId(kind, sigma, args.offset))
        if f1 == 0 or -sigma * math.copysign(1, f1) != sheet:
            raise ValidationError("xi must be nonzero with sign -sigma*sheet")
        zeta = float(characteristic_zeta(f1, h, m, kind))
        return make_point(fc, c1, c2, f1, zeta, h)
    if chart in ("inftf", "infsf"):
        mirror = sheet * sigma == -1
        if chart == "inftf":
            fc = FiberChartId(FiberKind.INFTF, ChartId(ChartKind.NFTF, sigma, args.offset), mirror)
            b = float(characteristic_s(f1, h, m, args.branch))
        else:
            fc = FiberChartId(FiberKind.INFSF, ChartId(ChartKind.NFSF, sigma, args.offset), mirror)
            b = float(characteristic_lam(f1, h, m, args.branch))
        return make_point(fc, c1, c2, f1, b, h)
    raise ValidationError("flow --chart must be desc-nftf, desc-nfsf, inftf or infsf")


def _trace_rows(tr, m):
    rows = []
    for lam, p in tr.samples:
        fc = p.fiber_chart
        rows.append(
            (
                float(lam),
                fc.kind.value,
                fc.base.kind.value,
                fc.base.sigma,
                fc.mirror,
                float(p.base.c1),
                float(p.base.c2),
                float(p.f1),
                float(p.f2),
                float(p.f3),
                float(symbol_p(p, m).ptilde),
            )
        )
    return rows


def cmd_flow(args):
    m = args.mass
    tol = args.tol if args.tol is not None else 1e-10
    if args.random:
        # perturbed starts near the d=1 source R[+,-]
        rng = np.random.default_rng(args.seed)
        fc = FiberChartId(FiberKind.DESC, ChartId(ChartKind.NFTF, -1))
        starts = []
        for _ in range(args.random):
            x = rng.uniform(0.2, 0.8)
            y = 10 ** rng.uniform(-5, -3)
            xi = m * (1 + 1e-3 * rng.normal())
            starts.append(make_point(fc, x, y, xi, float(characteristic_zeta(xi, 0.0, m, ChartKind.NFTF)), 0.0))

        lmax = args.lambda_max or 2000.0

        def run(pt):
            return flow(pt, m, args.direction, tol=tol, max_lambda=lmax)

        with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
            traces = list(ex.map(run, starts))
        rows = []
        for i, tr in enumerate(traces):
            rows.append(
                (
                    i,
                    tr.status.value,
                    tr.radial_set.label() if tr.radial_set else "",
                    float(np.max(np.abs(tr.ptilde(m)))),
                    len(tr.samples),
                )
            )
        conv = sum(tr.status is FlowStatus.CONVERGED for tr in traces) / len(traces)
        _emit(args, SCHEMAS["flow-batch"].keys(), rows, {"converged_fraction": conv})
        return EXIT_OK if conv >= 0.95 else EXIT_NUMERIC
    if args.start is None:
        raise ValidationError("flow needs --start or --random")
    try:
        pt = _start_point(args)
        tr = flow(pt, m, args.direction, tol=tol, max_lambda=args.lambda_max or 50.0)
    except (DomainError,) as exc:
        raise ValidationError(str(exc)) from None
    extra = {
        "status": tr.status.value,
        "radial_set": tr.radial_set.label() if tr.radial_set else None,
        "message": tr.message,
        "switches": [[i, a.kind.value + "/" + a.base.kind.value, b.kind.value + "/" + b.base.kind.value] for i, a, b in tr.switches],
    }
    _emit(args, SCHEMAS["flow"].keys(), _trace_rows(tr, m), extra)
    return EXIT_OK


def cmd_radial(args):
    m = args.mass
    tol = args.tol if args.tol is not None else 1e-12
    ids = all_radial_sets(args.dim) if args.id == "all" else [_parse_radial_id(args.id)]
    rows = []
    bad = False
    for rid in ids:
        if rid.family.value == "A" and args.dim < 2:
            raise ValidationError("the A sets need --dim >= 2")
        res = radial_residual(rid, m=m, d=args.dim)
        lin = linearize(rid, m=m, d=args.dim)
        bad |= not res < tol
        ev = ";".join(f"{e.real:.12g}" + (f"{e.imag:+.3g}j" if abs(e.imag) > 1e-12 else "") for e in lin.eigenvalues)
        fc = native_chart(rid)
        rows.append((rid.label(), f"{fc.kind.value}/{fc.base.kind.value}", float(res), ev, lin.classification.value))
    _emit(args, SCHEMAS["radial"].keys(), rows)
    return EXIT_NUMERIC if bad else EXIT_OK


def cmd_propagator(args):
    from .exact_propagator import dpm_smooth, null_tail_asymptotic

    m = args.mass
    sign = _sign(args.sign, "--sign")
    t0, t1, nt = _floats(args.t_range, 3, "--t-range")
    r0, r1, nr = _floats(args.r_range, 3, "--r-range")
    if nt < 1 or nr < 1 or nt != int(nt) or nr != int(nr):
        raise ValidationError("range counts must be positive integers")
    rows = []
    for t in np.linspace(t0, t1, int(nt)):
        for r in np.linspace(r0, r1, int(nr)):
            if r < 0:
                raise ValidationError("r must be >= 0")
            D = float(dpm_smooth(t, r, m, sign))
            v = abs(t) - r
            rho = (abs(t) + r) ** -0.5 if abs(t) + r > 0 else float("inf")
            if v > 0 and sign * t > 0:
                asym = float(null_tail_asymptotic(v, rho, m, sign))
            else:
                asym = 0.0
            rows.append((float(t), float(r), float(v), float(rho), D, asym, D - asym))
    _emit(args, SCHEMAS["propagator"].keys(), rows)
    return EXIT_OK


def _gaussian(spec: str):
    name, _, rest = spec.partition(":")
    if name != "gaussian":
        raise ValidationError("--data must look like gaussian:<width>")
    w = float(rest) if rest else 2.0
    if not w > 0:
        raise ValidationError("gaussian width must be positive")
    return w


def cmd_solve1d(args):
    from .solver1d import Grid1D, Ray, domain_half_width, fd_solve, ray_decay, spectral_trajectory, write_snapshots

    m = args.mass
    w = _gaussian(args.data)
    per_unit = args.grid if args.grid is not None else 20
    if per_unit <= 0:
        raise ValidationError("--grid (nodes per unit length) must be positive")
    if args.t_end <= 0:
        raise ValidationError("--t-end must be positive")
    dx = 1.0 / per_unit
    L = domain_half_width(args.t_end, 6 * w)
    grid = Grid1D.symmetric(L, dx)
    u0 = lambda x: np.exp(-x * x / (2 * w * w))
    times = np.arange(0.0, args.t_end + 1e-9, 0.5)
    trajs = {}
    if args.scheme in ("spectral", "both"):
        trajs["spectral"] = spectral_trajectory(u0, None, times, grid, m)
    if args.scheme in ("fd", "both"):
        trajs["fd"] = fd_solve(u0, None, None, args.t_end, None, grid, m, every=0.5)
    win = (args.t_end / 4, args.t_end)
    rows = []
    ok = True
    for name, tr in trajs.items():
        for label, ray in (("timelike", Ray.timelike(0.0)), ("null", Ray.null(10.0))):
            meas = ray_decay(tr, ray, win)
            rows.append((name, label, meas.fitted_exponent, meas.fit_r2, meas.flagged))
            if label == "timelike":
                ok &= abs(meas.fitted_exponent - 0.5) <= 0.05
            else:
                ok &= meas.fitted_exponent >= 1.5
        if args.snapshots:
            stem, dot, ext = args.snapshots.rpartition(".")
            if not dot:
                stem, ext = ext, "csv"
            path = args.snapshots if len(trajs) == 1 else f"{stem}.{name}.{ext}"
            write_snapshots(tr, path, every=max(1, args.cadence), fmt="npz" if ext == "npz" else "csv")
    _emit(args, SCHEMAS["solve1d"].keys(), rows)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_thresholds(args):
    from .thresholds import SobolevOrders, thresholds_result

    vals = _floats(args.orders, 6, "--orders")
    o = SobolevOrders.from_tuple(vals[0], vals[1:])
    result = thresholds_result(o, args.dim, args.regularizer)
    text = json.dumps({"config": _config_echo(args), "result": result}, indent=2, sort_keys=True, default=_json_default) + "\n"
    _write(args.out, text)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description="Klein-Gordon microlocal toolkit")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mass", type=float, default=1.0)
    common.add_argument("--chart", default=None)
    common.add_argument("--sheet", type=int, default=1)
    common.add_argument("--sigma", type=int, default=1)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--grid", type=int, default=None)
    common.add_argument("--out", default="-")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--schema", action="store_true", help="print the output columns and exit")
    common.add_argument("--dim", type=int, default=2, help="spatial dimension flag (1 or 2+)")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("portrait", parents=[common], help="field samples on the characteristic hyperboloid")
    sp.set_defaults(func=cmd_portrait)

    sp = sub.add_parser("flow", parents=[common], help="integrate the rescaled Hamilton flow")
    sp.add_argument("--start", default=None, help="c1,c2,f1[,eta]; the remaining fiber coordinate is solved")
    sp.add_argument("--offset", type=float, default=0.0)
    sp.add_argument("--branch", type=int, default=-1, choices=(-1, 1))
    sp.add_argument("--direction", type=int, default=1, choices=(-1, 1))
    sp.add_argument("--lambda-max", type=float, default=None, help="default 50, or 2000 with --random")
    sp.add_argument("--random", type=int, default=0, help="run N seeded random starts near R[+,-]")
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("radial", parents=[common], help="radial-set residuals and linearization")
    sp.add_argument("id", nargs="?", default="all")
    sp.set_defaults(func=cmd_radial)

    sp = sub.add_parser("propagator", parents=[common], help="sample the d=3 propagator and its null tail")
    sp.add_argument("--t-range", default="10,20,5")
    sp.add_argument("--r-range", default="0,9,4")
    sp.add_argument("--sign", type=int, default=1)
    sp.set_defaults(func=cmd_propagator)

    sp = sub.add_parser("solve1d", parents=[common], help="1D Klein-Gordon decay measurements")
    sp.add_argument("--data", default="gaussian:2")
    sp.add_argument("--t-end", type=float, default=160.0)
    sp.add_argument("--scheme", choices=("spectral", "fd", "both"), default="both")
    sp.add_argument("--snapshots", default=None, help="snapshot file (csv or .npz)")
    sp.add_argument("--cadence", type=int, default=1, help="keep every n-th snapshot")
    sp.set_defaults(func=cmd_solve1d)

    sp = sub.add_parser("thresholds", parents=[common], help="order-threshold report (JSON)")
    sp.add_argument("--orders", required=False, default="3,0,0,1.5,0,0", help="m,s_Pf,s_nPf,s_Sf,s_nFf,s_Ff")
    sp.add_argument("--regularizer", type=float, default=None)
    sp.set_defaults(func=cmd_thresholds)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.schema:
        key = args.command
        if key == "flow" and getattr(args, "random", 0):
            key = "flow-batch"
        print(json.dumps(SCHEMAS[key], indent=2))
        return EXIT_OK
    try:
        if args.mass <= 0 or not math.isfinite(args.mass):
            raise ValidationError("--mass must be positive")
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        if args.dim < 1:
            raise ValidationError("--dim must be >= 1")
        return args.func(args)
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
