"""Command-line front end: ``python -m bubblescreen <subcommand> [options]``.

Configuration is a YAML file whose keys override the defaults printed by
``print-config``.  Every output file starts with the tool version and the
fully resolved configuration, so identical inputs give byte-identical
outputs.
"""

import argparse
import copy
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from . import __version__
from .boundary import BubbleGeometry, discretize
from .errors import BubbleScreenError, ConfigurationError, ConvergenceError, RegimeError
from .lattice_green import EwaldParams, LatticeConfig, Wavenumbers, green_dirichlet
from .layer_ops import LayerPotentialAssembler
from .resonance import DampingModel, MediaConfig, compute_report, reflection

EXIT_OK, EXIT_CONFIG, EXIT_REGIME, EXIT_CONVERGENCE = 0, 2, 3, 4
REPORT_SCHEMA = "bubblescreen.report/1"

CSV_SCHEMAS = {
    "green-eval": ["x", "x_d", "re_G", "im_G", "evaluator", "oracle_error", "status"],
    "resonance": ["omega", "smallest_sv", "smallest_eig_abs"],
    "char-search": ["omega", "smallest_sv", "smallest_eig_abs"],
    "reflection-sweep": ["omega", "re_R", "im_R", "abs_R", "phase"],
    "trends": ["a", "r", "beta", "delta", "C_cap", "M1", "omega_M", "status"],
}

DEFAULTS = {
    "screen": {
        "period": 10.0,
        "shape": "circle",
        "radius": 1.0,
        "standoff": 2.0,
        "semi_axes": None,
        "theta": math.pi / 2,
    },
    "media": {"delta": 1e-3, "v": 1.0, "v_b": 1.0, "rho": 1000.0},
    "ewald": {"splitting": None, "n_images": 5, "q_terms": 15, "p_modes": 5},
    "discretization": {"N": 128},
    "damping": {"eta_other": 0.0},
    "search": {"enabled": False, "range": [0.7, 1.3], "relative": True, "samples": 40},
    "green_eval": {
        "k": 0.5,
        "evaluator": "ewald",
        "source": [0.0, 1.0],
        "points": [[0.3, 2.0], [10.3, 2.0], [1.0, 0.0], [2.5, 4.0]],
    },
    "sweep": {
        "omega": {"start": 0.5, "stop": 1.5, "num": 201, "relative": True},
        "a": [5.0, 10.0, 20.0],
        "r": [1.0],
        "beta": [2.0],
        "delta": [1e-3],
    },
}


@dataclass
class RunConfig:
    """Resolved run configuration (defaults merged with the user's file)."""

    screen: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["screen"]))
    media: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["media"]))
    ewald: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["ewald"]))
    discretization: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["discretization"]))
    damping: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["damping"]))
    search: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["search"]))
    green_eval: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["green_eval"]))
    sweep: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["sweep"]))

    def __post_init__(self):
        # building the typed objects validates every section
        self.lattice()
        self.geometry()
        self.media_config()
        self.ewald_params()
        self.damping_model()
        if self.N < 16 or self.N % 2:
            raise ConfigurationError("discretization.N must be even and >= 16")
        for axis in ("a", "r", "beta", "delta"):
            if not self.sweep.get(axis):
                raise ConfigurationError(f"sweep.{axis} must be a non-empty list")
        om = self.sweep["omega"]
        if om["num"] < 1 or not 0 < om["start"] <= om["stop"]:
            raise ConfigurationError("sweep.omega needs 0 < start <= stop and num >= 1")

    @property
    def N(self):
        return int(self.discretization["N"])

    @property
    def theta(self):
        return float(self.screen["theta"])

    def lattice(self):
        return LatticeConfig(float(self.screen["period"]))

    def geometry(self):
        s = self.screen
        axes = tuple(s["semi_axes"]) if s.get("semi_axes") else None
        return BubbleGeometry(s["shape"], float(s["radius"]), float(s["standoff"]), axes)

    def media_config(self):
        m = self.media
        if "rho_b" in m:
            return MediaConfig(m["rho"], m["rho_b"], m["kappa"], m["kappa_b"], m.get("mu"))
        return MediaConfig.from_contrast(m["delta"], m["v"], m["v_b"], m["rho"], m.get("mu"))

    def ewald_params(self):
        return EwaldParams(**self.ewald)

    def damping_model(self):
        return DampingModel(float(self.damping["eta_other"]))

    def as_dict(self):
        return asdict(self)


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            raise ConfigurationError(f"unknown config key {path}{key}")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, f"{path}{key}.")
        else:
            out[key] = val
    return out


def load_config(path=None):
    """Read a YAML file (or nothing) into a validated :class:`RunConfig`."""
    user = {}
    if path is not None:
        try:
            with open(path) as fh:
                user = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigurationError("config file must hold a mapping")
    merged = _merge(DEFAULTS, user)
    try:
        return RunConfig(**merged)
    except (TypeError, KeyError) as exc:
        raise ConfigurationError(f"malformed config: {exc}") from exc


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _header(cfg):
    return {"tool": "bubblescreen", "version": __version__, "config": cfg.as_dict()}


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def render_csv(cfg, columns, rows):
    buf = io.StringIO()
    buf.write(f"# bubblescreen {__version__}\n")
    buf.write("# config: " + json.dumps(cfg.as_dict(), sort_keys=True) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def render_json(cfg, payload):
    doc = dict(_header(cfg), schema=REPORT_SCHEMA, result=payload)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _emit(args, name, text):
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, name), "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_table(args, cfg, command, rows, stem=None):
    stem = stem or command.replace("-", "_")
    if args.format == "json":
        _emit(args, f"{stem}.json", render_json(cfg, rows))
    else:
        _emit(args, f"{stem}.csv", render_csv(cfg, CSV_SCHEMAS[command], rows))


def _map(fn, items, jobs):
    """Ordered map, in worker processes when ``jobs > 1``."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_green_eval(cfg, oracle=False):
    """Rows of ``G_+(x, y)`` at the configured points, with an optional oracle error."""
    ge = cfg.green_eval
    lat = cfg.lattice()
    wn = Wavenumbers.from_angle(float(ge["k"]), cfg.theta)
    y = tuple(map(float, ge["source"]))
    rows = []
    for pt in ge["points"]:
        x = tuple(map(float, pt))
        row = {"x": x[0], "x_d": x[1], "evaluator": ge["evaluator"]}
        try:
            g = green_dirichlet(lat, wn, x, y, ge["evaluator"], cfg.ewald_params())
            row.update(re_G=g.real, im_G=g.imag, status="ok")
            if oracle:
                ref = green_dirichlet(lat, wn, x, y, "direct")
                row["oracle_error"] = abs(g - ref)
        except RegimeError:
            raise
        except BubbleScreenError as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    return rows


def cmd_resonance(cfg):
    """Resonance report as a JSON-ready dict (curve included when a search ran)."""
    search = None
    if cfg.search["enabled"]:
        search = {k: cfg.search[k] for k in ("range", "relative", "samples")}
    rep = compute_report(cfg.geometry(), cfg.lattice(), cfg.media_config(), cfg.N,
                         cfg.ewald_params(), search, cfg.theta)
    out = rep.as_dict()
    out["media"] = {"delta": rep.media.delta, "v": rep.media.v, "v_b": rep.media.v_b,
                    "weak_contrast": rep.media.weak_contrast}
    out["curve"] = _curve_rows(rep)
    return out


def _curve_rows(rep):
    eig = dict(rep.eig_curve)
    return [{"omega": w, "smallest_sv": s, "smallest_eig_abs": eig.get(w)} for w, s in rep.sv_curve]


def cmd_char_search(cfg):
    cfg = copy.deepcopy(cfg)
    cfg.search["enabled"] = True
    return cmd_resonance(cfg)


def cmd_reflection_sweep(cfg):
    """Rows ``(omega, Re R, Im R, |R|, phase)`` over the configured frequency axis."""
    media = cfg.media_config()
    rep = compute_report(cfg.geometry(), cfg.lattice(), media, cfg.N, cfg.ewald_params(),
                         theta=cfg.theta)
    om = cfg.sweep["omega"]
    omega = np.linspace(om["start"], om["stop"], int(om["num"]))
    if om.get("relative", True):
        omega = omega * rep.omega_M
    R = np.atleast_1d(reflection(omega, rep, media, cfg.damping_model(), cfg.theta))
    return [
        {"omega": float(w), "re_R": float(r.real), "im_R": float(r.imag),
         "abs_R": float(abs(r)), "phase": float(np.angle(r))}
        for w, r in zip(omega, R)
    ]


def _trend_point(job):
    cfg_dict, a, r, beta, deltas = job
    cfg = RunConfig(**cfg_dict)
    base = {"a": a, "r": r, "beta": beta}
    try:
        geom = BubbleGeometry("circle", r, beta)
        lat = LatticeConfig(a)
        geom.check_fits(a)
        media = cfg.media_config()
        rep = compute_report(geom, lat, media, cfg.N, cfg.ewald_params(), theta=cfg.theta)
    except ConfigurationError as exc:
        return [dict(base, delta=d, status=f"skipped: {exc}") for d in deltas]
    rows = []
    for d in deltas:
        w = media.v_b * math.sqrt(d * rep.C_cap / rep.area)
        rows.append(dict(base, delta=d, C_cap=rep.C_cap, M1=rep.M1, omega_M=w, status="ok"))
    return rows


def cmd_trends(cfg, jobs=1):
    """``omega_M`` over the product of the ``a``, ``r`` and ``beta`` sweep axes."""
    sw = cfg.sweep
    jobs_list = [
        (cfg.as_dict(), float(a), float(r), float(b), [float(d) for d in sw["delta"]])
        for a, r, b in itertools.product(sw["a"], sw["r"], sw["beta"])
    ]
    return [row for rows in _map(_trend_point, jobs_list, jobs) for row in rows]


def cmd_self_test(cfg):
    """Fast consistency checks; returns ``(ok, lines)``."""
    lines, ok = [], True

    def check(name, passed, detail):
        nonlocal ok
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    lat = LatticeConfig(10.0)
    wn = Wavenumbers.from_angle(0.4, 1.2)
    x, y = (1.3, 2.2), (0.0, 1.0)
    ge = green_dirichlet(lat, wn, x, y, "ewald")
    gs = green_dirichlet(lat, wn, x, y, "spectral")
    check("ewald-vs-spectral", abs(ge - gs) < 1e-9, f"|diff| = {abs(ge - gs):.2e}")
    bdy = discretize(BubbleGeometry(radius=1.0, standoff=2.0), 64)
    S, K = LayerPotentialAssembler(bdy, lat).operators(0.0)
    asym = np.abs(S - S.T).max()
    check("single-layer-symmetry", asym < 1e-10, f"max |S - S^T| = {asym:.2e}")
    gap = np.abs(np.linalg.eigvals(K) - 0.5).min()
    check("nk-eigenvalue-half", gap < 1e-3, f"distance to 1/2 = {gap:.2e}")
    media = cfg.media_config()
    rep = compute_report(BubbleGeometry(radius=1.0, standoff=2.0), lat, media, 64)
    R = reflection(np.linspace(0.5, 1.5, 50) * rep.omega_M, rep, media)
    dev = np.abs(np.abs(R) - 1).max()
    check("reflection-unimodular", dev < 1e-12, f"max ||R| - 1| = {dev:.2e}")
    return ok, lines


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


_EPILOG = "CSV columns (after two '#' header lines holding version and config):\n" + "\n".join(
    f"  {cmd:17s} {', '.join(cols)}" for cmd, cols in CSV_SCHEMAS.items()
) + (
    "\n\nresonance/char-search write report.json plus curve.csv with --out."
    "\nExit codes: 0 success, 2 config error, 3 regime error (Wood anomaly or"
    "\ndiffraction), 4 convergence failure."
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="bubblescreen",
        description="Periodic bubble screens above a sound-soft plane.",
        epilog=_EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"bubblescreen {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("--out", metavar="DIR", help="write files here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--oracle", action="store_true", help="add slow direct-sum cross-checks")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "green-eval": "evaluate the Dirichlet lattice Green's function at configured points",
        "resonance": "capacity, M1, Minnaert frequency (and characteristic value if enabled)",
        "char-search": "resonance plus the singular-value search",
        "reflection-sweep": "reflection coefficient over the frequency axis",
        "trends": "Minnaert frequency over the a x r x beta x delta sweep",
        "print-config": "print the default (or resolved) configuration",
        "self-test": "quick internal consistency checks",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text, description=text, epilog=_EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    return parser


def _run(args):
    cfg = load_config(args.config)
    cmd = args.command
    if cmd == "print-config":
        _emit(args, "config.yaml", yaml.safe_dump(cfg.as_dict(), sort_keys=True))
    elif cmd == "green-eval":
        _emit_table(args, cfg, cmd, cmd_green_eval(cfg, args.oracle))
    elif cmd in ("resonance", "char-search"):
        report = cmd_resonance(cfg) if cmd == "resonance" else cmd_char_search(cfg)
        curve = report.pop("curve")
        _emit(args, "report.json", render_json(cfg, report))
        if curve and args.out:
            _emit(args, "curve.csv", render_csv(cfg, CSV_SCHEMAS[cmd], curve))
    elif cmd == "reflection-sweep":
        _emit_table(args, cfg, cmd, cmd_reflection_sweep(cfg))
    elif cmd == "trends":
        _emit_table(args, cfg, cmd, cmd_trends(cfg, args.jobs))
    elif cmd == "self-test":
        ok, lines = cmd_self_test(cfg)
        sys.stdout.write("\n".join(lines) + "\n")
        return EXIT_OK if ok else EXIT_CONVERGENCE
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except RegimeError as exc:
        print(f"regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
