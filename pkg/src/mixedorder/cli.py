"""Command-line front end.

Usage::

    mixedorder classify --config run.ini [--set model.n=2] [--reproducible]
    mixedorder evolve --config run.ini
    mixedorder probe-norm --config run.ini
    mixedorder diagonalize --config run.ini

Exit codes: 0 success, 1 usage/config error, 2 integrity mismatch,
3 resolution refusal.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArgumentError, IntegrityError, MixedOrderError, ResolutionError

log = logging.getLogger(__name__)

SCHEMA = 1
EXIT_OK, EXIT_CONFIG, EXIT_INTEGRITY, EXIT_RESOLUTION = 0, 1, 2, 3

CATALOG = ("CattaneoInertial", "CattaneoNoInertia", "FourierInertial", "FourierNoInertia", "DampedPlate")
REFERENCE = ("Zero", "Transport", "Heat", "HalfWave")

DEFAULTS = {
    "model": {"variant": "CattaneoInertial", "tau": "1", "mu": "1", "rho": "1", "alpha": "1",
              "n": "1", "reduced": "true"},
    "grid": {"points_per_axis": "1024", "L": "6.283185307179586"},
    "run": {"p": "4", "t": "1", "radii": "16, 32, 64, 128", "packet_c": "", "direction": "",
            "component": "", "center": "", "output": "out", "seed": "0", "dump_states": "false"},
}


class ConfigError(MixedOrderError, ValueError):
    """Invalid configuration value; the message names the field."""


# ----------------------------------------------------------------------------
# configuration


def _number(text, where):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {text!r}") from None


def _numbers(text, where):
    text = text.strip()
    if not text:
        return []
    return [_number(x, where) for x in text.replace(";", ",").split(",") if x.strip()]


def _bool(text, where):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    """Sectioned key/value parameters with typed accessors."""

    sections: dict = field(default_factory=dict)

    @classmethod
    def from_string(cls, text):
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"config syntax: {exc}") from None
        sections = {s: dict(DEFAULTS.get(s, {})) for s in DEFAULTS}
        for s in cp.sections():
            if s not in DEFAULTS:
                raise ConfigError(f"unknown config section [{s}]")
            for k, v in cp.items(s):
                if k not in DEFAULTS[s]:
                    raise ConfigError(f"{s}.{k}: unknown key")
                sections[s][k] = v.strip()
        return cls(sections)

    @classmethod
    def from_file(cls, path):
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_string(text)

    def with_overrides(self, overrides):
        sections = {s: dict(v) for s, v in self.sections.items()}
        for item in overrides or ():
            if "=" not in item or "." not in item.split("=", 1)[0]:
                raise ConfigError(f"override {item!r} must look like section.key=value")
            key, value = item.split("=", 1)
            sec, name = key.strip().split(".", 1)
            if sec not in DEFAULTS or name not in DEFAULTS[sec]:
                raise ConfigError(f"{sec}.{name}: unknown key")
            sections[sec][name] = value.strip()
        return RunConfig(sections)

    def to_string(self):
        out = io.StringIO()
        for s in sorted(self.sections):
            out.write(f"[{s}]\n")
            for k in sorted(self.sections[s]):
                out.write(f"{k} = {self.sections[s][k]}\n")
            out.write("\n")
        return out.getvalue()

    def digest(self):
        return hashlib.sha256(self.to_string().encode("utf-8")).hexdigest()

    def get(self, sec, key):
        return self.sections[sec][key]

    def number(self, sec, key):
        return _number(self.get(sec, key), f"{sec}.{key}")

    def numbers(self, sec, key):
        return _numbers(self.get(sec, key), f"{sec}.{key}")

    def integer(self, sec, key):
        v = self.number(sec, key)
        if v != int(v):
            raise ConfigError(f"{sec}.{key}: expected an integer, got {self.get(sec, key)!r}")
        return int(v)

    def flag(self, sec, key):
        return _bool(self.get(sec, key), f"{sec}.{key}")


# ----------------------------------------------------------------------------
# models


def reference_symbol(name, n):
    from .symbols import frequency_norm, scalar_symbol, zero_symbol

    if name == "Zero":
        return zero_symbol(n).renamed("Zero")
    if name == "Transport":
        return scalar_symbol(lambda xi: 1j * xi.sum(axis=-1), 1.0, n, name="Transport")
    if name == "Heat":
        return scalar_symbol(lambda xi: -frequency_norm(xi) ** 2, 2.0, n, name="Heat")
    return scalar_symbol(lambda xi: 1j * frequency_norm(xi), 1.0, n, name="HalfWave")


def load_model(cfg):
    """``(symbol, weights, plate_model_or_None)`` from the [model] section."""
    from .reduction import WeightVector
    from .thermoelastic import PlateModel, build_symbol

    variant = cfg.get("model", "variant")
    n = cfg.integer("model", "n")
    if n < 1 or n > 3:
        raise ConfigError("model.n: dimension must be 1, 2 or 3")
    if variant in REFERENCE:
        sym = reference_symbol(variant, n)
        return sym, WeightVector.scalar(0.0), None
    if variant not in CATALOG:
        raise ConfigError(f"model.variant: unknown model {variant!r} (choose from {', '.join(CATALOG + REFERENCE)})")
    params = {k: cfg.number("model", k) for k in ("tau", "mu", "rho", "alpha")}
    # parameters that the variant pins to zero are not user-facing
    if variant in ("FourierInertial", "FourierNoInertia"):
        params["tau"] = 0.0
    if variant in ("CattaneoNoInertia", "FourierNoInertia"):
        params["mu"] = 0.0
    try:
        model = PlateModel(variant, n=n, **params)
    except ArgumentError as exc:
        raise ConfigError(f"model: {exc}") from None
    sym, w = build_symbol(model)
    return sym, w, model


def load_grid(cfg, n):
    from .evolution import FrequencyGrid

    try:
        return FrequencyGrid(n, cfg.integer("grid", "points_per_axis"), cfg.number("grid", "L"))
    except ArgumentError as exc:
        raise ConfigError(f"grid: {exc}") from None


def _p_list(cfg):
    ps = cfg.numbers("run", "p")
    for p in ps:
        if not 1 < p < np.inf:
            raise ConfigError(f"run.p: {p} is not in (1, inf)")
    return ps


def _t_list(cfg):
    ts = cfg.numbers("run", "t")
    if any(t < 0 for t in ts):
        raise ConfigError("run.t: times must be nonnegative")
    return ts


def _vector(cfg, key, n, default):
    v = cfg.numbers("run", key)
    if not v:
        return default
    if len(v) != n:
        raise ConfigError(f"run.{key}: expected {n} entries, got {len(v)}")
    return v


# ----------------------------------------------------------------------------
# output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _atomic_write(path, data):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\r\n")
    wr.writerow(header)
    for row in rows:
        wr.writerow([_fmt(x) for x in row])
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if np.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def write_report(path, payload, cfg, command, reproducible):
    body = {
        "schema": SCHEMA,
        "tool": "mixedorder",
        "version": __version__,
        "command": command,
        "config_hash": cfg.digest(),
        "config": cfg.sections,
    }
    if not reproducible:
        body["created"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    body.update(payload)
    text = json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"
    _atomic_write(path, text.encode("utf-8"))


def _provenance(sym, model):
    return {"name": sym.name, "dim": sym.dim, "size": sym.size,
            "model": model.describe() if model is not None else None}


# ----------------------------------------------------------------------------
# commands


def cmd_classify(cfg, outdir, reproducible):
    from .spectral import classify
    from .thermoelastic import model_verdict

    sym, w, model = load_model(cfg)
    ps = _p_list(cfg)
    seed = cfg.integer("run", "seed")
    if model is not None and model.variant.value == "FourierNoInertia":
        verdict = None
    else:
        verdict = classify(sym, w, sym.dim, seed=seed)
    cross, integrity = [], None
    if model is not None:
        for p in ps:
            try:
                cross.append(model_verdict(model, p, seed=seed).as_dict())
            except IntegrityError as exc:
                integrity = str(exc)
                cross.append({"p": p, "error": str(exc)})
    payload = {
        "symbol": _provenance(sym, model),
        "weights": w.as_list(),
        "verdict": verdict.as_dict() if verdict is not None else {"case": "citation_only"},
        "cross_check": cross,
    }
    if integrity:
        payload["integrity_error"] = integrity
    rows = []
    if verdict is not None and "principal_eigenvalues" in verdict.evidence:
        ev = verdict.evidence["principal_eigenvalues"]
        for d, direction in enumerate(ev["directions"]):
            for k, r in enumerate(ev["radii"]):
                for b, (re, im) in enumerate(ev["values"][d][k]):
                    rows.append([d] + list(direction) + [r, b, re, im])
    n = sym.dim
    header = ["direction"] + [f"eta_{i + 1}" for i in range(n)] + ["radius", "branch", "re", "im"]
    write_csv(outdir / "eigenvalues.csv", header, rows)
    write_report(outdir / "report.json", payload, cfg, "classify", reproducible)
    case = payload["verdict"]["case"]
    print(f"verdict: {case}")
    if integrity:
        print(f"integrity error: {integrity}", file=sys.stderr)
        return EXIT_INTEGRITY
    return EXIT_OK


def _packet_setup(cfg, sym, grid):
    from .evolution import packet_ladder

    n = sym.dim
    radii = cfg.numbers("run", "radii")
    if not radii:
        raise ConfigError("run.radii: at least one carrier radius is required")
    direction = _vector(cfg, "direction", n, None)
    center = _vector(cfg, "center", n, None)
    comp = cfg.numbers("run", "component") or [1.0] * sym.size
    if len(comp) != sym.size:
        raise ConfigError(f"run.component: expected {sym.size} entries, got {len(comp)}")
    c = cfg.get("run", "packet_c").strip()
    c = _number(c, "run.packet_c") if c else None
    return packet_ladder(grid, radii, direction, c, comp, center)


def _evolution_symbol(cfg, sym, w):
    from .reduction import reduce

    return reduce(sym, w) if cfg.flag("model", "reduced") else sym


def cmd_evolve(cfg, outdir, reproducible):
    from .evolution import check_packet, evolve, lp_norm, save_state, synthesize_packet

    sym, w, model = load_model(cfg)
    grid = load_grid(cfg, sym.dim)
    a = _evolution_symbol(cfg, sym, w)
    spec = _packet_setup(cfg, sym, grid)[0]
    check_packet(spec, grid)
    u0 = synthesize_packet(spec, grid, a.size)
    ps, ts = _p_list(cfg), _t_list(cfg)
    dump = cfg.flag("run", "dump_states")
    if dump:
        outdir.mkdir(parents=True, exist_ok=True)
    N = a.size
    rows = []
    base = {p: lp_norm(u0, p)[1] for p in ps}
    for t in ts:
        u = evolve(a, u0, t)
        if dump:
            save_state(outdir / f"state_t{t:.17g}.bin", u)
        for p in ps:
            comp, total = lp_norm(u, p)
            rows.append([t, p] + list(comp) + [total, total / base[p], u.flagged])
    header = ["t", "p"] + [f"norm_component_{i + 1}" for i in range(N)] + ["norm_total", "ratio", "flagged_frequencies"]
    write_csv(outdir / "norms.csv", header, rows)
    write_report(outdir / "report.json", {"symbol": _provenance(a, model), "grid": grid.describe(),
                                          "packet": {"carrier": spec.carrier, "sigma": spec.sigma,
                                                     "center": spec.center,
                                                     "component_vector": spec.component_vector}},
                 cfg, "evolve", reproducible)
    print(f"wrote {len(rows)} rows to {outdir / 'norms.csv'}")
    return EXIT_OK


def cmd_probe_norm(cfg, outdir, reproducible):
    from .propagator import multiplier_growth_probe
    from .thermoelastic import stated_verdict

    sym, w, model = load_model(cfg)
    grid = load_grid(cfg, sym.dim)
    a = _evolution_symbol(cfg, sym, w)
    ladder = _packet_setup(cfg, sym, grid)
    N = a.size
    rows, summary = [], []
    for p in _p_list(cfg):
        for t in _t_list(cfg):
            res = multiplier_growth_probe(a, p, t, ladder, grid)
            for r in res.rows:
                rows.append([r.R, r.p, r.t] + list(r.ratio_components) +
                            [r.ratio_total, r.ratio_dual, r.ratio, r.flagged_frequencies])
            entry = {"p": p, "t": t, "beta": res.beta, "blowup_evidence": res.blowup,
                     "fit_radii": res.table.fit_radii, "duality_agreement": res.table.duality_ok}
            if model is not None:
                expected = stated_verdict(model, p)
                entry["stated_well_posed"] = expected
                entry["consistent"] = bool(expected != res.blowup)
            summary.append(entry)
    header = (["R", "p", "t"] + [f"ratio_component_{i + 1}" for i in range(N)] +
              ["ratio_total", "ratio_dual", "ratio", "flagged_frequencies"])
    write_csv(outdir / "growth.csv", header, rows)
    write_report(outdir / "report.json", {"symbol": _provenance(a, model), "grid": grid.describe(),
                                          "probes": summary}, cfg, "probe-norm", reproducible)
    for e in summary:
        print(f"p={_fmt(e['p'])} t={_fmt(e['t'])} beta={e['beta']:.4f}")
    return EXIT_OK


def cmd_diagonalize(cfg, outdir, reproducible):
    from .spectral import classify
    from .thermoelastic import approximate_diagonalize, diagonal_branch_symbols, residual_bound

    sym, w, model = load_model(cfg)
    if model is None or model.variant.value != "FourierInertial":
        raise ConfigError("model.variant: diagonalize requires FourierInertial")
    mu, n = model.mu, model.n
    radii = np.geomspace(2 / np.sqrt(mu), 1e3 / np.sqrt(mu), 32)
    ladder = []
    for r in radii:
        d = approximate_diagonalize(mu, r)
        ladder.append({"radius": r, "identity_residual": d.identity_residual,
                       "threshold": 1e-10 * d.scale, "inverse_residual": d.inverse_residual})
    rb = residual_bound(mu, radii)
    branches = []
    for s in diagonal_branch_symbols(mu, n):
        v = classify(s, None, n, seed=cfg.integer("run", "seed"))
        branches.append({"branch": s.name, "case": v.case.value, "order": v.order})
    verdicts = []
    for p in _p_list(cfg):
        perm = [classify(s, None, n).permits(p) for s in diagonal_branch_symbols(mu, n)]
        ok = all(perm)
        verdicts.append({"p": p, "n": n, "well_posed": ok,
                         "verdict": "well-posed" if ok else "not well-posed"})
    payload = {"symbol": _provenance(sym, model), "identity_ladder": ladder,
               "residual_bound": {"sup": rb.sup, "exponent": rb.exponent,
                                  "radii": rb.radii, "norms": rb.norms},
               "branches": branches, "verdicts": verdicts}
    write_report(outdir / "report.json", payload, cfg, "diagonalize", reproducible)
    for v in verdicts:
        print(f"n={n} p={_fmt(v['p'])}: {v['verdict']}")
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "evolve": cmd_evolve,
    "probe-norm": cmd_probe_norm,
    "diagonalize": cmd_diagonalize,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="mixedorder", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"mixedorder {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="INI file with [model], [grid], [run]")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
        sp.add_argument("--output", help="output directory (overrides run.output)")
        sp.add_argument("--reproducible", action="store_true",
                        help="omit timestamps so reports are byte-stable")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.from_file(args.config).with_overrides(args.set)
        outdir = Path(args.output or cfg.get("run", "output"))
        return COMMANDS[args.command](cfg, outdir, args.reproducible)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResolutionError as exc:
        print(f"resolution refused: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except IntegrityError as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ArgumentError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
