"""Command line: ``loopsoliton {periods,verify,curve,scan}``.

A job is described by a flat ``key = value`` file (``--config``) with any
flag overriding the file.  The main artifact (JSON, CSV or SVG) goes to
``--out`` or stdout; the human-readable summary goes to stderr.

Exit codes: 0 ok, 1 config error, 2 degenerate curve, 3 quadrature failure,
4 verification failure, 5 constraint violation.
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
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import elliptic as el
from . import hyperelliptic as hy
from . import soliton as so
from . import suites
from .errors import (
    BranchPointDegeneracy,
    ConstraintViolated,
    DegenerateCurve,
    LoopSolitonError,
    NonConvergence,
    OrderingAmbiguity,
    PoleOnPath,
    SingularMatrix,
)

EXIT_OK, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_QUADRATURE, EXIT_VERIFY, EXIT_CONSTRAINT = range(6)
MODES = ("periods", "verify", "curve", "scan")
FORMATS = ("csv", "json", "svg")
CSV_HEADER = ["s", "X1", "X2", "k_re", "k_im"]


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class JobConfig:
    mode: str | None = None
    genus: int = 1
    g2: complex | None = None
    g3: complex | None = None
    branch_points: tuple | None = None
    delta: object = None
    s_range: object = "period"  # (lo, hi) or the keyword "period"
    t: float = 0.0
    samples: int = 1025
    tol: float | None = None
    seed: int = 0
    out: str | None = None
    format: str | None = None
    delta_grid: tuple | None = None
    normalize: bool = False
    tangent: str = "soliton"
    raw: dict = field(default_factory=dict, compare=False)


# --------------------------------------------------------------------------
# parsing


def _complex(key, text):
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(key, f"cannot read {text!r} as a number") from None


def _real(key, text):
    z = _complex(key, text)
    if z.imag:
        raise ConfigError(key, f"expected a real number, got {text!r}")
    return z.real


def _int(key, text):
    try:
        return int(text.strip())
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def _delta_item(key, text):
    parts = [p for p in text.split(",")]
    return tuple(_complex(key, p) for p in parts) if len(parts) > 1 else _complex(key, parts[0])


def _grid(key, text):
    """Either 'lo:hi:n' (imaginary shifts lo i .. hi i) or an explicit ';'-separated list."""
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(key, "range grids read lo:hi:n")
        lo, hi, n = _real(key, parts[0]), _real(key, parts[1]), _int(key, parts[2])
        if n < 0:
            raise ConfigError(key, "grid size must be nonnegative")
        return tuple(1j * y for y in np.linspace(lo, hi, n)) if n != 1 else (1j * lo,)
    return tuple(_delta_item(key, p) for p in text.split(";") if p.strip())


def _s_range(key, text):
    text = text.strip()
    if text == "period":
        return "period"
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(key, f"expected lo:hi or 'period', got {text!r}")
    lo, hi = _real(key, parts[0]), _real(key, parts[1])
    if not hi > lo:
        raise ConfigError(key, "hi must exceed lo")
    return (lo, hi)


def _bool(key, text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(key, f"expected true/false, got {text!r}")


def _genus(key, text):
    if text.strip() not in ("1", "2"):
        raise ConfigError(key, f"genus must be 1 or 2, got {text!r}")
    return int(text)


def _choice(options):
    def parse(key, text):
        v = text.strip()
        if v not in options:
            raise ConfigError(key, f"expected one of {', '.join(options)}, got {v!r}")
        return v

    return parse


PARSERS = {
    "mode": _choice(MODES),
    "genus": _genus,
    "g2": _complex,
    "g3": _complex,
    "branch_points": lambda k, v: tuple(_complex(k, p) for p in v.split(",")),
    "delta": lambda k, v: _delta_item(k, v),
    "s_range": _s_range,
    "t": _real,
    "samples": _int,
    "tol": _real,
    "seed": _int,
    "out": lambda k, v: v.strip(),
    "format": _choice(FORMATS),
    "delta_grid": _grid,
    "normalize": _bool,
    "tangent": _choice(("soliton", "line", "circle")),
}


def read_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {line!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in PARSERS:
            raise ConfigError(key, "unknown key")
        out[key] = value
    return out


def build_config(raw: dict) -> JobConfig:
    values = {k: PARSERS[k](k, v) for k, v in raw.items() if v is not None}
    cfg = replace(JobConfig(), **values, raw=dict(raw))
    return validate(cfg)


def validate(cfg: JobConfig) -> JobConfig:
    if cfg.mode not in MODES:
        raise ConfigError("mode", "exactly one of periods, verify, curve, scan is required")
    if cfg.samples < 2:
        raise ConfigError("samples", "need at least 2 samples")
    if cfg.tol is not None and not cfg.tol >= 0:
        raise ConfigError("tol", "tolerance must be nonnegative")
    if cfg.tangent == "soliton":
        if cfg.genus == 1 and (cfg.g2 is None or cfg.g3 is None):
            raise ConfigError("g2" if cfg.g2 is None else "g3", "genus 1 needs both g2 and g3")
        if cfg.genus == 2:
            if cfg.branch_points is None:
                raise ConfigError("branch_points", "genus 2 needs five branch points")
            if len(cfg.branch_points) != 5:
                raise ConfigError("branch_points", f"expected 5 values, got {len(cfg.branch_points)}")
    d = cfg.delta
    if d is not None:
        if cfg.genus == 1 and isinstance(d, tuple):
            raise ConfigError("delta", "genus 1 takes a single complex shift")
        if cfg.genus == 2 and not (isinstance(d, tuple) and len(d) == 2):
            raise ConfigError("delta", "genus 2 takes two comma-separated components")
    if cfg.mode == "scan":
        if cfg.delta_grid is None:
            raise ConfigError("delta_grid", "scan needs a delta grid")
        if not cfg.delta_grid:
            raise ConfigError("delta_grid", "grid is empty")
        if cfg.genus == 2:
            grid = tuple(d if isinstance(d, tuple) else (0j, d) for d in cfg.delta_grid)
            cfg = replace(cfg, delta_grid=grid)
    fmt = cfg.format
    allowed = {"periods": ("json",), "verify": ("json", "csv"), "curve": FORMATS, "scan": ("csv", "json")}[cfg.mode]
    if fmt is not None and fmt not in allowed:
        raise ConfigError("format", f"{cfg.mode} writes {' or '.join(allowed)}")
    return cfg


# --------------------------------------------------------------------------
# output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [_jsonable(float(x.real)), _jsonable(float(x.imag))]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_atomic(path: str, text: str):
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: JobConfig, text: str):
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def _sidecar(out: str) -> str:
    p = Path(out)
    return str(p.with_suffix(".meta.json") if p.suffix == ".json" else p.with_suffix(".json"))


def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _complex_text(z) -> str:
    if isinstance(z, tuple):
        return ",".join(_complex_text(c) for c in z)
    z = complex(z) + 0.0  # folds -0.0 into 0.0
    return f"{_g17(z.real)}{'+' if z.imag >= 0 or math.isnan(z.imag) else '-'}{_g17(abs(z.imag))}j"


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _log(msg: str):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# curve setup


def curve_spec(cfg: JobConfig) -> dict:
    if cfg.tangent != "soliton":
        return {"genus": 0, "tangent": cfg.tangent}
    if cfg.genus == 1:
        return {"genus": 1, "g2": cfg.g2, "g3": cfg.g3}
    return {"genus": 2, "branch_points": list(cfg.branch_points)}


def make_curve(cfg: JobConfig):
    if cfg.genus == 1:
        return el.curve_from_invariants(cfg.g2, cfg.g3)
    return hy.curve_from_branch_points(cfg.branch_points)


def _delta(cfg: JobConfig):
    if cfg.delta is not None:
        return cfg.delta
    return 0j if cfg.genus == 1 else (0j, 0j)


# --------------------------------------------------------------------------
# modes


def run_periods(cfg: JobConfig) -> int:
    curve = make_curve(cfg)
    if cfg.genus == 1:
        checks = {
            "legendre_residual": curve.legendre_residual,
            "root_sum": abs(curve.e1 + curve.e2 + curve.e3),
            "im_tau_positive": curve.tau.imag > 0,
        }
        report = {"curve": curve_spec(cfg), "periods": curve.as_dict(), "checks": checks}
    else:
        eig = np.linalg.eigvalsh(curve.tau.imag)
        checks = {
            "tau_symmetry_residual": curve.symmetry_residual,
            "im_tau_eigenvalues": eig,
            "im_tau_posdef": bool(eig.min() > 0),
            "legendre_residual": curve.legendre_residual,
            "legendre_sign": curve.legendre_sign,
            "constraint_residual": curve.constraint_residual,
        }
        report = {"curve": curve_spec(cfg), "periods": curve.as_dict(), "checks": checks}
    for k, v in checks.items():
        _log(f"{k}: {_jsonable(v)}")
    _emit(cfg, dumps(report))
    return EXIT_OK


def run_verify(cfg: JobConfig) -> int:
    curve = make_curve(cfg)
    rows = suites.genus1_suite(curve, cfg.seed) if cfg.genus == 1 else suites.genus2_suite(curve, cfg.seed)
    rows = suites.with_tolerance(rows, cfg.tol)
    if cfg.genus == 2 and abs(curve.constraint_residual) > 1e-10:
        _log("note: a2 != -lambda4/3, soliton rows skipped")
    for r in rows:
        extra = f"  fitted={_complex_text(r.fitted_constant)}" if r.fitted_constant is not None else ""
        _log(f"{'PASS' if r.passed else 'FAIL'}  max={r.max_abs:.3e}  tol={r.tolerance:.1e}  {r.identity_name}{extra}")
    if cfg.format == "csv":
        table = []
        for r in rows:
            c = complex(r.fitted_constant) if r.fitted_constant is not None else None
            table.append(
                [r.identity_name, r.samples, _g17(r.max_abs), _g17(r.mean_abs), _g17(r.tolerance), str(r.passed).lower(),
                 _g17(c.real) if c is not None else "", _g17(c.imag) if c is not None else ""]
            )
        text = _csv(table, ["identity", "samples", "max_abs", "mean_abs", "tolerance", "pass", "fitted_re", "fitted_im"])
    else:
        text = dumps({"curve": curve_spec(cfg), "seed": cfg.seed, "rows": [r.as_dict() for r in rows]})
    _emit(cfg, text)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_VERIFY


def _field(cfg: JobConfig):
    """(tangent, curvature, default window) for the configured job."""
    if cfg.tangent == "line":
        return (lambda s: np.ones_like(np.asarray(s, float), dtype=complex)), (lambda s: np.zeros_like(np.asarray(s, float), dtype=complex)), (0.0, 1.0)
    if cfg.tangent == "circle":
        return (lambda s: np.exp(1j * np.asarray(s, float))), (lambda s: np.ones_like(np.asarray(s, float), dtype=complex)), (0.0, 2 * math.pi)
    curve = make_curve(cfg)
    delta = _delta(cfg)
    if cfg.genus == 1:
        shift = -curve.omega3 / 2 + delta
        tangent = lambda s: el.tangent_g1(np.asarray(s, float), delta, curve)
        curvature = lambda s: 2 * el.mu_g1(np.asarray(s, float) + shift, curve)
        return tangent, curvature, (0.0, 2 * curve.omega1.real)
    hy._require_constraint(curve)
    d = np.asarray(delta, dtype=complex)
    tangent = lambda s: hy.tangent_g2(np.asarray(s, float), cfg.t, d, curve)
    curvature = lambda s: 2 * hy.mu_g2(hy.soliton_argument(np.asarray(s, float), cfg.t, d, curve), curve)
    vec, _ = hy.real_period_g2(curve)
    return tangent, curvature, (0.0, float(vec[1]))


def _window(cfg: JobConfig, default):
    return default if cfg.s_range == "period" else cfg.s_range


def _svg(samples) -> str:
    x = np.array([p.Z.real for p in samples])
    y = -np.array([p.Z.imag for p in samples])  # SVG y grows downward
    lo_x, hi_x, lo_y, hi_y = x.min(), x.max(), y.min(), y.max()
    span = max(hi_x - lo_x, hi_y - lo_y, 1e-12)
    pad = 0.05 * span
    w, h = hi_x - lo_x + 2 * pad, hi_y - lo_y + 2 * pad
    pts = " ".join(f"{a:.9g},{b:.9g}" for a, b in zip(x, y))
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{lo_x - pad:.9g} {lo_y - pad:.9g} {w:.9g} {h:.9g}">\n'
        f'  <polyline fill="none" stroke="black" stroke-width="{span / 300:.6g}" points="{pts}"/>\n'
        "</svg>\n"
    )


def run_curve(cfg: JobConfig) -> int:
    tangent, curvature, default = _field(cfg)
    lo, hi = _window(cfg, default)
    diag = {}
    samples = so.reconstruct_curve(tangent, (lo, hi), cfg.samples, normalize=cfg.normalize, curvature=curvature, diagnostics=diag)
    raw = tangent(np.array([p.s for p in samples]))
    energy = so.panel_energy(curvature, (lo, hi), cfg.samples - 1)
    meta = {
        "curve": curve_spec(cfg),
        "delta": _delta(cfg) if cfg.tangent == "soliton" else None,
        "seed": cfg.seed,
        "t": cfg.t,
        "s_range": [lo, hi],
        "samples": cfg.samples,
        "normalize": cfg.normalize,
        "closure_residual": so.closure_residual(samples),
        "modulus_deviation": so.modulus_deviation(raw),
        "energy": energy,
    }
    _log(f"closure residual: {meta['closure_residual']:.6e}")
    _log(f"modulus deviation: {meta['modulus_deviation']:.6e}")
    _log(f"energy: {energy:.15g}")
    fmt = cfg.format or "csv"
    if fmt == "json":
        doc = dict(meta, samples=[[p.s, p.Z.real, p.Z.imag, p.k.real, p.k.imag] for p in samples], columns=CSV_HEADER)
        _emit(cfg, dumps(doc))
        return EXIT_OK
    if fmt == "csv":
        text = _csv([[_g17(p.s), _g17(p.Z.real), _g17(p.Z.imag), _g17(p.k.real), _g17(p.k.imag)] for p in samples], CSV_HEADER)
    else:
        text = _svg(samples)
    _emit(cfg, text)
    if cfg.out:
        write_atomic(_sidecar(cfg.out), dumps(meta))
    return EXIT_OK


def run_scan(cfg: JobConfig) -> int:
    curve = make_curve(cfg)
    if cfg.genus == 1:
        window = _window(cfg, (0.0, 2 * curve.omega1.real))
        rows = so.reality_scan("g1", curve, cfg.delta_grid, window, cfg.samples, cfg.t)
    else:
        hy._require_constraint(curve)
        window = _window(cfg, None) or (0.0, float(hy.real_period_g2(curve)[0][1]))
        rows = so.reality_scan("g2", curve, cfg.delta_grid, window, cfg.samples, cfg.t)
    best = rows[0]
    _log(f"best delta {_complex_text(best.delta)}: relative deviation {best.relative_deviation:.3e}, closure {best.closure_residual:.3e}")
    if cfg.format == "json":
        doc = {
            "curve": curve_spec(cfg),
            "seed": cfg.seed,
            "s_range": list(window),
            "rows": [
                {"delta": r.delta, "modulus_dev": r.modulus_deviation, "closure_residual": r.closure_residual, "relative_dev": r.relative_deviation}
                for r in rows
            ],
        }
        _emit(cfg, dumps(doc))
    else:
        table = [[_complex_text(r.delta), _g17(r.modulus_deviation), _g17(r.closure_residual), _g17(r.relative_deviation)] for r in rows]
        _emit(cfg, _csv(table, ["delta", "modulus_dev", "closure_residual", "relative_dev"]))
    return EXIT_OK


RUNNERS = {"periods": run_periods, "verify": run_verify, "curve": run_curve, "scan": run_scan}


# --------------------------------------------------------------------------
# entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: config error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loopsoliton", description="Loop-soliton curves from Weierstrass and genus-two sigma functions.")
    p.add_argument("mode", nargs="?", choices=MODES)
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--genus")
    p.add_argument("--g2")
    p.add_argument("--g3")
    p.add_argument("--branch-points", metavar="a,b,c,d,e")
    p.add_argument("--delta")
    p.add_argument("--delta-grid", metavar="lo:hi:n")
    p.add_argument("--s-range", metavar="lo:hi")
    p.add_argument("--t")
    p.add_argument("--samples", metavar="N")
    p.add_argument("--tol", metavar="X")
    p.add_argument("--seed", metavar="N")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--normalize", action="store_const", const="true")
    p.add_argument("--tangent", choices=("soliton", "line", "circle"))
    return p


def load(argv=None) -> JobConfig:
    args = _parser().parse_args(argv)
    raw = read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k != "config" and v is not None}
    if "mode" in flags and "mode" in raw and raw["mode"].strip() != flags["mode"]:
        raise ConfigError("mode", f"config says {raw['mode'].strip()!r} but the command line says {flags['mode']!r}")
    raw.update(flags)
    return build_config(raw)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, ConstraintViolated):
        return EXIT_CONSTRAINT
    if isinstance(exc, (NonConvergence, PoleOnPath)):
        return EXIT_QUADRATURE
    if isinstance(exc, (DegenerateCurve, OrderingAmbiguity, BranchPointDegeneracy, SingularMatrix, LoopSolitonError)):
        return EXIT_DEGENERATE
    raise exc


def main(argv=None) -> int:
    try:
        cfg = load(argv)
        return RUNNERS[cfg.mode](cfg)
    except ConfigError as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG
    except ConstraintViolated as exc:
        _log(f"constraint violated: {exc}")
        return EXIT_CONSTRAINT
    except LoopSolitonError as exc:
        _log(f"{type(exc).__name__}: {exc}")
        return exit_code_for(exc)


def entry():  # console script
    sys.exit(main())


if __name__ == "__main__":
    entry()
