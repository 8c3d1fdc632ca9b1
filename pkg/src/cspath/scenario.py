"""Scenario and mode-family files (TOML, versioned) and the CSV report format.

Complex numbers in scenario files are either plain numbers or ``[re, im]``
pairs; matrices are lists of rows of such entries.

CSV reports have a header row.  Complex quantities occupy two columns with
``_re``/``_im`` suffixes, floats are written with ``repr`` so they round-trip
exactly, and column types are fixed per schema (see :data:`SCHEMAS`).
"""
from __future__ import annotations

import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import core
from .diagnostics import HS_COLUMNS, SCAN_COLUMNS, ModeFamily
from .errors import DomainError, ValidationError
from .oracles import FockConfig
from .propagator import DEFAULT_REPROJECT_EVERY, DEFAULT_STEPS

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = 1


class ScenarioError(DomainError):
    """Scenario file is unreadable or does not follow the schema."""


@dataclass(frozen=True)
class VerifySettings:
    lambdas: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    green_steps: int = 2000
    fd_eps: float = 1e-5
    trace_fd_eps: float = 1e-4
    tol: float = 1e-6
    theta_tol: float = 1e-12
    phase_tol: float = 1e-7


@dataclass(frozen=True)
class Scenario:
    name: str
    H: core.QuadraticHamiltonian
    v: np.ndarray
    w: np.ndarray
    lam: float = 1.0
    steps: int = DEFAULT_STEPS
    reproject_every: int = DEFAULT_REPROJECT_EVERY
    seed: int = 0
    fock: FockConfig = field(default_factory=FockConfig)
    pi_N: int = 2048
    verify: VerifySettings = field(default_factory=VerifySettings)
    out: Optional[str] = None


# parsing helpers ----------------------------------------------------------

def _complex(x, where):
    if isinstance(x, bool):
        raise ScenarioError(f"{where}: expected a number, got a boolean")
    if isinstance(x, (int, float)):
        z = complex(x)
    elif isinstance(x, list) and len(x) == 2 and all(isinstance(p, (int, float)) for p in x):
        z = complex(x[0], x[1])
    else:
        raise ScenarioError(f"{where}: expected a number or [re, im], got {x!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ScenarioError(f"{where}: value must be finite")
    return z


def _vector(x, where):
    if not isinstance(x, list):
        raise ScenarioError(f"{where}: expected a list")
    return np.array([_complex(e, f"{where}[{i}]") for i, e in enumerate(x)], dtype=complex)


def _matrix(x, where):
    if not isinstance(x, list) or not all(isinstance(r, list) for r in x):
        raise ScenarioError(f"{where}: expected a list of rows")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(x)]
    if len({r.size for r in rows}) > 1:
        raise ScenarioError(f"{where}: ragged matrix")
    return np.array(rows, dtype=complex)


def _real(tbl, key, default=None, where=""):
    if key not in tbl:
        if default is None:
            raise ScenarioError(f"{where}missing required field {key!r}")
        return default
    x = tbl[key]
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ScenarioError(f"{where}{key!r} must be a finite number")
    return float(x)


def _int(tbl, key, default, where=""):
    x = tbl.get(key, default)
    if isinstance(x, bool) or not isinstance(x, int):
        raise ScenarioError(f"{where}{key!r} must be an integer")
    return int(x)


def _load_toml(path):
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    version = data.get("version")
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"{path}: unsupported schema version {version!r} (expected {SCHEMA_VERSION})")
    return data


def build_hamiltonian(spec, seed=0):
    """Construct a Hamiltonian from a ``[hamiltonian]`` table."""
    where = "[hamiltonian] "
    fam = spec.get("family", "constant")
    T = _real(spec, "T", where=where)
    if fam == "constant":
        A = _matrix(spec["A"], "A") if "A" in spec else None
        B = _matrix(spec["B"], "B") if "B" in spec else None
        if A is None and B is None:
            raise ScenarioError(f"{where}constant family needs A and/or B")
        if A is None:
            A = np.zeros_like(B)
        return core.QuadraticHamiltonian.constant(A, B, T, label=spec.get("label", "constant"))
    if fam == "tabulated":
        times = np.array([_real({"t": t}, "t", where=where) for t in spec.get("times", [])])
        A = np.array([_matrix(m, f"A[{i}]") for i, m in enumerate(spec.get("A", []))])
        B = np.array([_matrix(m, f"B[{i}]") for i, m in enumerate(spec.get("B", []))])
        H = core.QuadraticHamiltonian.tabulated(times, A, B, label=spec.get("label", "tabulated"))
        return H if abs(H.T - T) <= 1e-12 else H.window(0.0, T)
    if fam == "single_mode_squeeze":
        return core.single_mode_squeeze(_complex(spec.get("b", 0.0), "b"), T, _real(spec, "omega", 0.0, where))
    if fam == "frequency_sweep":
        return core.frequency_sweep(_real(spec, "omega0", where=where), _real(spec, "omega1", where=where), T)
    if fam in ("random_constant", "random_smooth"):
        n = _int(spec, "n", 2, where)
        if n < 1:
            raise ScenarioError(f"{where}n must be >= 1")
        make = core.random_constant if fam == "random_constant" else core.random_smooth
        return make(n, T, seed, _real(spec, "b_scale", 0.5, where))
    raise ScenarioError(f"{where}unknown family {fam!r}")


def load_scenario(path, seed=None, steps=None, lam=None):
    """Read a scenario file; ``seed``, ``steps`` and ``lam`` override the file."""
    data = _load_toml(path)
    name = data.get("name", Path(path).stem)
    s = _int(data, "seed", 0) if seed is None else int(seed)
    if "hamiltonian" not in data:
        raise ScenarioError(f"{path}: missing [hamiltonian] table")
    H = build_hamiltonian(data["hamiltonian"], s)
    labels = data.get("labels", {})
    v = _vector(labels.get("v", [0.0] * H.n), "v")
    w = _vector(labels.get("w", [0.0] * H.n), "w")
    if v.size != H.n or w.size != H.n:
        raise ValidationError(f"labels must have {H.n} components", "label-dimension")
    lam_ = _real(data, "lambda", 1.0) if lam is None else float(lam)
    if not 0.0 <= lam_ <= 1.0:
        raise ScenarioError("lambda must lie in [0, 1]")
    integ = data.get("integrator", {})
    st = _int(integ, "steps", DEFAULT_STEPS) if steps is None else int(steps)
    if st < 1:
        raise ScenarioError("steps must be >= 1")
    orc = data.get("oracles", {})
    fock = FockConfig(_int(orc, "fock_cutoff", 60), _int(orc, "fock_substeps", 512))
    ver = data.get("verify", {})
    vs = VerifySettings(
        lambdas=tuple(float(x) for x in ver.get("lambdas", VerifySettings.lambdas)),
        green_steps=_int(ver, "green_steps", VerifySettings.green_steps),
        fd_eps=_real(ver, "fd_eps", VerifySettings.fd_eps),
        trace_fd_eps=_real(ver, "trace_fd_eps", VerifySettings.trace_fd_eps),
        tol=_real(ver, "tol", VerifySettings.tol),
    )
    return Scenario(name, H, v, w, lam_, st, _int(integ, "reproject_every", DEFAULT_REPROJECT_EVERY), s,
                    fock, _int(orc, "pi_N", 2048), vs, data.get("output", {}).get("dir"))


def load_family(path):
    """Read a ``[family]`` table; returns ``(ModeFamily, T, tol)``."""
    data = _load_toml(path)
    tbl = data.get("family")
    if not tbl:
        raise ScenarioError(f"{path}: no [family] table")
    cut = tbl.get("cutoffs", [])
    if not cut:
        raise ScenarioError(f"{path}: family has no cutoffs")
    fam = ModeFamily(
        name=tbl.get("name", Path(path).stem),
        b_scale=_complex(tbl.get("b_scale", 0.0), "b_scale"),
        b_power=_real(tbl, "b_power", 0.0),
        a_offset=_real(tbl, "a_offset", 0.0),
        a_slope=_real(tbl, "a_slope", 0.0),
        cutoffs=tuple(_int({"k": k}, "k", None) for k in cut),
    )
    return fam, _real(tbl, "T", where="[family] "), _real(tbl, "tol", 1e-6)


# CSV ----------------------------------------------------------------------

AMPLITUDE_COLUMNS = ("quantity", "re", "im")
VERIFY_COLUMNS = ("check", "residual", "tolerance", "passed")
COMPARE_COLUMNS = ("scenario", "closed_re", "closed_im", "fock_re", "fock_im", "pi_re", "pi_im",
                   "extrapolated_re", "extrapolated_im", "fock_discrepancy", "pi_discrepancy",
                   "extrapolated_discrepancy", "fock_leak")

_TYPES = {"K": int, "verdict": str, "check": str, "scenario": str, "quantity": str,
          "passed": lambda s: s == "true"}

SCHEMAS = {
    "scan": SCAN_COLUMNS,
    "hs": HS_COLUMNS,
    "amplitude": AMPLITUDE_COLUMNS,
    "verify": VERIFY_COLUMNS,
    "compare": COMPARE_COLUMNS,
}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def format_csv(columns, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def write_csv(path, columns, rows):
    write_atomic(path, format_csv(columns, rows))


def parse_csv(text, schema):
    """Parse a report produced by :func:`format_csv` with the columns of ``schema``."""
    columns = SCHEMAS[schema]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != tuple(columns):
        raise ValidationError(f"header {header} does not match the {schema!r} schema", "csv-header")
    out = []
    for line in reader:
        if len(line) != len(columns):
            raise ValidationError(f"row has {len(line)} fields, expected {len(columns)}", "csv-row")
        out.append({c: _TYPES.get(c, float)(s) for c, s in zip(columns, line)})
    return out


def read_csv(path, schema):
    with open(path, newline="") as fh:
        return parse_csv(fh.read(), schema)
