"""Scenario documents, result bundles and their on-disk formats.

Structured data is JSON, time series are CSV. Floats are written with
``repr``, the shortest decimal string that parses back to the same double,
so every write/read cycle is lossless.

Scenario document (``schema_version`` ``"1.0"``)::

    {
      "schema_version": "1.0",
      "generator": {"d": 2, "N": 1, "eig_range": [0, 1], "seed": 7},   # or "set": {...}
      "kappa": 1.0,
      "M_star": [[1.0]],
      "omega0": [1.4],
      "phi0": [0.0],
      "t_span": [0.0, 100.0],
      "integrator": {"rel_tol": 1e-10, ...},
      "n_vec": [1],
      "output_interval": 0.05,
      "checks": ["converged"]
    }
"""

from __future__ import annotations

from dataclasses import dataclass, field
import csv
import hashlib
import io as _io
import json
import os
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, PrequantumError
from .flow import FixedPointReport, IntegratorSettings, Scenario
from .operators import (CommutingSet, EigenTable, commuting_set_from_operators,
                        generate_commuting_set, validate_commuting_set)

__all__ = [
    "SCHEMA_VERSIONS",
    "ScenarioDocument",
    "ResultBundle",
    "commuting_set_to_json",
    "commuting_set_from_json",
    "dumps",
    "load_scenario",
    "parse_scenario_document",
    "scenario_digest",
    "trajectory_to_csv",
    "trajectory_from_csv",
    "table_to_csv",
    "write_results",
    "read_manifest",
]

SCHEMA_VERSIONS = ("1.0",)


def dumps(obj):
    """Deterministic JSON text (sorted keys, two-space indent, trailing newline)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _fmt(x):
    return repr(float(x))


# ----------------------------------------------------------------------------
# commuting sets


def _pairs(matrix):
    return [[float(z.real), float(z.imag)] for z in np.asarray(matrix).ravel()]


def _from_pairs(pairs, d, where):
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (d * d, 2):
        raise ConfigurationError(f"{where}: expected {d * d} [re, im] pairs, got shape {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)


def commuting_set_to_json(cset):
    return {
        "d": cset.dim_hilbert,
        "N": cset.num_beables,
        "operators": [_pairs(a) for a in cset.operators],
        "eigen_table": cset.eigen_table.values.tolist(),
        "eigenbasis": _pairs(cset.eigenbasis),
    }


def commuting_set_from_json(doc, where="set"):
    try:
        d, N = int(doc["d"]), int(doc["N"])
        ops_doc = doc["operators"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{where}: missing or invalid field ({exc})") from None
    if len(ops_doc) != N:
        raise ConfigurationError(f"{where}.operators: expected N={N} operators, got {len(ops_doc)}")
    ops = np.stack([_from_pairs(p, d, f"{where}.operators[{k}]") for k, p in enumerate(ops_doc)])
    if "eigenbasis" in doc and "eigen_table" in doc:
        basis = _from_pairs(doc["eigenbasis"], d, f"{where}.eigenbasis")
        table = np.asarray(doc["eigen_table"], dtype=float)
        if table.shape != (N, d):
            raise ConfigurationError(f"{where}.eigen_table: expected shape ({N}, {d}), got {table.shape}")
        cset = CommutingSet(ops, basis, EigenTable(table))
    else:
        cset = commuting_set_from_operators(ops)
        if "eigen_table" in doc and not np.allclose(np.asarray(doc["eigen_table"], dtype=float),
                                                    cset.eigen_table.values, rtol=0, atol=1e-9):
            raise ConfigurationError(f"{where}.eigen_table does not match the operators' spectrum")
    report = validate_commuting_set(cset, 1e-9)
    if not report.passed:
        raise ConfigurationError(f"{where}: operators are not a valid commuting set ({report})")
    return cset


# ----------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioDocument:
    """Parsed scenario document plus the objects it expands to."""

    raw: dict
    scenario: Scenario
    cset: CommutingSet
    checks: list = field(default_factory=list)

    @property
    def digest(self):
        return scenario_digest(self.raw)


def scenario_digest(raw):
    return hashlib.sha256(json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _require(doc, key, path=""):
    if key not in doc:
        raise ConfigurationError(f"missing field {path}{key}")
    return doc[key]


def _vector(doc, key, N):
    value = np.asarray(_require(doc, key), dtype=float)
    if value.shape != (N,):
        raise ConfigurationError(f"field {key}: expected length N={N}, got shape {value.shape}")
    return value


def parse_scenario_document(doc):
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario document must be a JSON object")
    version = _require(doc, "schema_version")
    if version not in SCHEMA_VERSIONS:
        raise ConfigurationError(f"unknown schema_version {version!r}; known: {SCHEMA_VERSIONS}")
    has_set, has_gen = "set" in doc, "generator" in doc
    if has_set == has_gen:
        raise ConfigurationError("exactly one of 'set' or 'generator' must be present")
    if has_gen:
        gen = doc["generator"]
        try:
            cset = generate_commuting_set(int(gen["d"]), int(gen["N"]),
                                          tuple(gen.get("eig_range", (0.0, 1.0))),
                                          int(gen.get("seed", doc.get("seed", 0))))
        except KeyError as exc:
            raise ConfigurationError(f"missing field generator.{exc.args[0]}") from None
    else:
        cset = commuting_set_from_json(doc["set"])
    N = cset.num_beables

    M = np.asarray(_require(doc, "M_star"), dtype=float)
    if M.shape != (N, N):
        raise ConfigurationError(f"field M_star: expected {N}x{N}, got shape {M.shape}")
    try:
        settings = IntegratorSettings(**doc.get("integrator", {}))
    except TypeError as exc:
        raise ConfigurationError(f"field integrator: {exc}") from None
    n_vec = doc.get("n_vec", [1] * N)
    if len(n_vec) != N:
        raise ConfigurationError(f"field n_vec: expected length N={N}, got {len(n_vec)}")
    t_span = _require(doc, "t_span")
    if len(t_span) != 2:
        raise ConfigurationError("field t_span: expected [t0, t1]")
    scenario = Scenario(
        kappa=float(_require(doc, "kappa")),
        M_star=M,
        omega0=_vector(doc, "omega0", N),
        phi0=_vector(doc, "phi0", N) if "phi0" in doc else np.zeros(N),
        t_span=tuple(t_span),
        integrator=settings,
        n_vec=n_vec,
        seed=int(doc.get("seed", 0)),
        output_interval=float(doc.get("output_interval", 0.05)),
    )
    return ScenarioDocument(doc, scenario, cset, list(doc.get("checks", [])))


def load_scenario(source):
    """Load a scenario from a path or from JSON text.

    Returns a :class:`ScenarioDocument`; ``doc.scenario`` and ``doc.cset``
    are the validated scenario and its commuting set.
    """
    if isinstance(source, (str, os.PathLike)) and not str(source).lstrip().startswith("{"):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read scenario {path}: {exc.strerror}") from None
    else:
        text = str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"scenario parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario_document(doc)


# ----------------------------------------------------------------------------
# results


def trajectory_to_csv(traj):
    N = traj.num_beables
    header = (["t"] + [f"omega_{n + 1}" for n in range(N)]
              + [f"phi_{n + 1}" for n in range(N)] + ["F"])
    rows = np.column_stack([traj.times, traj.omega, traj.phi, traj.field_F])
    return table_to_csv(header, rows)


def table_to_csv(header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, (str, bool, np.bool_)) or isinstance(v, (int, np.integer))
                         else _fmt(v) for v in row])
    return buf.getvalue()


def trajectory_from_csv(text):
    """Parse :func:`trajectory_to_csv` output into ``(times, omega, phi, F)``."""
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    N = (len(header) - 2) // 2
    data = np.array([[float(v) for v in row] for row in reader], dtype=float).reshape(-1, 2 * N + 2)
    return data[:, 0], data[:, 1:N + 1], data[:, N + 1:2 * N + 1], data[:, -1]


@dataclass
class ResultBundle:
    """Everything a run writes: ``{file stem: object}`` per kind."""

    trajectories: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    jsonl: dict = field(default_factory=dict)
    scenario_digest: str = ""


def _report_doc(obj):
    if isinstance(obj, FixedPointReport) or hasattr(obj, "to_json_dict"):
        return obj.to_json_dict()
    return obj


def write_results(bundle, out_dir):
    """Write ``bundle`` to ``out_dir`` and return the manifest dictionary.

    The manifest (``manifest.json``) lists every file with its SHA-256 digest
    in name order, plus the digest of the scenario document.
    """
    out = Path(out_dir)
    files = {}
    for name, traj in bundle.trajectories.items():
        files[f"{name}.csv"] = trajectory_to_csv(traj)
    for name, (header, rows) in bundle.tables.items():
        files[f"{name}.csv"] = table_to_csv(header, rows)
    for name, obj in bundle.reports.items():
        files[f"{name}.json"] = dumps(_report_doc(obj))
    for name, lines in bundle.jsonl.items():
        files[f"{name}.jsonl"] = "".join(line + "\n" for line in lines)
    try:
        out.mkdir(parents=True, exist_ok=True)
        entries = []
        for name in sorted(files):
            data = files[name].encode("utf-8")
            (out / name).write_bytes(data)
            entries.append({"name": name, "sha256": hashlib.sha256(data).hexdigest()})
        manifest = {"files": entries, "scenario_digest": bundle.scenario_digest}
        (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    except OSError as exc:
        raise PrequantumError(f"cannot write results to {exc.filename or out}: {exc.strerror}") from None
    return manifest


def read_manifest(path):
    """Load ``manifest.json`` from a directory or file path."""
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    if not p.is_file():
        raise ConfigurationError(f"manifest not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8")), p.parent
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"manifest {p} is not valid JSON: {exc.msg}") from None
