"""JSON files for measures and model data.

A measure file looks like::

    {
      "schema_version": 1,
      "grid": {"T": 1.0, "d": 2, "nt": 8, "nx": 8},
      "growth": {"kind": "quadratic"},
      "background": [0.0, 0.0],
      "cells": [
        {"index": [0, 3, 5], "atoms": [[1.0, 0.0, 0.5], [-1.0, 0.0, 0.5]],
         "lambda_mass": 0.25, "angle_atoms": [[0.0, 1.0, 1.0]]}
      ]
    }

``index`` is ``[it, ix_1, ..., ix_d]``; ``it = nt`` addresses the
concentration layer at the final time, which carries no phase atoms.  Every
atom row is the phase point followed by its weight.  Cells that are not
listed hold a Dirac at ``background`` and no concentration.

Floats are written with ``repr``, the shortest decimal string that parses
back to the same double, so reading a written file reproduces every array bit
for bit.
"""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema
import numpy as np

from .grid import SpaceTimeGrid
from .growth import growth_from_dict
from .measure import WEIGHT_TOL, DiscreteYoungMeasure, MeasureError

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_ROW = {"type": "array", "items": _NUM, "minItems": 2}

MEASURE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "grid", "growth", "background"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "grid": {
            "type": "object",
            "required": ["T", "d", "nt", "nx"],
            "additionalProperties": False,
            "properties": {
                "T": {"type": "number", "exclusiveMinimum": 0},
                "d": {"type": "integer", "minimum": 1},
                "nt": {"type": "integer", "minimum": 1},
                "nx": {"type": "integer", "minimum": 1},
            },
        },
        "growth": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["quadratic", "power", "isentropic"]},
                "p": _NUM,
                "gamma": _NUM,
            },
        },
        "background": {"type": "array", "items": _NUM, "minItems": 1},
        "cells": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["index"],
                "additionalProperties": False,
                "properties": {
                    "index": {"type": "array", "items": {"type": "integer"}, "minItems": 2},
                    "atoms": {"type": "array", "items": _ROW},
                    "lambda_mass": {"type": "number", "minimum": 0},
                    "angle_atoms": {"type": "array", "items": _ROW},
                },
            },
        },
    },
}

INCOMPRESSIBLE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "model", "v0"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {"const": "incompressible"},
        "v0": {"type": "array", "minItems": 1},
    },
}

COMPRESSIBLE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "model", "gamma", "rho0", "u0"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {"const": "compressible"},
        "gamma": {"type": "number", "exclusiveMinimum": 1},
        "rho0": {"anyOf": [_NUM, {"type": "array", "items": _NUM}]},
        "u0": {"type": "array", "minItems": 1},
    },
}


class FileFormatError(ValueError):
    """Parse or validation failure, with the location inside the document."""


def _where(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _validate(doc, schema, source: str) -> None:
    errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise FileFormatError(f"{source}: {_where(e.absolute_path)}: {e.message}")


def _load(path) -> tuple[dict, str]:
    source = str(path)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FileFormatError(f"{source}: cannot read ({exc.strerror})") from exc
    try:
        doc = json.loads(text, parse_constant=lambda c: _reject_constant(c, source))
    except json.JSONDecodeError as exc:
        raise FileFormatError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return doc, source


def _reject_constant(name, source):
    raise FileFormatError(f"{source}: non-finite number {name} is not allowed")


def dumps(doc: dict) -> str:
    """Deterministic JSON text: fixed key order, shortest round-trip floats."""
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


# -- measures -----------------------------------------------------------------


def measure_to_dict(Y: DiscreteYoungMeasure, background=None) -> dict:
    """Sparse document for ``Y``; cells equal to the background Dirac are omitted."""
    g = Y.grid
    if not g.includes_final_layer:
        raise ValueError("files always describe grids with a final concentration layer")
    if background is None:
        background = Y.atoms[0, int(np.argmax(Y.weights[0]))]
    bg = [float(v) for v in background]
    cells = []
    for i in range(g.n_lambda_cells):
        c = Y.cell(i)
        it, ix = g.unflat_index(i)
        is_bg = i < g.n_cells and len(c.atoms) == 1 and list(c.atoms[0].z) == bg and c.atoms[0].w == 1.0
        if is_bg and c.lambda_mass == 0.0:
            continue
        if i >= g.n_cells and c.lambda_mass == 0.0:
            continue
        entry = {"index": [it, *ix]}
        if i < g.n_cells:
            entry["atoms"] = [[*a.z, a.w] for a in c.atoms]
        if c.lambda_mass > 0:
            entry["lambda_mass"] = c.lambda_mass
            entry["angle_atoms"] = [[*a.theta, a.w] for a in c.angle_atoms]
        cells.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "grid": {"T": g.T, "d": g.d, "nt": g.nt, "nx": g.nx},
        "growth": Y.growth.to_dict(),
        "background": bg,
        "cells": cells,
    }


def measure_from_dict(doc, source: str = "<measure>") -> DiscreteYoungMeasure:
    _validate(doc, MEASURE_SCHEMA, source)
    gb = doc["grid"]
    try:
        grid = SpaceTimeGrid(float(gb["T"]), gb["d"], gb["nt"], gb["nx"])
        growth = growth_from_dict(doc["growth"])
    except (ValueError, KeyError) as exc:
        raise FileFormatError(f"{source}: $.growth / $.grid: {exc}") from exc
    bg = np.array(doc["background"], dtype=float)
    m = bg.size
    n, L = grid.n_cells, grid.n_lambda_cells
    rows = [[(bg, 1.0)] for _ in range(n)]
    lam = np.zeros(L)
    angle_rows = [[] for _ in range(L)]
    seen = set()
    for k, cell in enumerate(doc.get("cells", [])):
        where = f"{source}: $.cells[{k}]"
        idx = cell["index"]
        if len(idx) != grid.d + 1:
            raise FileFormatError(f"{where}.index: expected {grid.d + 1} entries, got {len(idx)}")
        it, ix = idx[0], idx[1:]
        if it < 0:
            raise FileFormatError(f"{where}.index: time index {it} would put lambda-mass on t = 0 or before")
        try:
            i = grid.flat_index(it, ix)
        except (IndexError, ValueError) as exc:
            raise FileFormatError(f"{where}.index: {exc}") from exc
        if i in seen:
            raise FileFormatError(f"{where}.index: cell {idx} listed twice")
        seen.add(i)
        atoms = cell.get("atoms")
        if i < n:
            if not atoms:
                raise FileFormatError(f"{where}.atoms: interior cell needs phase atoms")
            for j, row in enumerate(atoms):
                if len(row) != m + 1:
                    raise FileFormatError(f"{where}.atoms[{j}]: expected {m} coordinates and a weight")
            wsum = sum(row[-1] for row in atoms)
            if abs(wsum - 1.0) > WEIGHT_TOL:
                raise FileFormatError(f"{where}.atoms: weights sum to {wsum!r}, not 1")
            rows[i] = [(np.array(row[:-1], dtype=float), float(row[-1])) for row in atoms]
        elif atoms:
            raise FileFormatError(f"{where}.atoms: final-time cells carry no phase atoms")
        mass = float(cell.get("lambda_mass", 0.0))
        angles = cell.get("angle_atoms", [])
        if mass > 0:
            if not angles:
                raise FileFormatError(f"{where}.angle_atoms: positive lambda_mass needs angle atoms")
            for j, row in enumerate(angles):
                if len(row) != m + 1:
                    raise FileFormatError(f"{where}.angle_atoms[{j}]: expected {m} coordinates and a weight")
            asum = sum(row[-1] for row in angles)
            if abs(asum - 1.0) > WEIGHT_TOL:
                raise FileFormatError(f"{where}.angle_atoms: weights sum to {asum!r}, not 1")
        elif angles:
            raise FileFormatError(f"{where}.angle_atoms: angle atoms without lambda_mass")
        lam[i] = mass
        angle_rows[i] = [(np.array(row[:-1], dtype=float), float(row[-1])) for row in angles]
    K = max(len(r) for r in rows)
    J = max((len(r) for r in angle_rows), default=0)
    atoms = np.zeros((n, K, m))
    weights = np.zeros((n, K))
    for i, r in enumerate(rows):
        for k, (z, w) in enumerate(r):
            atoms[i, k], weights[i, k] = z, w
    angles = np.zeros((L, J, m))
    aw = np.zeros((L, J))
    for i, r in enumerate(angle_rows):
        for j, (z, w) in enumerate(r):
            angles[i, j], aw[i, j] = z, w
    try:
        return DiscreteYoungMeasure(grid, growth, atoms, weights, lam, angles, aw)
    except (MeasureError, ValueError) as exc:
        raise FileFormatError(f"{source}: {exc}") from exc


def write_measure(Y: DiscreteYoungMeasure, path, background=None) -> None:
    Path(path).write_text(dumps(measure_to_dict(Y, background)))


def read_measure(path) -> DiscreteYoungMeasure:
    doc, source = _load(path)
    return measure_from_dict(doc, source)


# -- model data ---------------------------------------------------------------


def data_to_dict(data) -> dict:
    from .compressible import CompressibleData

    if isinstance(data, CompressibleData):
        return {
            "schema_version": SCHEMA_VERSION,
            "model": "compressible",
            "gamma": data.gamma,
            "rho0": [float(v) for v in data.rho0],
            "u0": [[float(v) for v in row] for row in data.u0],
        }
    return {
        "schema_version": SCHEMA_VERSION,
        "model": "incompressible",
        "v0": [[float(v) for v in row] for row in data.v0],
    }


def data_from_dict(doc, grid: SpaceTimeGrid, source: str = "<data>"):
    """Incompressible or compressible initial data on ``grid``.

    ``v0`` / ``u0`` is either one constant vector or one vector per spatial
    cell; ``rho0`` is a number or one value per spatial cell.
    """
    from .compressible import CompressibleData
    from .incompressible import IncompressibleData

    if not isinstance(doc, dict) or doc.get("model") not in ("incompressible", "compressible"):
        raise FileFormatError(f"{source}: $.model: expected 'incompressible' or 'compressible'")
    try:
        if doc["model"] == "incompressible":
            _validate(doc, INCOMPRESSIBLE_SCHEMA, source)
            return IncompressibleData(grid, np.array(doc["v0"], dtype=float))
        _validate(doc, COMPRESSIBLE_SCHEMA, source)
        return CompressibleData(grid, doc["gamma"], np.array(doc["rho0"], dtype=float), np.array(doc["u0"], dtype=float))
    except ValueError as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"{source}: {exc}") from exc


def write_data(data, path) -> None:
    Path(path).write_text(dumps(data_to_dict(data)))


def read_data(path, grid: SpaceTimeGrid):
    doc, source = _load(path)
    return data_from_dict(doc, grid, source)
