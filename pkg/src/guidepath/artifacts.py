"""Deterministic artifact files: canonical JSON, input hashes, gains bundles."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cells import CbfCone, EdgeCell
from .geometry import Polytope2
from .synthesis import Dynamics, EdgeGains

SIG_DIGITS = 12


class ArtifactError(ValueError):
    """Malformed artifact or an artifact chain whose hashes disagree."""


def fmt_float(v: float) -> str:
    """Fixed-precision decimal text for a float (12 significant digits)."""
    v = float(v)
    if not math.isfinite(v):
        raise ArtifactError(f"non-finite value {v!r} in artifact")
    if v == 0.0:
        return "0"
    return f"{v:.{SIG_DIGITS}g}"


def _canon(obj):
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(fmt_float(obj))
        return 0.0 if v == 0.0 else v
    return obj


def dumps(obj) -> str:
    """Canonical JSON: sorted keys, floats at 12 significant digits."""
    return json.dumps(_canon(obj), sort_keys=True, indent=1) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"{path}: invalid JSON ({exc})") from None


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def provenance(**inputs) -> dict:
    """Tool version plus sha256 of each named input file."""
    return {"tool": "guidepath", "version": __version__, "inputs": {k: file_sha256(p) for k, p in sorted(inputs.items())}}


def check_inputs(doc: dict, **inputs) -> None:
    recorded = doc.get("provenance", {}).get("inputs", {})
    for name, path in sorted(inputs.items()):
        want = recorded.get(name)
        if want is None:
            raise ArtifactError(f"artifact does not record a hash for its {name} input")
        got = file_sha256(path)
        if got != want:
            raise ArtifactError(f"{name} file {path} does not match the hash recorded in the artifact")


# -- gains bundle -----------------------------------------------------------


@dataclass
class GainsBundle:
    dynamics: Dynamics
    params: dict
    landmark_ids: tuple
    landmark_table: dict
    gains: dict  # (i, j) -> EdgeGains
    terminal_K: np.ndarray
    root: int
    relaxed: bool = False
    provenance: dict = field(default_factory=dict)

    @property
    def landmark_stack(self) -> np.ndarray:
        return np.concatenate([self.landmark_table[k] for k in self.landmark_ids])

    def cells(self) -> dict:
        return {e: g.cell for e, g in self.gains.items()}

    def K_map(self) -> dict:
        return {e: g.K for e, g in self.gains.items()}

    @property
    def verified(self) -> bool:
        return all(g.verified for g in self.gains.values())


def gains_to_dict(b: GainsBundle) -> dict:
    edges = []
    for (i, j), g in sorted(b.gains.items()):
        edges.append(
            {
                "i": i,
                "j": j,
                "cell": {"A": g.cell.polytope.A, "b": g.cell.polytope.b, "sources": list(g.cell.sources)},
                "exit_dir": g.cell.exit_dir,
                "target": g.cell.target,
                "origin": g.cell.origin,
                "cone": {"A": g.cone.A, "b": g.cone.b, "supports": list(g.cone.supports), "sides": list(g.cone.sides)},
                "K": g.K.reshape(-1),
                "K_shape": list(g.K.shape),
                "S_h": g.S_h,
                "S_V": g.S_V,
                "verified": bool(g.verified),
            }
        )
    doc = {
        "provenance": b.provenance,
        "dynamics": {"A": b.dynamics.A, "B": b.dynamics.B},
        "params": b.params,
        "landmarks": [{"id": k, "pos": b.landmark_table[k]} for k in b.landmark_ids],
        "root": b.root,
        "terminal": {"K": b.terminal_K.reshape(-1), "K_shape": list(b.terminal_K.shape)},
        "edges": edges,
        "verified": bool(b.verified),
    }
    if b.relaxed:
        doc["warning"] = "relaxed synthesis: barrier margins may be positive; not a safety certificate"
    return doc


def gains_from_dict(d: dict) -> GainsBundle:
    try:
        dyn = Dynamics(np.asarray(d["dynamics"]["A"], float), np.asarray(d["dynamics"]["B"], float))
        ids = tuple(str(lm["id"]) for lm in d["landmarks"])
        table = {str(lm["id"]): np.asarray(lm["pos"], float) for lm in d["landmarks"]}
        gains = {}
        for e in d["edges"]:
            edge = (int(e["i"]), int(e["j"]))
            cell = EdgeCell(
                edge,
                Polytope2.from_rows(e["cell"]["A"], e["cell"]["b"]),
                np.asarray(e["exit_dir"], float),
                np.asarray(e["target"], float),
                np.asarray(e["origin"], float),
                tuple(e["cell"]["sources"]),
            )
            cone = CbfCone(
                np.asarray(e["cone"]["A"], float).reshape(-1, 2),
                np.asarray(e["cone"]["b"], float).reshape(-1),
                tuple(np.asarray(s, float) for s in e["cone"]["supports"]),
                tuple(int(s) for s in e["cone"]["sides"]),
            )
            K = np.asarray(e["K"], float).reshape(e["K_shape"])
            gains[edge] = EdgeGains(edge, K, np.asarray(e["S_h"], float).reshape(-1), float(e["S_V"]), ids, cell, cone, bool(e["verified"]))
        term = np.asarray(d["terminal"]["K"], float).reshape(d["terminal"]["K_shape"])
        return GainsBundle(dyn, dict(d["params"]), ids, table, gains, term, int(d["root"]), "warning" in d, d.get("provenance", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"malformed gains document: {exc}") from None
