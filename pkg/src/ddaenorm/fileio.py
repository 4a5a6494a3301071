"""JSON serialization of systems and interconnection descriptions.

System files hold the standard-form matrices row-major with full-precision
numbers (shortest round-trip decimals), so write -> read preserves every
matrix bit-exactly and fixtures stay human-diffable.  Delays are
canonicalized at load time: strictly increasing, duplicates merged by summing
their coefficient blocks.
"""

from __future__ import annotations

import json
from importlib import resources

import jsonschema
import numpy as np

from .errors import DimensionError
from .interconnect import (
    PlantBlock,
    StaticDelayController,
    absorb_io_delay,
    close_feedback,
    eliminate_feedthrough,
    from_neutral,
    MERGE_TOL,
)
from .system_model import DdaeSystem

__all__ = [
    "SchemaError",
    "load_system",
    "save_system",
    "system_to_dict",
    "system_from_dict",
    "load_interconnect",
    "build_from_dict",
]


class SchemaError(DimensionError):
    """A file violates the system or interconnect schema."""


def _schema(name: str) -> dict:
    with resources.files("ddaenorm.schemas").joinpath(name).open("r") as fh:
        return json.load(fh)


def _validate(doc, schema_name: str):
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{schema_name}: {exc.message} (at {path})") from exc


def _canonical_delays(A_list, delays):
    """Sort delays increasing and merge duplicates within MERGE_TOL."""
    order = np.argsort(delays, kind="stable")
    merged_tau: list = []
    merged_A: list = []
    for idx in order:
        t = float(delays[idx])
        if merged_tau and abs(t - merged_tau[-1]) <= MERGE_TOL:
            merged_A[-1] = merged_A[-1] + A_list[idx]
        else:
            merged_tau.append(t)
            merged_A.append(np.array(A_list[idx], dtype=float))
    return merged_A, np.array(merged_tau)


def system_from_dict(doc: dict) -> DdaeSystem:
    _validate(doc, "system.schema.json")
    n = doc["n"]
    delays = np.asarray(doc["delays"], dtype=float)
    A_raw = [np.asarray(Ai, dtype=float) for Ai in doc["A"]]
    if len(A_raw) != delays.size + 1:
        raise SchemaError(
            f"A holds {len(A_raw)} matrices but delays has {delays.size} entries "
            "(need one undelayed plus one per delay)"
        )
    for label, M in [("E", np.asarray(doc["E"], dtype=float))] + [
        (f"A[{i}]", Ai) for i, Ai in enumerate(A_raw)
    ]:
        if M.shape != (n, n):
            raise SchemaError(f"{label} has shape {M.shape}, expected ({n}, {n})")
    B = np.asarray(doc["B"], dtype=float)
    C = np.asarray(doc["C"], dtype=float)
    if B.shape[0] != n:
        raise SchemaError(f"B has {B.shape[0]} rows, expected {n}")
    if C.shape[1] != n:
        raise SchemaError(f"C has {C.shape[1]} columns, expected {n}")
    merged_A, tau = _canonical_delays(A_raw[1:], delays)
    return DdaeSystem(
        E=np.asarray(doc["E"], dtype=float),
        A=tuple([A_raw[0]] + merged_A),
        B=B,
        C=C,
        tau=tau,
    )


def system_to_dict(sys: DdaeSystem, name=None, description=None) -> dict:
    doc = {
        "n": sys.n,
        "delays": sys.tau.tolist(),
        "E": sys.E.tolist(),
        "A": [Ai.tolist() for Ai in sys.A],
        "B": sys.B.tolist(),
        "C": sys.C.tolist(),
    }
    meta = {}
    if name is not None:
        meta["name"] = name
    if description is not None:
        meta["description"] = description
    if meta:
        doc["metadata"] = meta
    return doc


def load_system(path) -> DdaeSystem:
    """Read and validate a system file; canonicalizes the delay order."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return system_from_dict(doc)


def save_system(sys: DdaeSystem, path, name=None, description=None) -> None:
    """Write a system file with canonical key order and full precision."""
    with open(path, "w") as fh:
        json.dump(system_to_dict(sys, name, description), fh, indent=2)
        fh.write("\n")


def build_from_dict(doc: dict) -> DdaeSystem:
    """Apply the reduction steps of an interconnect description in order.

    An empty step list passes the plant through as the ODE system
    ``x' = A x + B2 w, z = F x``.  ``close_feedback`` consumes the plant and
    controller sections; ``from_neutral`` replaces the current system with
    the neutral realization given in its own parameters; the remaining steps
    transform the current system.
    """
    _validate(doc, "interconnect.schema.json")
    plant = None
    if "plant" in doc:
        p = doc["plant"]
        plant = PlantBlock(
            A=np.asarray(p["A"], dtype=float),
            B1=np.asarray(p["B1"], dtype=float),
            B2=np.asarray(p["B2"], dtype=float),
            C=np.asarray(p["C"], dtype=float),
            D1=np.asarray(p["D1"], dtype=float),
            F=np.asarray(p["F"], dtype=float),
        )
    controller = None
    if "controller" in doc:
        c = doc["controller"]
        controller = StaticDelayController(K=np.asarray(c["K"], dtype=float), tau=c["tau"])

    sys = None
    for i, step in enumerate(doc["steps"]):
        op = step["op"]
        if op == "close_feedback":
            if plant is None or controller is None:
                raise SchemaError(f"step {i}: close_feedback needs plant and controller sections")
            if sys is not None:
                raise SchemaError(f"step {i}: close_feedback must be the first step")
            sys = close_feedback(plant, controller)
        elif op == "from_neutral":
            for key in ("D", "tau1", "A0", "A1", "tau2", "B", "C"):
                if key not in step:
                    raise SchemaError(f"step {i}: from_neutral requires {key!r}")
            sys = from_neutral(
                D=np.asarray(step["D"], dtype=float), tau1=step["tau1"],
                A0=np.asarray(step["A0"], dtype=float),
                A1=np.asarray(step["A1"], dtype=float), tau2=step["tau2"],
                B=np.asarray(step["B"], dtype=float), C=np.asarray(step["C"], dtype=float),
            )
        elif op == "eliminate_feedthrough":
            if sys is None:
                sys = _plant_passthrough(plant, i)
            if "D2" not in step:
                raise SchemaError(f"step {i}: eliminate_feedthrough requires 'D2'")
            sys = eliminate_feedthrough(sys, np.asarray(step["D2"], dtype=float))
        elif op == "absorb_io_delay":
            if sys is None:
                sys = _plant_passthrough(plant, i)
            for key in ("which", "matrix", "tau"):
                if key not in step:
                    raise SchemaError(f"step {i}: absorb_io_delay requires {key!r}")
            sys = absorb_io_delay(
                sys, step["which"], np.asarray(step["matrix"], dtype=float), step["tau"]
            )
        else:  # pragma: no cover - schema forbids
            raise SchemaError(f"step {i}: unknown op {op!r}")
    if sys is None:
        sys = _plant_passthrough(plant, None)
    return sys


def _plant_passthrough(plant, step_index):
    if plant is None:
        where = "interconnect file" if step_index is None else f"step {step_index}"
        raise SchemaError(f"{where}: no plant section to start from")
    n = plant.n
    return DdaeSystem(
        E=np.eye(n), A=(plant.A.copy(),), B=plant.B2.copy(), C=plant.F.copy(), tau=np.zeros(0)
    )


def load_interconnect(path) -> DdaeSystem:
    """Read an interconnect description and build the resulting system."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    return build_from_dict(doc)
