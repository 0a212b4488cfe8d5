"""Case-file parsing and on-disk containers.

Two case inputs are supported: the native ``.case.json`` schema and a small
MATPOWER-style subset (``mpc.baseMVA``, ``mpc.bus``, ``mpc.branch`` matrices).
Datasets, checkpoints and reports travel in a common versioned container,
either as JSON or inside a binary frame (magic ``UGCN``, u32 version,
u64 payload length, CRC32, then the payload bytes).  Complex tensors are
stored as separate re/im number arrays so round trips are bit exact.
"""

from __future__ import annotations

import json
import re
import struct
import zlib
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    CorruptFile,
    DanglingBranch,
    ParseError,
    SchemaVersionMismatch,
)
from .grid import DISTRIBUTION, Branch, GridGraph

SCHEMA_VERSION = 1
MAGIC = b"UGCN"
_HEADER = struct.Struct("<4sIQI")

BUILTIN_CASES = ("ieee33", "ieee69", "ieee30", "ieee39")

_CASE_KEYS = {"format", "version", "name", "base_mva", "kind", "root", "buses", "branches"}
_BUS_KEYS = {"id", "p_mw", "q_mvar", "type"}
_BRANCH_KEYS = {"from", "to", "r", "x", "status"}


@dataclass(frozen=True)
class BusRecord:
    id: int
    p_mw: float = 0.0
    q_mvar: float = 0.0
    type: int = 1  # MATPOWER convention: 3 marks the slack/root


@dataclass(frozen=True)
class BranchRecord:
    from_bus: int
    to_bus: int
    r: float
    x: float
    status: int = 1


@dataclass(frozen=True)
class CaseFile:
    name: str
    base_mva: float
    buses: tuple[BusRecord, ...]
    branches: tuple[BranchRecord, ...]
    kind: str | None = None
    root: int | None = None
    warnings: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.base_mva <= 0:
            raise ParseError(f"base_mva must be positive, got {self.base_mva}")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate bus ids in case")
        declared = set(ids)
        for br in self.branches:
            for end in (br.from_bus, br.to_bus):
                if end not in declared:
                    raise DanglingBranch(end)

    def bus(self, bus_id: int) -> BusRecord:
        for b in self.buses:
            if b.id == bus_id:
                return b
        raise KeyError(bus_id)

    def loads_pu(self) -> dict[int, complex]:
        """Net complex demand per bus in per-unit of base_mva."""
        return {b.id: (b.p_mw + 1j * b.q_mvar) / self.base_mva for b in self.buses}


def parse_case(text: str) -> CaseFile:
    """Parse native JSON or the MATPOWER-style subset, sniffing by first character."""
    stripped = text.lstrip()
    if not stripped:
        raise ParseError("empty case text", line=1, col=1)
    if stripped[0] == "{":
        return _parse_case_json(text)
    return _parse_case_matpower(text)


def _parse_case_json(text: str) -> CaseFile:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, col=exc.colno) from exc
    if not isinstance(doc, dict):
        raise ParseError("case document must be a JSON object")
    warnings = [f"ignored unknown case key {k!r}" for k in doc if k not in _CASE_KEYS]
    for req in ("base_mva", "buses", "branches"):
        if req not in doc:
            raise ParseError(f"case document missing required key {req!r}")
    buses = []
    for i, rec in enumerate(doc["buses"]):
        if "id" not in rec:
            raise ParseError(f"bus record {i} missing 'id'")
        warnings += [f"ignored unknown bus key {k!r}" for k in rec if k not in _BUS_KEYS]
        buses.append(
            BusRecord(
                id=int(rec["id"]),
                p_mw=float(rec.get("p_mw", 0.0)),
                q_mvar=float(rec.get("q_mvar", 0.0)),
                type=int(rec.get("type", 1)),
            )
        )
    branches = []
    for i, rec in enumerate(doc["branches"]):
        for req in ("from", "to", "r", "x"):
            if req not in rec:
                raise ParseError(f"branch record {i} missing {req!r}")
        warnings += [f"ignored unknown branch key {k!r}" for k in rec if k not in _BRANCH_KEYS]
        branches.append(
            BranchRecord(
                from_bus=int(rec["from"]),
                to_bus=int(rec["to"]),
                r=float(rec["r"]),
                x=float(rec["x"]),
                status=int(rec.get("status", 1)),
            )
        )
    return CaseFile(
        name=str(doc.get("name", "case")),
        base_mva=float(doc["base_mva"]),
        buses=tuple(buses),
        branches=tuple(branches),
        kind=doc.get("kind"),
        root=None if doc.get("root") is None else int(doc["root"]),
        warnings=tuple(warnings),
    )


_MP_MATRIX = re.compile(r"mpc\.(\w+)\s*=\s*\[", re.MULTILINE)
_MP_SCALAR = re.compile(r"mpc\.(\w+)\s*=\s*([^\[;]+);")


def _parse_case_matpower(text: str) -> CaseFile:
    lines = text.splitlines()
    scalars: dict[str, str] = {}
    matrices: dict[str, list[list[float]]] = {}
    warnings: list[str] = []
    i = 0
    while i < len(lines):
        raw = lines[i]
        line = raw.split("%", 1)[0].strip()
        i += 1
        if not line:
            continue
        m = _MP_MATRIX.match(line)
        if m:
            name = m.group(1)
            rows: list[list[float]] = []
            body = line[m.end():]
            lineno = i
            while True:
                body = body.split("%", 1)[0]
                closed = "]" in body
                body = body.replace("]", " ").replace(";", "\n")
                for rowno, chunk in enumerate(body.split("\n")):
                    vals = chunk.split()
                    if not vals:
                        continue
                    try:
                        rows.append([float(v) for v in vals])
                    except ValueError as exc:
                        raise ParseError(f"bad number in mpc.{name}: {exc}", line=lineno) from exc
                if closed:
                    break
                if i >= len(lines):
                    raise ParseError(f"unterminated matrix mpc.{name}", line=lineno)
                body = lines[i]
                lineno = i + 1
                i += 1
            matrices[name] = rows
            continue
        m = _MP_SCALAR.match(line)
        if m:
            scalars[m.group(1)] = m.group(2).strip().strip("'\"")
            continue
        if line.startswith("function") or line.startswith("mpc"):
            warnings.append(f"ignored line {i}: {line[:40]!r}")
    if "bus" not in matrices or "branch" not in matrices:
        raise ParseError("case text lacks mpc.bus / mpc.branch matrices", line=1)
    for name in matrices:
        if name not in ("bus", "branch"):
            warnings.append(f"ignored matrix mpc.{name}")
    try:
        base = float(scalars.get("baseMVA", "100"))
    except ValueError as exc:
        raise ParseError(f"bad mpc.baseMVA: {scalars['baseMVA']!r}") from exc
    buses = []
    root = None
    for row in matrices["bus"]:
        if len(row) < 4:
            raise ParseError("bus row needs at least [id type Pd Qd]")
        btype = int(row[1])
        if btype == 3 and root is None:
            root = int(row[0])
        buses.append(BusRecord(id=int(row[0]), p_mw=row[2], q_mvar=row[3], type=btype))
    branches = []
    for row in matrices["branch"]:
        if len(row) < 4:
            raise ParseError("branch row needs at least [from to r x]")
        status = int(row[10]) if len(row) > 10 else 1
        branches.append(
            BranchRecord(from_bus=int(row[0]), to_bus=int(row[1]), r=row[2], x=row[3], status=status)
        )
    return CaseFile(
        name=scalars.get("name", "case"),
        base_mva=base,
        buses=tuple(buses),
        branches=tuple(branches),
        root=root,
        warnings=tuple(warnings),
    )


def to_grid_graph(case: CaseFile, kind: str | None = None, root: int | None = None) -> GridGraph:
    """Build a validated GridGraph; out-of-service branches are kept with status 0."""
    kind = kind or case.kind or DISTRIBUTION
    if kind == DISTRIBUTION:
        root = root if root is not None else case.root
        if root is None:
            raise ParseError("distribution graph requires a root bus")
    branches = tuple(
        Branch(
            from_bus=br.from_bus,
            to_bus=br.to_bus,
            impedance=complex(br.r, br.x),
            in_service=bool(br.status),
        )
        for br in case.branches
    )
    return GridGraph(
        bus_ids=tuple(b.id for b in case.buses),
        branches=branches,
        kind=kind,
        root=root if kind == DISTRIBUTION else None,
    )


def serialize_case(case: CaseFile) -> str:
    """Write a CaseFile back to the native JSON schema (parse round trips)."""
    doc = {
        "format": "ugcn-case",
        "version": 1,
        "name": case.name,
        "base_mva": case.base_mva,
        "kind": case.kind,
        "root": case.root,
        "buses": [
            {"id": b.id, "p_mw": b.p_mw, "q_mvar": b.q_mvar, "type": b.type}
            for b in case.buses
        ],
        "branches": [
            {"from": br.from_bus, "to": br.to_bus, "r": br.r, "x": br.x, "status": br.status}
            for br in case.branches
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def load_case(name_or_path: str) -> CaseFile:
    """Load a bundled case by name (ieee33/ieee69/ieee30/ieee39) or any path."""
    if name_or_path in BUILTIN_CASES:
        text = resources.files("ugcn.cases").joinpath(f"{name_or_path}.case.json").read_text()
    else:
        with open(name_or_path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_case(text)


# --------------------------------------------------------------------------
# Versioned containers


def _canonical_payload(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_container(path: str, payload: dict) -> None:
    """Write a payload beneath the versioned frame chosen by file suffix."""
    body = _canonical_payload(payload)
    crc = zlib.crc32(body) & 0xFFFFFFFF
    if str(path).endswith(".bin"):
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, SCHEMA_VERSION, len(body), crc))
            fh.write(body)
    else:
        doc = {"magic": "UGCN", "version": SCHEMA_VERSION, "crc32": crc,
               "payload": json.loads(body.decode("utf-8"))}
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")


def load_container(path: str) -> dict:
    if str(path).endswith(".bin"):
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) < _HEADER.size:
                raise CorruptFile(f"{path}: truncated header")
            magic, version, length, crc = _HEADER.unpack(head)
            if magic != MAGIC:
                raise CorruptFile(f"{path}: bad magic {magic!r}")
            if version != SCHEMA_VERSION:
                raise SchemaVersionMismatch(version, SCHEMA_VERSION)
            body = fh.read(length + 1)
            if len(body) != length:
                raise CorruptFile(f"{path}: payload length mismatch")
        if (zlib.crc32(body) & 0xFFFFFFFF) != crc:
            raise CorruptFile(f"{path}: checksum mismatch")
        return json.loads(body.decode("utf-8"))
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorruptFile(f"{path}: {exc.msg}") from exc
    if not isinstance(doc, dict) or doc.get("magic") != "UGCN":
        raise CorruptFile(f"{path}: not a UGCN container")
    if doc.get("version") != SCHEMA_VERSION:
        raise SchemaVersionMismatch(doc.get("version"), SCHEMA_VERSION)
    payload = doc.get("payload")
    body = _canonical_payload(payload)
    if (zlib.crc32(body) & 0xFFFFFFFF) != doc.get("crc32"):
        raise CorruptFile(f"{path}: checksum mismatch")
    return payload


# --------------------------------------------------------------------------
# Tensor and graph codecs used by dataset/checkpoint payloads


def encode_array(a: np.ndarray) -> dict:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return {"shape": list(a.shape), "re": a.real.ravel().tolist(), "im": a.imag.ravel().tolist()}
    return {"shape": list(a.shape), "re": a.astype(np.float64).ravel().tolist()}


def decode_array(doc: dict) -> np.ndarray:
    shape = tuple(doc["shape"])
    re_part = np.array(doc["re"], dtype=np.float64).reshape(shape)
    if "im" in doc:
        return re_part + 1j * np.array(doc["im"], dtype=np.float64).reshape(shape)
    return re_part


def encode_graph(g: GridGraph) -> dict:
    return {
        "bus_ids": list(g.bus_ids),
        "branches": [
            [br.from_bus, br.to_bus, br.impedance.real, br.impedance.imag, int(br.in_service)]
            for br in g.branches
        ],
        "kind": g.kind,
        "root": g.root,
    }


def decode_graph(doc: dict) -> GridGraph:
    return GridGraph(
        bus_ids=tuple(doc["bus_ids"]),
        branches=tuple(
            Branch(int(f), int(t), complex(re, im), bool(st))
            for f, t, re, im, st in doc["branches"]
        ),
        kind=doc["kind"],
        root=doc["root"],
    )


def save_dataset(path: str, payload: dict) -> None:
    save_container(path, {"kind": "dataset", **payload})


def load_dataset(path: str) -> dict:
    payload = load_container(path)
    if payload.get("kind") != "dataset":
        raise CorruptFile(f"{path}: container does not hold a dataset")
    return payload


def save_checkpoint(path: str, payload: dict) -> None:
    save_container(path, {"kind": "checkpoint", **payload})


def load_checkpoint(path: str) -> dict:
    payload = load_container(path)
    if payload.get("kind") != "checkpoint":
        raise CorruptFile(f"{path}: container does not hold a checkpoint")
    return payload
