"""Persistence: field snapshots, tables, reports and run manifests.

Every file written here carries the digest of the run manifest (command,
arguments, configuration, tool version and input digests).  Floats in
tables use 17 significant digits; exact rationals are ``"n/d"`` strings.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .fourier import FourierField, SymmetryClass

FIELD_FORMAT_2D = "filament-waves/field-2d"
FIELD_FORMAT_1D = "filament-waves/field-1d"


def fmt_float(x) -> str:
    return format(float(x), ".17e")


def fmt_cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    return str(value)


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (tuple, set, frozenset)):
        return list(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass
class RunManifest:
    command: str
    arguments: dict
    config: dict = field(default_factory=dict)
    version: str = __version__
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_clock: float = 0.0
    started: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path):
        self.inputs[str(path)] = sha256_file(path)

    @property
    def digest(self) -> str:
        """Digest of everything that determines the outputs (not the outputs or timing)."""
        core = {"command": self.command, "arguments": self.arguments, "config": self.config,
                "version": self.version, "inputs": self.inputs}
        return sha256_bytes(canonical_json(core).encode())

    def record_output(self, path):
        self.outputs[Path(path).name] = sha256_file(path)

    def as_dict(self) -> dict:
        return {"command": self.command, "arguments": self.arguments, "config": self.config,
                "version": self.version, "inputs": self.inputs, "outputs": self.outputs,
                "digest": self.digest, "wall_clock_seconds": self.wall_clock}

    def write(self, outdir) -> Path:
        self.wall_clock = time.perf_counter() - self.started
        path = Path(outdir) / "manifest.json"
        path.write_text(canonical_json(self.as_dict()))
        return path


def write_csv(path, header, rows, manifest: RunManifest | None = None) -> Path:
    buf = io.StringIO()
    if manifest is not None:
        buf.write(f"# manifest-digest: {manifest.digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_cell(v) for v in row])
    path = Path(path)
    path.write_text(buf.getvalue())
    if manifest is not None:
        manifest.record_output(path)
    return path


def read_csv(path) -> tuple:
    """Return ``(header, rows)`` skipping ``#`` comment lines; cells stay strings."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    return rows[0], rows[1:]


def write_json(path, obj: dict, manifest: RunManifest | None = None) -> Path:
    doc = dict(obj)
    if manifest is not None:
        doc["manifest_digest"] = manifest.digest
    path = Path(path)
    path.write_text(canonical_json(doc))
    if manifest is not None:
        manifest.record_output(path)
    return path


def read_json(path) -> dict:
    return json.loads(Path(path).read_text())


def field_to_dict(u: FourierField, metadata: dict | None = None) -> dict:
    """Snapshot document of a 2-D field; records ``(j, k, re_x, im_x, re_y, im_y)`` for ``j >= 0``."""
    J, K = u.J, u.K
    records = []
    for j in range(0, J + 1):
        for k in range(-K, K + 1):
            x, y = u.coeffs[0, J + j, K + k], u.coeffs[1, J + j, K + k]
            if x == 0 and y == 0:
                continue
            records.append([j, k, float(x.real), float(x.imag), float(y.real), float(y.imag)])
    return {"format": FIELD_FORMAT_2D, "Jmax": J, "Kmax": K,
            "symmetry": u.symmetry.tag() if u.symmetry else "none",
            "metadata": metadata or {}, "records": records}


def field_from_dict(doc: dict) -> tuple:
    """Inverse of :func:`field_to_dict`; returns ``(field, metadata)``."""
    if doc.get("format") != FIELD_FORMAT_2D:
        raise ValueError(f"not a 2-D field snapshot (format {doc.get('format')!r})")
    J, K = int(doc["Jmax"]), int(doc["Kmax"])
    coeffs = np.zeros((2, 2 * J + 1, 2 * K + 1), complex)
    for j, k, rx, ix, ry, iy in doc["records"]:
        j, k = int(j), int(k)
        if not (0 <= j <= J and abs(k) <= K):
            raise ValueError(f"record ({j},{k}) outside the declared box")
        c = np.array([rx + 1j * ix, ry + 1j * iy])
        coeffs[:, J + j, K + k] = c
        coeffs[:, J - j, K - k] = np.conj(c)
    return FourierField(coeffs, SymmetryClass.from_tag(doc.get("symmetry"))), doc.get("metadata", {})


def profile_to_dict(coeffs: np.ndarray, metadata: dict | None = None, kind: str = "profile") -> dict:
    """1-D snapshot of a real pair ``(x, y)``: records ``(k, re_x, im_x, re_y, im_y)`` for ``k >= 0``."""
    K = (coeffs.shape[1] - 1) // 2
    records = [[k, float(coeffs[0, K + k].real), float(coeffs[0, K + k].imag),
                float(coeffs[1, K + k].real), float(coeffs[1, K + k].imag)]
               for k in range(0, K + 1) if np.any(coeffs[:, K + k] != 0)]
    return {"format": FIELD_FORMAT_1D, "kind": kind, "Kmax": K, "metadata": metadata or {},
            "records": records}


def state_to_dict(w1_hat, w2_hat, t: float, metadata: dict | None = None) -> dict:
    """1-D snapshot of complex ``w1, w2``: records ``(k, re_w1, im_w1, re_w2, im_w2)`` for all ``k``."""
    K = (len(w1_hat) - 1) // 2
    records = [[k, float(w1_hat[K + k].real), float(w1_hat[K + k].imag),
                float(w2_hat[K + k].real), float(w2_hat[K + k].imag)]
               for k in range(-K, K + 1) if w1_hat[K + k] != 0 or w2_hat[K + k] != 0]
    meta = dict(metadata or {})
    meta["t"] = float(t)
    return {"format": FIELD_FORMAT_1D, "kind": "state", "Kmax": K, "metadata": meta,
            "records": records}


def one_d_from_dict(doc: dict) -> tuple:
    """Read a 1-D snapshot; returns ``(kind, a, b, metadata)`` with two complex arrays.

    For ``kind == "profile"`` the arrays are ``x_hat`` and ``y_hat`` (reality
    fills ``k < 0``); for ``kind == "state"`` they are ``w1_hat`` and ``w2_hat``.
    """
    if doc.get("format") != FIELD_FORMAT_1D:
        raise ValueError(f"not a 1-D snapshot (format {doc.get('format')!r})")
    K = int(doc["Kmax"])
    kind = doc.get("kind", "profile")
    first = np.zeros(2 * K + 1, complex)
    second = np.zeros(2 * K + 1, complex)
    for k, r1, i1, r2, i2 in doc["records"]:
        k = int(k)
        if abs(k) > K:
            raise ValueError(f"record k={k} outside the declared box")
        first[K + k], second[K + k] = r1 + 1j * i1, r2 + 1j * i2
        if kind == "profile":
            first[K - k], second[K - k] = r1 - 1j * i1, r2 - 1j * i2
    return kind, first, second, doc.get("metadata", {})


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment.  Keys use ``-`` or ``_``."""
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{n}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out
