"""Binary field dumps with a fixed 16-byte header.

Layout: magic "MAFLD\\0" (6 bytes), format version (u16), component
count (u16, 1 for scalar fields and 3 for symmetric matrix fields in
the order p11, p12, p22), grid size n (u32), 2 padding bytes; then the
components as row-major little-endian float64. Values pass through
bit-exactly in both directions.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .fields import ScalarField, SymMatrixField

__all__ = ["MAGIC", "VERSION", "write_field", "read_field", "write_problem_bundle"]

MAGIC = b"MAFLD\x00"
VERSION = 1
_HEADER = struct.Struct("<6sHHI2x")


def write_field(path, field):
    """Dump a ScalarField or SymMatrixField to path."""
    if isinstance(field, ScalarField):
        components = 1
        data = field.values
    elif isinstance(field, SymMatrixField):
        components = 3
        data = field.stack()
    else:
        raise TypeError(f"unsupported field type {type(field).__name__}")
    payload = np.ascontiguousarray(data, dtype="<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, components, field.n))
        fh.write(payload)


def read_field(path):
    """Load a field dump; returns ScalarField or SymMatrixField."""
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, components, n = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a field dump (bad magic {magic!r})")
        if version != VERSION:
            raise ValueError(f"{path}: unsupported format version {version}")
        if components not in (1, 3):
            raise ValueError(f"{path}: unsupported component count {components}")
        expected = 8 * components * n * n
        payload = fh.read(expected + 1)
    if len(payload) != expected:
        raise ValueError(f"{path}: payload size {len(payload)} != expected {expected}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    if components == 1:
        return ScalarField(data.reshape(n, n))
    return SymMatrixField.from_stack(data.reshape(3, n, n))


def write_problem_bundle(out_dir, problem, what=("f", "u", "hessian")):
    """Dump a problem's fields plus a JSON descriptor into out_dir.

    Returns the list of file names written (relative to out_dir).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    sources = {
        "f": problem.f,
        "u": problem.u_exact,
        "hessian": problem.hessian_exact,
    }
    for name in what:
        if name not in sources:
            raise ValueError(f"unknown field selector {name!r}")
        field = sources[name]
        if field is None:
            continue
        write_field(out / f"{name}.bin", field)
        written.append(f"{name}.bin")
    report = problem.report
    descriptor = {
        "epsilon": getattr(problem, "epsilon", None),
        "n": problem.f.n,
        "nu1": report.nu1 if report else None,
        "nu2": report.nu2 if report else None,
        # kappa is inf for non-elliptic problems; JSON has no inf
        "kappa": report.kappa if report and report.elliptic else None,
        "elliptic": report.elliptic if report else None,
        "files": written,
    }
    with open(out / "problem.json", "w", encoding="utf-8") as fh:
        json.dump(descriptor, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append("problem.json")
    return written
