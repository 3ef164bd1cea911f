"""On-disk formats for permutations, density curves and projections.

Permutation files come in two flavours.  The binary layout is the magic
``KOOPPERM``, a little-endian ``uint32`` header length, a UTF-8 JSON header and
then ``q`` little-endian ``uint64`` targets.  The JSON layout is a single
object ``{"header": ..., "target": [...]}`` and is meant for small grids.

CSV exports use LF line endings, 17 significant digits and a leading
``# config: {...}`` comment that records how the data was produced.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .discretizer import PermutationMap, check_bijection
from .lattice import LatticePartition

MAGIC = b"KOOPPERM"
FORMAT_NAME = "periodic-koopman-permutation"
FORMAT_VERSION = 1
JSON_MAX_CELLS = 100_000


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def permutation_header(perm: PermutationMap) -> dict:
    meta = perm.meta
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "m": perm.partition.m,
        "n_tilde": perm.partition.n_tilde,
        "q": perm.q,
        "map": meta.get("map"),
        "params": meta.get("params", {}),
        "mode": meta.get("mode"),
        "t_used": meta.get("t_used"),
    }


def save_permutation(perm: PermutationMap, path, fmt: str | None = None):
    """Write ``perm``; ``fmt`` is ``"binary"`` or ``"json"`` (default: by file suffix)."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "binary")
    header = permutation_header(perm)
    if fmt == "json":
        if perm.q > JSON_MAX_CELLS:
            raise ValueError(f"JSON permutation files are limited to {JSON_MAX_CELLS} cells")
        path.write_text(_dumps({"header": header, "target": perm.target.tolist()}) + "\n", encoding="utf-8")
    elif fmt == "binary":
        raw = _dumps(header).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(perm.target.astype("<u8").tobytes())
    else:
        raise ValueError(f"unknown permutation format {fmt!r}")


def read_permutation_raw(path) -> tuple[dict, np.ndarray]:
    """Header and target array, without checking that the targets form a bijection."""
    data = Path(path).read_bytes()
    if data.startswith(MAGIC):
        if len(data) < len(MAGIC) + 4:
            raise ValueError("truncated permutation file")
        (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
        start = len(MAGIC) + 4
        header = json.loads(data[start:start + hlen].decode("utf-8"))
        body = data[start + hlen:]
        if len(body) % 8:
            raise ValueError("permutation body is not a whole number of uint64 entries")
        target = np.frombuffer(body, dtype="<u8")
        if len(target) and target.max() >= 2**63:
            raise ValueError("permutation target out of range")
        target = target.astype(np.int64)
    else:
        try:
            obj = json.loads(data.decode("utf-8"))
            header, target = obj["header"], np.asarray(obj["target"], dtype=np.int64)
        except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ValueError(f"not a permutation file: {exc}") from None
    if header.get("format") != FORMAT_NAME:
        raise ValueError(f"unrecognised permutation format {header.get('format')!r}")
    if header.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported permutation format version {header.get('version')!r}")
    return header, target


def load_permutation(path) -> PermutationMap:
    header, target = read_permutation_raw(path)
    part = LatticePartition(int(header["m"]), int(header["n_tilde"]))
    check_bijection(target, part.q)
    meta = {k: header.get(k) for k in ("map", "params", "mode", "t_used")}
    return PermutationMap(part, target, meta)


# -- curves and fields --------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def write_density(path, thetas, rho, config: dict, perm_header: dict | None = None, fmt: str = "csv"):
    thetas = np.asarray(thetas, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if fmt == "csv":
        lines = [f"# config: {_dumps(config)}", "theta,rho"]
        lines += [f"{_fmt(t)},{_fmt(r)}" for t, r in zip(thetas.tolist(), rho.tolist())]
        _write_lines(path, lines)
    elif fmt == "json":
        obj = {"config": config, "permutation": perm_header, "theta": thetas.tolist(), "rho": rho.tolist()}
        _write_lines(path, [_dumps(obj)])
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def write_projection(path, partition: LatticePartition, values, config: dict,
                     perm_header: dict | None = None, fmt: str = "csv"):
    values = np.asarray(values, dtype=complex)
    if values.shape != (partition.q,):
        raise ValueError("projection length does not match the partition")
    if fmt == "csv":
        idx = partition.multi_indices()
        cols = ["linear_index"] + [f"j{i}" for i in range(partition.m)] + ["re", "im"]
        lines = [f"# config: {_dumps(config)}", ",".join(cols)]
        for lin, (j, re, im) in enumerate(zip(idx.tolist(), values.real.tolist(), values.imag.tolist())):
            lines.append(",".join([str(lin), *map(str, j), _fmt(re), _fmt(im)]))
        _write_lines(path, lines)
    elif fmt == "json":
        obj = {"config": config, "permutation": perm_header, "m": partition.m, "n_tilde": partition.n_tilde,
               "re": values.real.tolist(), "im": values.imag.tolist()}
        _write_lines(path, [_dumps(obj)])
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def read_csv(path) -> tuple[dict, list[str], np.ndarray]:
    """Config, column names and numeric body of a CSV written by this module."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# config: "):
            raise ValueError("missing config line")
        config = json.loads(first[len("# config: "):])
        cols = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)
    return config, cols, body
