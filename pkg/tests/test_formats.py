import json
import struct

import numpy as np
import pytest

from periodic_koopman import formats, maps
from periodic_koopman.discretizer import PermutationMap, discretize_analytic
from periodic_koopman.lattice import LatticePartition


@pytest.fixture
def perm():
    return discretize_analytic(maps.chirikov(0.15), LatticePartition(2, 16))


@pytest.mark.parametrize("name", ["p.bin", "p.json"])
def test_round_trip(tmp_path, perm, name):
    path = tmp_path / name
    formats.save_permutation(perm, path)
    back = formats.load_permutation(path)
    assert back == perm
    assert back.meta["map"] == perm.meta["map"]
    assert back.meta["params"] == perm.meta["params"]
    header, _ = formats.read_permutation_raw(path)
    assert header == formats.permutation_header(perm)


def test_binary_layout(tmp_path, perm):
    path = tmp_path / "p.bin"
    formats.save_permutation(perm, path)
    data = path.read_bytes()
    assert data[:8] == formats.MAGIC
    (hlen,) = struct.unpack_from("<I", data, 8)
    header = json.loads(data[12:12 + hlen])
    assert header["q"] == perm.q and header["version"] == formats.FORMAT_VERSION
    body = np.frombuffer(data[12 + hlen:], dtype="<u8")
    assert np.array_equal(body, perm.target)


def test_explicit_format_overrides_suffix(tmp_path, perm):
    path = tmp_path / "p.dat"
    formats.save_permutation(perm, path, fmt="json")
    assert json.loads(path.read_text())["target"] == perm.target.tolist()
    with pytest.raises(ValueError):
        formats.save_permutation(perm, path, fmt="xml")


def _tamper(path, fn):
    data = bytearray(path.read_bytes())
    fn(data)
    path.write_bytes(bytes(data))


def test_duplicate_target_rejected(tmp_path, perm):
    path = tmp_path / "p.bin"
    formats.save_permutation(perm, path)
    header, target = formats.read_permutation_raw(path)
    bad = target.copy()
    bad[1] = bad[0]
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 8 * perm.q] + bad.astype("<u8").tobytes())
    _, raw_target = formats.read_permutation_raw(path)
    assert raw_target[1] == raw_target[0]
    with pytest.raises(ValueError, match="bijection"):
        formats.load_permutation(path)


def test_truncated_and_malformed(tmp_path, perm):
    path = tmp_path / "p.bin"
    formats.save_permutation(perm, path)
    good = path.read_bytes()
    for cut in (10, len(good) - 3, len(good) - 8):
        path.write_bytes(good[:cut])
        with pytest.raises(ValueError):
            formats.load_permutation(path)
    path.write_bytes(b"garbage")
    with pytest.raises(ValueError):
        formats.load_permutation(path)


@pytest.mark.parametrize("field,value", [("version", 2), ("format", "other")])
def test_header_checks(tmp_path, perm, field, value):
    path = tmp_path / "p.json"
    formats.save_permutation(perm, path)
    obj = json.loads(path.read_text())
    obj["header"][field] = value
    path.write_text(json.dumps(obj))
    with pytest.raises(ValueError):
        formats.load_permutation(path)


def test_json_size_limit(tmp_path):
    big = PermutationMap.identity(LatticePartition(2, 320))
    assert big.q > formats.JSON_MAX_CELLS
    with pytest.raises(ValueError):
        formats.save_permutation(big, tmp_path / "big.json")


def test_density_csv(tmp_path):
    thetas = np.array([-np.pi, 0.1])
    rho = np.array([1 / 3, 2e-300])
    path = tmp_path / "d.csv"
    formats.write_density(path, thetas, rho, {"alpha": 0.5})
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == '# config: {"alpha":0.5}'
    assert lines[1] == "theta,rho"
    assert lines[2] == "-3.1415926535897931,0.33333333333333331"
    config, cols, body = formats.read_csv(path)
    assert config == {"alpha": 0.5} and cols == ["theta", "rho"]
    assert body[:, 0].tolist() == thetas.tolist() and body[:, 1].tolist() == rho.tolist()


def test_projection_csv_and_json(tmp_path):
    part = LatticePartition(2, 3)
    vals = np.arange(9) * (1 + 0.5j)
    path = tmp_path / "p.csv"
    formats.write_projection(path, part, vals, {"x": 1})
    _, cols, body = formats.read_csv(path)
    assert cols == ["linear_index", "j0", "j1", "re", "im"]
    assert body[:, 0].tolist() == list(range(9))
    assert np.array_equal(part.multi_indices(), body[:, 1:3].astype(int))
    assert np.array_equal(body[:, 3] + 1j * body[:, 4], vals)
    jpath = tmp_path / "p.json"
    formats.write_projection(jpath, part, vals, {"x": 1}, {"q": 9}, fmt="json")
    obj = json.loads(jpath.read_text())
    assert obj["permutation"] == {"q": 9}
    assert obj["re"] == vals.real.tolist()
    with pytest.raises(ValueError):
        formats.write_projection(path, part, vals[:4], {})


def test_density_json(tmp_path):
    path = tmp_path / "d.json"
    formats.write_density(path, [0.0], [1.5], {"a": 1}, {"q": 4}, fmt="json")
    obj = json.loads(path.read_text())
    assert obj == {"config": {"a": 1}, "permutation": {"q": 4}, "theta": [0.0], "rho": [1.5]}
    with pytest.raises(ValueError):
        formats.write_density(path, [0.0], [1.5], {}, fmt="tsv")
