"""Persistence of posterior draws: CSV and a versioned binary container.

Binary layout: 8-byte magic, little-endian uint32 format version, uint32
length of a UTF-8 JSON metadata block, the JSON, then the draws as a C-order
little-endian float64 matrix (rows = stored states) optionally followed by the
latent ``U`` matrix.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import SchemaError
from .sampler import PosteriorChain

MAGIC = b"SPCIDRAW"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sII")


def _meta(chain: PosteriorChain) -> dict:
    return {
        "names": list(chain.names),
        "n_draws": chain.n_draws,
        "seed": chain.seed,
        "n_burnin": chain.n_burnin,
        "thin": chain.thin,
        "n_iter": chain.n_iter,
        "p": chain.p,
        "pd_rejections": chain.pd_rejections,
        "acceptance_rates": chain.acceptance_rates,
        "n_latent": 0 if chain.U is None else int(chain.U.shape[1]),
    }


def _matrix(chain: PosteriorChain) -> np.ndarray:
    if not chain.draws:
        return np.empty((0, 0))
    return np.column_stack([chain.draws[k] for k in chain.names])


def write_draws_csv(chain: PosteriorChain, path, u_path=None) -> None:
    """One row per stored state; ``U`` (if kept) goes to a separate wide CSV."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(chain.names)
        for row in _matrix(chain):
            w.writerow([repr(float(x)) for x in row])
    if u_path is not None and chain.U is not None:
        with Path(u_path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"U{i + 1}" for i in range(chain.U.shape[1])])
            for row in chain.U:
                w.writerow([repr(float(x)) for x in row])
    meta_path = Path(str(path) + ".json")
    meta_path.write_text(json.dumps(_meta(chain), indent=1, sort_keys=True))


def read_draws_csv(path, u_path=None) -> PosteriorChain:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty draws file")
    names = rows[0]
    body = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(names))
    meta_path = Path(str(path) + ".json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    u = None
    if u_path is not None and Path(u_path).exists():
        with Path(u_path).open(newline="") as fh:
            urows = list(csv.reader(fh))
        u = np.array(urows[1:], dtype=float).reshape(len(urows) - 1, len(urows[0]))
    return _chain_from(names, body, meta, u)


def _chain_from(names, body, meta, u) -> PosteriorChain:
    return PosteriorChain(
        draws={k: body[:, j].copy() for j, k in enumerate(names)},
        acceptance_rates=dict(meta.get("acceptance_rates", {})),
        seed=meta.get("seed"),
        n_burnin=int(meta.get("n_burnin", 0)),
        thin=int(meta.get("thin", 1)),
        n_iter=int(meta.get("n_iter", 0)),
        U=u,
        p=int(meta.get("p", sum(n.startswith("betaC") for n in names))),
        pd_rejections=int(meta.get("pd_rejections", 0)),
    )


def write_draws_binary(chain: PosteriorChain, path) -> None:
    meta = json.dumps(_meta(chain), sort_keys=True).encode()
    with Path(path).open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(_matrix(chain), dtype="<f8").tobytes())
        if chain.U is not None:
            fh.write(np.ascontiguousarray(chain.U, dtype="<f8").tobytes())


def read_draws_binary(path) -> PosteriorChain:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise SchemaError(f"{path}: truncated header")
    magic, version, meta_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SchemaError(f"{path}: not a draws file")
    if version != FORMAT_VERSION:
        raise SchemaError(f"{path}: unsupported format version {version}")
    off = _HEADER.size
    meta = json.loads(raw[off : off + meta_len].decode())
    off += meta_len
    names, n = meta["names"], meta["n_draws"]
    k, n_lat = len(names), meta["n_latent"]
    expect = 8 * n * (k + n_lat)
    if len(raw) - off != expect:
        raise SchemaError(f"{path}: payload has {len(raw) - off} bytes, expected {expect}")
    body = np.frombuffer(raw, dtype="<f8", count=n * k, offset=off).reshape(n, k).astype(float)
    u = None
    if n_lat:
        u = np.frombuffer(raw, dtype="<f8", count=n * n_lat, offset=off + 8 * n * k).reshape(n, n_lat).astype(float)
    return _chain_from(names, body, meta, u)
