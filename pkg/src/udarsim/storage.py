"""On-disk formats: IQ frames, range-Doppler maps, metrics reports.

All binary payloads are little-endian.  IQ frames use a fixed 32-byte
header followed by complex64 samples in column-major order (fast-time
index varies fastest), so a frame streams in natural receive order.
Range-Doppler maps pair a human-readable header (JSON metadata line)
with a raw float32 block; a CSV writer covers desk-scale inspection.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .processing import RangeDopplerMap, SignatureMetrics
from .propeller import IqFrame
from .waveform import OfdmConfig

_IQ_MAGIC = b"UDARIQ01"
_IQ_HEADER = struct.Struct("<8sIIdd")  # magic, N, M, f0, T
_RDM_MAGIC = "#UDARRDM1"


class StorageError(ValueError):
    """Raised for malformed or inconsistent files."""


def save_iq(frame: IqFrame, path) -> None:
    """Write an IQ frame: header {magic, N, M, f0, T} + complex64 samples."""
    ofdm = frame.ofdm
    header = _IQ_HEADER.pack(
        _IQ_MAGIC, ofdm.n_subcarriers, ofdm.n_symbols,
        ofdm.carrier_freq, ofdm.symbol_duration,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frame.values.astype("<c8").ravel(order="F").tobytes())


def load_iq(path, modulation: str = "external", n_fallback_symbols: int = 1,
            ofdm: OfdmConfig | None = None) -> IqFrame:
    """Read an IQ frame written by :func:`save_iq`.

    The header carries only (N, M, f0, T); pass ``ofdm`` to attach a full
    configuration (checked for consistency), otherwise a minimal one is
    reconstructed.
    """
    with open(path, "rb") as fh:
        raw = fh.read(_IQ_HEADER.size)
        if len(raw) != _IQ_HEADER.size:
            raise StorageError(f"{path}: truncated IQ header")
        magic, n_sub, n_sym, f0, t_sym = _IQ_HEADER.unpack(raw)
        if magic != _IQ_MAGIC:
            raise StorageError(f"{path}: bad magic {magic!r}, expected {_IQ_MAGIC!r}")
        data = np.frombuffer(fh.read(), dtype="<c8")
    if data.size != n_sub * n_sym:
        raise StorageError(f"{path}: expected {n_sub * n_sym} samples, found {data.size}")
    if ofdm is None:
        ofdm = OfdmConfig(
            n_subcarriers=n_sub, symbol_duration=t_sym, carrier_freq=f0,
            n_symbols=n_sym, modulation="psk2", seed=0,
        )
    elif (ofdm.n_subcarriers, ofdm.n_symbols) != (n_sub, n_sym):
        raise StorageError(
            f"{path}: header grid ({n_sub}, {n_sym}) != supplied OFDM config "
            f"({ofdm.n_subcarriers}, {ofdm.n_symbols})"
        )
    values = data.reshape((n_sub, n_sym), order="F")
    return IqFrame(values=values, ofdm=ofdm)


def save_rdmap(rdmap: RangeDopplerMap, path) -> None:
    """Write a map: text header lines then a row-major float32 block."""
    meta = {
        "n_range": int(rdmap.range_axis_m.size),
        "n_doppler": int(rdmap.doppler_axis_hz.size),
        "window": rdmap.window,
        "subsample": int(rdmap.subsample),
        "db_floor": float(rdmap.db_floor),
        "range_axis_m": [float(v) for v in rdmap.range_axis_m],
        "doppler_axis_hz": [float(v) for v in rdmap.doppler_axis_hz],
    }
    with open(path, "wb") as fh:
        fh.write((_RDM_MAGIC + "\n").encode())
        fh.write(("#" + json.dumps(meta, sort_keys=True) + "\n").encode())
        fh.write(b"#data float32 row-major (range, doppler)\n")
        fh.write(rdmap.values_db.astype("<f4").tobytes())


def load_rdmap(path) -> RangeDopplerMap:
    with open(path, "rb") as fh:
        magic = fh.readline().decode().rstrip("\n")
        if magic != _RDM_MAGIC:
            raise StorageError(f"{path}: bad magic line {magic!r}")
        meta = json.loads(fh.readline().decode().lstrip("#"))
        fh.readline()  # data marker
        data = np.frombuffer(fh.read(), dtype="<f4")
    shape = (meta["n_range"], meta["n_doppler"])
    if data.size != shape[0] * shape[1]:
        raise StorageError(f"{path}: expected {shape[0] * shape[1]} values, found {data.size}")
    return RangeDopplerMap(
        values_db=data.reshape(shape).astype(float),
        range_axis_m=np.asarray(meta["range_axis_m"]),
        doppler_axis_hz=np.asarray(meta["doppler_axis_hz"]),
        window=meta["window"],
        subsample=meta["subsample"],
        db_floor=meta["db_floor"],
    )


def save_rdmap_csv(rdmap: RangeDopplerMap, path) -> None:
    """Plain CSV: first row Doppler axis, first column range axis."""
    with open(path, "w") as fh:
        fh.write("range_m\\doppler_hz," + ",".join(f"{f:.6g}" for f in rdmap.doppler_axis_hz) + "\n")
        for r, row in zip(rdmap.range_axis_m, rdmap.values_db):
            fh.write(f"{r:.6g}," + ",".join(f"{v:.4f}" for v in row) + "\n")


def save_metrics(metrics: SignatureMetrics, path, extra: dict | None = None) -> None:
    record = asdict(metrics)
    if extra:
        record.update(extra)
    with open(path, "w") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def file_record(path) -> dict:
    path = Path(path)
    return {"path": path.name, "bytes": path.stat().st_size, "sha256": sha256_of(path)}
