"""Portable tensor fixtures: a one-line JSON header, then little-endian bytes.

The format is endian-stable so frozen test fixtures compare bit-exactly on
any platform.
"""

from __future__ import annotations

import json
import os

import numpy as np

_DTYPES = {"f8": "<f8", "f4": "<f4", "i8": "<i8"}


def save_tensor(path: str | os.PathLike, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array)
    code = {np.float64: "f8", np.float32: "f4", np.int64: "i8"}.get(arr.dtype.type)
    if code is None:
        raise ValueError(f"unsupported dtype {arr.dtype}")
    header = json.dumps({"shape": list(arr.shape), "dtype": code})
    with open(path, "wb") as fh:
        fh.write(header.encode("utf-8") + b"\n")
        fh.write(arr.astype(_DTYPES[code]).tobytes(order="C"))


def load_tensor(path: str | os.PathLike) -> np.ndarray:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        data = fh.read()
    arr = np.frombuffer(data, dtype=_DTYPES[header["dtype"]])
    return arr.reshape(header["shape"]).copy()
