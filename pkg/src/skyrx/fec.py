"""Systematic Reed-Solomon erasure coding over GF(256).

Groups of ``data_count`` equal-length payloads get ``parity_count`` parity
payloads; any ``data_count`` of the ``data_count + parity_count`` coded
payloads reconstruct all data bit-exactly.  Erasure positions are known
(frame indices), so no error location step is needed: decoding is a matrix
solve.

Construction: a (total x k) Vandermonde matrix V with distinct evaluation
points is post-multiplied by inv(V[:k]), yielding an encoding matrix E
whose top k rows are the identity (systematic: data passes through
untouched) and whose every k-row subset is invertible.  Arithmetic is
GF(2^8) with primitive polynomial 0x11D, generator 2; multiplication uses
log/antilog tables with the usual doubled antilog table so products need
no modulo reduction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _accel
from .errors import ProtocolError

GF_PRIM = 0x11D
GF_GEN = 2

# data+parity geometry used on the link: 50 data frames, 25 parity frames
GROUP_DATA = 50
GROUP_PARITY = 25


def _build_tables() -> tuple[np.ndarray, np.ndarray]:
    exp = np.zeros(510, dtype=np.uint8)
    log = np.zeros(256, dtype=np.int16)
    x = 1
    for i in range(255):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= GF_PRIM
    exp[255:510] = exp[0:255]
    return log, exp


GF_LOG, GF_EXP = _build_tables()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return int(GF_EXP[GF_LOG[a] + GF_LOG[b]])


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("no inverse of 0 in GF(256)")
    return int(GF_EXP[255 - GF_LOG[a]])


def gf_pow(x: int, n: int) -> int:
    if n == 0:
        return 1
    if x == 0:
        return 0
    return int(GF_EXP[(GF_LOG[x] * n) % 255])


def _scale_row(row: np.ndarray, s: int) -> np.ndarray:
    """s * row, elementwise over GF(256)."""
    out = np.zeros_like(row)
    if s != 0:
        nz = row != 0
        out[nz] = GF_EXP[GF_LOG[s] + GF_LOG[row[nz]]]
    return out


def gf_mat_inv(m: np.ndarray) -> np.ndarray:
    """Invert a square GF(256) matrix by Gauss-Jordan elimination."""
    k = m.shape[0]
    aug = np.concatenate([m.astype(np.uint8), np.eye(k, dtype=np.uint8)], axis=1)
    for col in range(k):
        pivots = np.nonzero(aug[col:, col])[0]
        if pivots.size == 0:
            raise np.linalg.LinAlgError("singular matrix over GF(256)")
        piv = col + int(pivots[0])
        if piv != col:
            aug[[col, piv]] = aug[[piv, col]]
        aug[col] = _scale_row(aug[col], gf_inv(int(aug[col, col])))
        for r in range(k):
            f = int(aug[r, col])
            if r != col and f != 0:
                aug[r] ^= _scale_row(aug[col], f)
    return aug[:, k:]


def _encoding_matrix(data_count: int, total: int) -> np.ndarray:
    # Vandermonde rows at points 0..total-1; any k rows are independent
    # because their nodes stay distinct, and that survives the inv(V[:k])
    # post-multiplication that makes the code systematic.
    vand = np.zeros((total, data_count), dtype=np.uint8)
    for i in range(total):
        for j in range(data_count):
            vand[i, j] = gf_pow(i, j)
    top_inv = gf_mat_inv(vand[:data_count])
    return _accel.gf256_matmul(vand, top_inv, GF_LOG, GF_EXP)


@dataclass(frozen=True)
class FecReport:
    """Outcome of decoding one group, in data-slot indices (0..k-1)."""

    received: tuple[int, ...]
    recovered: tuple[int, ...]
    missing: tuple[int, ...]

    @property
    def complete(self) -> bool:
        return not self.missing


class ErasureCode:
    """Reed-Solomon erasure codec for fixed (data, parity) counts."""

    def __init__(self, data_count: int = GROUP_DATA, parity_count: int = GROUP_PARITY):
        if data_count < 1 or parity_count < 0:
            raise ValueError("counts must be positive")
        total = data_count + parity_count
        if total > 256:
            raise ValueError("at most 256 coded payloads in GF(256)")
        self.data_count = data_count
        self.parity_count = parity_count
        self.total = total
        self.matrix = _encoding_matrix(data_count, total)

    def encode(self, payloads: Sequence[bytes]) -> list[bytes]:
        """Parity payloads for exactly ``data_count`` equal-length payloads."""
        if len(payloads) != self.data_count:
            raise ValueError(
                f"invalid group: expected {self.data_count} payloads, got {len(payloads)}"
            )
        length = len(payloads[0])
        if any(len(p) != length for p in payloads):
            raise ValueError("invalid group: payload lengths differ")
        data = np.frombuffer(b"".join(payloads), dtype=np.uint8).reshape(
            self.data_count, length
        )
        parity = _accel.gf256_matmul(
            self.matrix[self.data_count :], data, GF_LOG, GF_EXP
        )
        return [parity[i].tobytes() for i in range(self.parity_count)]

    def decode(
        self, received: Iterable[tuple[int, bytes]]
    ) -> tuple[dict[int, bytes], FecReport]:
        """Recover data payloads from any subset of coded payloads.

        ``received`` pairs each coded index (0..total-1) with its payload.
        With >= data_count payloads everything is reconstructed; with fewer,
        only directly received data payloads come back and the report lists
        the unrecoverable slots.
        """
        entries = sorted(received, key=lambda e: e[0])
        indices = [idx for idx, _ in entries]
        if len(set(indices)) != len(indices):
            raise ProtocolError("duplicate coded index in group")
        if indices and (indices[0] < 0 or indices[-1] >= self.total):
            raise ProtocolError(f"coded index outside 0..{self.total - 1}")
        lengths = {len(p) for _, p in entries}
        if len(lengths) > 1:
            raise ProtocolError("received payload lengths differ")

        out = {idx: payload for idx, payload in entries if idx < self.data_count}
        direct = tuple(sorted(out))
        absent = tuple(i for i in range(self.data_count) if i not in out)

        if len(entries) < self.data_count or not absent:
            return out, FecReport(received=direct, recovered=(), missing=absent)

        chosen = entries[: self.data_count]
        rows = np.array([idx for idx, _ in chosen], dtype=np.intp)
        length = len(chosen[0][1])
        stacked = np.frombuffer(
            b"".join(p for _, p in chosen), dtype=np.uint8
        ).reshape(self.data_count, length)
        inverse = gf_mat_inv(self.matrix[rows])
        recovery = np.ascontiguousarray(inverse[list(absent)])
        recovered = _accel.gf256_matmul(recovery, stacked, GF_LOG, GF_EXP)
        for slot, row in zip(absent, recovered):
            out[slot] = row.tobytes()
        return out, FecReport(received=direct, recovered=absent, missing=())
