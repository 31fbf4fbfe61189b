"""Counter-based normal generation with a compiled core and a numpy fallback.

Random numbers come from the Philox4x64-10 counter-mode generator.  Every
consumer addresses the stream by an absolute 256-bit block index, so any
batch of draws can be regenerated independently of how work was split
across calls, chunks, or threads: replicate ``r`` of a stream owns blocks
``[r * blocks_per_rep, (r + 1) * blocks_per_rep)`` and nothing else.

Normals are produced by the inverse CDF applied to 52-bit uniforms,
``u = ((word >> 12) + 0.5) * 2**-52``, which keeps every floating-point
step exact.  The compiled backend (``matshrink._normals_cy``) and the
numpy fallback therefore produce bit-identical output; the backend choice
only affects speed.

Set ``MATSHRINK_BACKEND=python`` (or ``cython``) to force a backend at
import time.
"""

from __future__ import annotations

import math
import os

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

try:
    from . import _normals_cy
except ImportError:
    _normals_cy = None

_TWO_NEG52 = 2.0**-52
_WORD_MASK = (1 << 64) - 1

_env = os.environ.get("MATSHRINK_BACKEND", "auto").lower()
if _env in ("auto", ""):
    DEFAULT_BACKEND = "cython" if _normals_cy is not None else "python"
elif _env == "cython":
    if _normals_cy is None:
        raise ImportError(
            "MATSHRINK_BACKEND=cython but matshrink._normals_cy is not built"
        )
    DEFAULT_BACKEND = "cython"
elif _env == "python":
    DEFAULT_BACKEND = "python"
else:
    raise ValueError(f"unrecognized MATSHRINK_BACKEND value: {_env!r}")


def backend_name() -> str:
    """Name of the backend used when none is requested explicitly."""
    return DEFAULT_BACKEND


def available_backends() -> tuple[str, ...]:
    if _normals_cy is not None:
        return ("cython", "python")
    return ("python",)


def _resolve(backend: str | None) -> str:
    if backend is None:
        return DEFAULT_BACKEND
    if backend not in ("cython", "python"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "cython" and _normals_cy is None:
        raise ValueError("cython backend requested but extension not built")
    return backend


def _key_words(key: int) -> tuple[int, int]:
    if not 0 <= key < 1 << 128:
        raise ValueError("key must be an unsigned 128-bit integer")
    return key & _WORD_MASK, key >> 64


def _counter_words(block_start: int) -> tuple[int, int, int, int]:
    if not 0 <= block_start < 1 << 256:
        raise ValueError("block_start must be an unsigned 256-bit integer")
    return tuple((block_start >> (64 * i)) & _WORD_MASK for i in range(4))


def raw_blocks(key: int, block_start: int, nblocks: int,
               backend: str | None = None) -> np.ndarray:
    """Return ``4 * nblocks`` raw uint64 words, identical to
    ``numpy.random.Philox(key=key, counter=block_start).random_raw(...)``."""
    if nblocks < 0:
        raise ValueError("nblocks must be nonnegative")
    if _resolve(backend) == "python":
        bg = Philox(key=key, counter=block_start)
        return bg.random_raw(4 * nblocks)
    out = np.empty(4 * nblocks, dtype=np.uint64)
    k0, k1 = _key_words(key)
    c0, c1, c2, c3 = _counter_words(block_start)
    _normals_cy.fill_raw(out, k0, k1, c0, c1, c2, c3)
    return out


def _normals_from_words(words: np.ndarray) -> np.ndarray:
    u = (np.right_shift(words, 12).astype(np.float64) + 0.5) * _TWO_NEG52
    return ndtri(u)


def replicate_normals(key: int, blocks_per_rep: int, rep_start: int,
                      nreps: int, words_per_rep: int,
                      backend: str | None = None) -> np.ndarray:
    """Standard normals for replicates ``rep_start .. rep_start+nreps-1``.

    Row ``i`` holds the first ``words_per_rep`` draws of the blocks owned
    by replicate ``rep_start + i``; the result does not depend on how the
    replicate range is split across calls.
    """
    if words_per_rep > 4 * blocks_per_rep:
        raise ValueError("words_per_rep exceeds the blocks reserved per replicate")
    if nreps < 0 or rep_start < 0:
        raise ValueError("rep_start and nreps must be nonnegative")
    base = rep_start * blocks_per_rep
    if _resolve(backend) == "python":
        raw = raw_blocks(key, base, nreps * blocks_per_rep, backend="python")
        raw = raw.reshape(nreps, 4 * blocks_per_rep)[:, :words_per_rep]
        return _normals_from_words(np.ascontiguousarray(raw))
    out = np.empty((nreps, words_per_rep), dtype=np.float64)
    k0, k1 = _key_words(key)
    c0, c1, c2, c3 = _counter_words(base)
    _normals_cy.fill_normals(out, k0, k1, c0, c1, c2, c3, blocks_per_rep)
    return out


def standard_normals(key: int, block_start: int, count: int,
                     backend: str | None = None) -> np.ndarray:
    """``count`` standard normals from the blocks starting at ``block_start``
    (consumes ``ceil(count / 4)`` blocks)."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    if count == 0:
        return np.empty(0, dtype=np.float64)
    nblocks = math.ceil(count / 4)
    if _resolve(backend) == "python":
        raw = raw_blocks(key, block_start, nblocks, backend="python")[:count]
        return _normals_from_words(raw)
    out = np.empty((1, count), dtype=np.float64)
    k0, k1 = _key_words(key)
    c0, c1, c2, c3 = _counter_words(block_start)
    _normals_cy.fill_normals(out, k0, k1, c0, c1, c2, c3, nblocks)
    return out[0]
