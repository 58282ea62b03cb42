"""Reproducible uniform streams with fixed per-item stream positions.

Philox is a counter-based generator: the output at any stream position can
be produced without generating its predecessors. Every logical item here (a
Monte Carlo trial, a query point) owns a fixed, block-aligned span of a
keyed stream, so chunked or parallel generation is bit-identical to a single
sequential pass. This is the mechanism behind every "same seed, same result,
any worker count" guarantee in this package.
"""

from __future__ import annotations

import numpy as np

# Philox-4x64 emits four 64-bit words per counter value; strides must be
# whole blocks or a chunk boundary would land mid-buffer.
_WORDS_PER_BLOCK = 4


def stream_key(seed: int, stream: int = 0) -> int:
    """Pack a 64-bit seed and a stream tag into one 128-bit Philox key.

    Distinct tags give statistically independent streams, so several
    subsystems can share a single user-facing seed without correlation.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    if not 0 <= stream < 2**64:
        raise ValueError(f"stream tag must fit in 64 bits, got {stream!r}")
    return seed | (stream << 64)


def item_stride(width: int) -> int:
    """Words reserved per item: ``width`` rounded up to a whole block."""
    return -(-width // _WORDS_PER_BLOCK) * _WORDS_PER_BLOCK


def uniform_block(key: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms on [0, 1) for items ``start .. start+count-1`` of a stream.

    Returns shape ``(count, width)``. Item ``i`` always reads the same words
    of stream ``key`` regardless of how generation is chunked, because each
    item occupies a block-aligned stride and each float64 consumes exactly
    one 64-bit word.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    stride = item_stride(width)
    counter = start * stride // _WORDS_PER_BLOCK
    bitgen = np.random.Philox(key=key, counter=[counter, 0, 0, 0])
    out = np.random.Generator(bitgen).random(count * stride)
    return out.reshape(count, stride)[:, :width]
