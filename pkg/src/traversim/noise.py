"""2D OpenSimplex gradient noise.

Lattice gradient noise on a skewed (stretched) square grid. Compared with
classic simplex noise it is free of the directional artifacts of value
noise and is unencumbered for any use. Output is smooth, deterministic in
(seed, x, y), and bounded to [-1, 1].

The permutation table is built from a 64-bit seed with the usual LCG
shuffle so identical seeds reproduce identical fields on any platform.
"""

from __future__ import annotations

import numpy as np

# Standard 2D stretch/squish constants: (1/sqrt(3) - 1)/2 and (sqrt(3) - 1)/2.
_STRETCH = -0.211324865405187
_SQUISH = 0.366025403784439
_NORM = 47.0

# Eight lattice gradients, interleaved (dx, dy) pairs.
_GRADIENTS = np.array(
    [5, 2, 2, 5, -5, 2, -2, 5, 5, -2, 2, -5, -5, -2, -2, -5],
    dtype=np.float64,
)

_MASK64 = (1 << 64) - 1
_LCG_MUL = 6364136223846793005
_LCG_ADD = 1442695040888963407


def _lcg(state: int) -> int:
    return (state * _LCG_MUL + _LCG_ADD) & _MASK64


def permutation_from_seed(seed: int) -> np.ndarray:
    """Build the 256-entry gradient permutation for a 64-bit seed.

    Proper shuffle driven by a 64-bit LCG (three warm-up steps, then one
    step per swap), so nearby seeds give unrelated tables.
    """
    state = seed & _MASK64
    for _ in range(3):
        state = _lcg(state)
    source = list(range(256))
    perm = [0] * 256
    for i in range(255, -1, -1):
        state = _lcg(state)
        signed = state - (1 << 64) if state >= (1 << 63) else state
        r = (signed + 31) % (i + 1)
        if r < 0:
            r += i + 1
        perm[i] = source[r]
        source[r] = source[i]
    return np.asarray(perm, dtype=np.int64)


class NoiseSource:
    """Deterministic 2D noise field identified by a 64-bit seed.

    ``noise2d`` is a pure function of (seed, x, y); values lie in [-1, 1].
    Instances are immutable and safe to share across threads.
    """

    __slots__ = ("seed", "_perm")

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._perm = permutation_from_seed(self.seed)

    def __repr__(self) -> str:
        return f"NoiseSource(seed={self.seed})"

    def _extrapolate(self, xsb, ysb, dx, dy):
        perm = self._perm
        index = perm[(perm[xsb & 0xFF] + ysb) & 0xFF] & 0x0E
        return _GRADIENTS[index] * dx + _GRADIENTS[index + 1] * dy

    def noise2d(self, x, y):
        """Evaluate the noise field at (x, y).

        Accepts scalars or equally-shaped arrays; returns float64 of the
        broadcast shape (a Python float for scalar input).
        """
        x_arr = np.asarray(x, dtype=np.float64)
        y_arr = np.asarray(y, dtype=np.float64)
        scalar = x_arr.ndim == 0 and y_arr.ndim == 0
        x_arr, y_arr = np.broadcast_arrays(x_arr, y_arr)
        if scalar:
            out = self._eval(x_arr.reshape(1), y_arr.reshape(1))
            return float(out[0])
        return self._eval(np.ascontiguousarray(x_arr), np.ascontiguousarray(y_arr))

    def _eval(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        stretch_offset = (x + y) * _STRETCH
        xs = x + stretch_offset
        ys = y + stretch_offset

        xsb = np.floor(xs).astype(np.int64)
        ysb = np.floor(ys).astype(np.int64)

        squish_offset = (xsb + ysb) * _SQUISH
        xb = xsb + squish_offset
        yb = ysb + squish_offset

        xins = xs - xsb
        yins = ys - ysb
        in_sum = xins + yins

        dx0 = x - xb
        dy0 = y - yb

        value = np.zeros_like(x)

        # Contribution (1, 0).
        dx1 = dx0 - 1.0 - _SQUISH
        dy1 = dy0 - _SQUISH
        attn1 = 2.0 - dx1 * dx1 - dy1 * dy1
        pos = attn1 > 0
        attn1 = np.where(pos, attn1, 0.0)
        attn1 *= attn1
        value += attn1 * attn1 * self._extrapolate(xsb + 1, ysb, dx1, dy1)

        # Contribution (0, 1).
        dx2 = dx0 - _SQUISH
        dy2 = dy0 - 1.0 - _SQUISH
        attn2 = 2.0 - dx2 * dx2 - dy2 * dy2
        pos = attn2 > 0
        attn2 = np.where(pos, attn2, 0.0)
        attn2 *= attn2
        value += attn2 * attn2 * self._extrapolate(xsb, ysb + 1, dx2, dy2)

        inside = in_sum <= 1.0  # which triangle of the stretched cell

        # Extra vertex selection, resolved branchlessly for both triangles.
        zins = np.where(inside, 1.0 - in_sum, 2.0 - in_sum)
        x_gt_y = xins > yins

        # inside, zins > xins or zins > yins
        in_a = inside & ((zins > xins) | (zins > yins))
        # outside, zins < xins or zins < yins
        out_a = ~inside & ((zins < xins) | (zins < yins))

        xsv_ext = np.where(
            inside,
            np.where(in_a, np.where(x_gt_y, xsb + 1, xsb - 1), xsb + 1),
            np.where(out_a, np.where(x_gt_y, xsb + 2, xsb), xsb),
        )
        ysv_ext = np.where(
            inside,
            np.where(in_a, np.where(x_gt_y, ysb - 1, ysb + 1), ysb + 1),
            np.where(out_a, np.where(x_gt_y, ysb, ysb + 2), ysb),
        )
        dx_ext = np.where(
            inside,
            np.where(in_a, np.where(x_gt_y, dx0 - 1.0, dx0 + 1.0), dx0 - 1.0 - 2.0 * _SQUISH),
            np.where(
                out_a,
                np.where(x_gt_y, dx0 - 2.0 - 2.0 * _SQUISH, dx0 - 2.0 * _SQUISH),
                dx0,
            ),
        )
        dy_ext = np.where(
            inside,
            np.where(in_a, np.where(x_gt_y, dy0 + 1.0, dy0 - 1.0), dy0 - 1.0 - 2.0 * _SQUISH),
            np.where(
                out_a,
                np.where(x_gt_y, dy0 - 2.0 * _SQUISH, dy0 - 2.0 - 2.0 * _SQUISH),
                dy0,
            ),
        )

        # Closest-vertex contribution: (0,0) inside, (1,1) outside.
        xsb_c = np.where(inside, xsb, xsb + 1)
        ysb_c = np.where(inside, ysb, ysb + 1)
        dx0_c = np.where(inside, dx0, dx0 - 1.0 - 2.0 * _SQUISH)
        dy0_c = np.where(inside, dy0, dy0 - 1.0 - 2.0 * _SQUISH)

        attn0 = 2.0 - dx0_c * dx0_c - dy0_c * dy0_c
        attn0 = np.where(attn0 > 0, attn0, 0.0)
        attn0 *= attn0
        value += attn0 * attn0 * self._extrapolate(xsb_c, ysb_c, dx0_c, dy0_c)

        attn_ext = 2.0 - dx_ext * dx_ext - dy_ext * dy_ext
        attn_ext = np.where(attn_ext > 0, attn_ext, 0.0)
        attn_ext *= attn_ext
        value += attn_ext * attn_ext * self._extrapolate(xsv_ext, ysv_ext, dx_ext, dy_ext)

        return value / _NORM
