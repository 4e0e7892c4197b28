"""Writes sample.flo with a writer independent of the Rust code.

Layout: float32 202021.25, int32 width, int32 height, then row-major
interleaved (u, v) float32 pairs, little-endian.
"""
import struct

W, H = 5, 3

with open("sample.flo", "wb") as f:
    f.write(struct.pack("<f", 202021.25))
    f.write(struct.pack("<ii", W, H))
    for r in range(H):
        for c in range(W):
            f.write(struct.pack("<ff", 0.5 * r + c, r - 0.25 * c))
