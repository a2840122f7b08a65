"""Pure-Python NCD kernels; reference behaviour for the compiled ``_kernels``."""

import zlib

BACKEND = "python"


def compressed_size(data: bytes, level: int, wbits: int) -> int:
    c = zlib.compressobj(level, zlib.DEFLATED, wbits, 8, zlib.Z_DEFAULT_STRATEGY)
    return len(c.compress(data)) + len(c.flush())


def _ncd(cx: int, cy: int, cxy: int, cyx: int) -> float:
    r = (min(cxy, cyx) - min(cx, cy)) / max(cx, cy)
    return r if r > 0.0 else 0.0


def ncd_pair(x: bytes, y: bytes, level: int, wbits: int) -> float:
    if x == y:
        return 0.0
    return _ncd(
        compressed_size(x, level, wbits),
        compressed_size(y, level, wbits),
        compressed_size(x + y, level, wbits),
        compressed_size(y + x, level, wbits),
    )


def ncd_one_to_many(x: bytes, ys: list, level: int, wbits: int) -> list:
    cx = compressed_size(x, level, wbits)
    out = []
    for y in ys:
        if y == x:
            out.append(0.0)
            continue
        out.append(
            _ncd(
                cx,
                compressed_size(y, level, wbits),
                compressed_size(x + y, level, wbits),
                compressed_size(y + x, level, wbits),
            )
        )
    return out
