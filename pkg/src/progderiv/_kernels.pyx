# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled NCD kernels over zlib's deflate.

Mirrors ``_kernels_py`` exactly: same deflate parameters (memLevel 8, default
strategy), same integer arithmetic, one final double division. One deflate
state is initialised per call and reset between compressions.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

cdef extern from "zlib.h":
    ctypedef unsigned char Bytef
    ctypedef unsigned int uInt
    ctypedef unsigned long uLong
    ctypedef struct z_stream:
        Bytef *next_in
        uInt avail_in
        uLong total_in
        Bytef *next_out
        uInt avail_out
        uLong total_out
        void *zalloc
        void *zfree
        void *opaque
    int Z_OK
    int Z_STREAM_END
    int Z_FINISH
    int Z_DEFLATED
    int Z_DEFAULT_STRATEGY
    int deflateInit2(z_stream *strm, int level, int method, int windowBits,
                     int memLevel, int strategy)
    int deflate(z_stream *strm, int flush)
    int deflateReset(z_stream *strm)
    int deflateEnd(z_stream *strm)
    uLong deflateBound(z_stream *strm, uLong sourceLen)

BACKEND = "compiled"


cdef class _Deflater:
    cdef z_stream strm
    cdef unsigned char *out
    cdef size_t out_cap
    cdef bint ready

    def __cinit__(self, int level, int wbits):
        self.ready = False
        self.out = NULL
        self.out_cap = 0
        self.strm.zalloc = NULL
        self.strm.zfree = NULL
        self.strm.opaque = NULL
        if deflateInit2(&self.strm, level, Z_DEFLATED, wbits, 8, Z_DEFAULT_STRATEGY) != Z_OK:
            raise ValueError(f"deflateInit2 failed (level={level}, wbits={wbits})")
        self.ready = True

    def __dealloc__(self):
        if self.ready:
            deflateEnd(&self.strm)
        if self.out != NULL:
            free(self.out)

    cdef size_t size(self, const unsigned char *data, size_t n) except 0:
        cdef size_t need = deflateBound(&self.strm, n) + 16
        if need > self.out_cap:
            if self.out != NULL:
                free(self.out)
            self.out = <unsigned char *> malloc(need)
            if self.out == NULL:
                self.out_cap = 0
                raise MemoryError()
            self.out_cap = need
        deflateReset(&self.strm)
        self.strm.next_in = <Bytef *> data
        self.strm.avail_in = <uInt> n
        self.strm.next_out = self.out
        self.strm.avail_out = <uInt> self.out_cap
        if deflate(&self.strm, Z_FINISH) != Z_STREAM_END:
            raise RuntimeError("deflate did not finish")
        return self.strm.total_out


cdef double _ncd(_Deflater d, const unsigned char *x, size_t nx, size_t cx,
                 const unsigned char *y, size_t ny, unsigned char *buf) except -1.0:
    cdef size_t cy = d.size(y, ny)
    memcpy(buf, x, nx)
    memcpy(buf + nx, y, ny)
    cdef size_t cxy = d.size(buf, nx + ny)
    memcpy(buf, y, ny)
    memcpy(buf + ny, x, nx)
    cdef size_t cyx = d.size(buf, nx + ny)
    cdef long long joint = cxy if cxy < cyx else cyx
    cdef long long lo = cx if cx < cy else cy
    cdef long long hi = cx if cx > cy else cy
    cdef double r = <double> (joint - lo) / <double> hi
    return r if r > 0.0 else 0.0


def compressed_size(bytes data, int level, int wbits):
    cdef _Deflater d = _Deflater(level, wbits)
    return d.size(data, len(data))


def ncd_pair(bytes x, bytes y, int level, int wbits):
    if x == y:
        return 0.0
    cdef _Deflater d = _Deflater(level, wbits)
    cdef size_t nx = len(x), ny = len(y)
    cdef unsigned char *buf = <unsigned char *> malloc(nx + ny + 1)
    if buf == NULL:
        raise MemoryError()
    try:
        return _ncd(d, x, nx, d.size(x, nx), y, ny, buf)
    finally:
        free(buf)


def ncd_one_to_many(bytes x, list ys, int level, int wbits):
    """NCD from ``x`` to every element of ``ys``; C(x) is computed once."""
    cdef _Deflater d = _Deflater(level, wbits)
    cdef size_t nx = len(x), ny, cap = 0
    cdef size_t cx = d.size(x, nx)
    cdef unsigned char *buf = NULL
    cdef bytes y
    out = []
    try:
        for y in ys:
            if y == x:
                out.append(0.0)
                continue
            ny = len(y)
            if nx + ny + 1 > cap:
                free(buf)
                cap = 2 * (nx + ny + 1)
                buf = <unsigned char *> malloc(cap)
                if buf == NULL:
                    raise MemoryError()
            out.append(_ncd(d, x, nx, cx, y, ny, buf))
    finally:
        free(buf)
    return out
