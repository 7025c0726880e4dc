"""Dense conv-net layers on numpy arrays with analytic gradients.

Layers are channel-last: activations are (batch, height, width, channels)
float arrays. A convolution pads its input once into a flat (rows, channels)
slab; shifting the k x k window then becomes a row offset, so the whole conv
is k*k GEMMs on contiguous slices — no im2col inflation. Outputs are gathered
from the accumulator through a strided view, which also makes stride-2 a
pure indexing change. Large scratch buffers persist on the layer between
calls: repeated same-shape passes (training) never reallocate.

The network wrapper converts from the public (batch, channels, height, width)
convention at its boundary. Layers cache state between forward and backward,
so a layer instance must not be shared across concurrent passes.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import as_strided

from ..errors import DeoccludeError, DimensionError


class StateError(DeoccludeError):
    """backward called without a cached forward."""


def _out_view(acc: np.ndarray, b, hp, wp, hout, wout, stride):
    """Strided (B, Hout, Wout, Cout) window onto a flat accumulator."""
    cout = acc.shape[1]
    rs = acc.strides[0]
    return as_strided(
        acc,
        shape=(b, hout, wout, cout),
        strides=(hp * wp * rs, stride * wp * rs, stride * rs, acc.strides[1]),
    )


def _conv_geometry(h, w, ksize, stride, pad):
    hout = (h + 2 * pad - ksize) // stride + 1
    wout = (w + 2 * pad - ksize) // stride + 1
    return hout, wout


class _Workspace:
    """Shape-keyed scratch buffers that persist across same-shape calls.

    zero=True zeroes a buffer only when (re)allocated: callers rely on
    rewriting the same positions every call, so untouched positions stay
    zero for the buffer's lifetime.
    """

    def __init__(self):
        self._bufs = {}

    def get(self, name, shape, dtype, zero=False):
        buf = self._bufs.get(name)
        if buf is None or buf.shape != tuple(shape) or buf.dtype != dtype:
            buf = np.zeros(shape, dtype=dtype) if zero else np.empty(shape, dtype=dtype)
            self._bufs[name] = buf
        return buf


def _split_weights(w: np.ndarray):
    """(Cout, Cin, k, k) -> [i][j] list of contiguous (Cin, Cout) matrices."""
    k = w.shape[2]
    return [[np.ascontiguousarray(w[:, :, i, j].T) for j in range(k)] for i in range(k)]


class Conv2d:
    """k x k convolution with zero padding; Kaiming-uniform init, zero bias.

    Weights keep the (cout, cin, k, k) shape publicly (checkpoints, tests).
    """

    def __init__(self, cin, cout, ksize=3, stride=1, pad=None, rng=None, zero_init=False, dtype=np.float32):
        self.cin, self.cout, self.ksize, self.stride = cin, cout, ksize, stride
        self.pad = (ksize - 1) // 2 if pad is None else pad
        if zero_init:
            self.w = np.zeros((cout, cin, ksize, ksize), dtype=dtype)
        else:
            if rng is None:
                rng = np.random.default_rng(0)
            bound = np.sqrt(6.0 / (cin * ksize * ksize))
            self.w = rng.uniform(-bound, bound, (cout, cin, ksize, ksize)).astype(dtype)
        self.b = np.zeros(cout, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._ws = _Workspace()
        self._cache = None

    def _pad_flat(self, x: np.ndarray):
        """Copy x into a persistent zero-padded flat slab (borders stay zero)."""
        b, h, w, c = x.shape
        pad = self.pad
        hp, wp = h + 2 * pad, w + 2 * pad
        slab = self._ws.get("xf", (b * hp * wp, c), x.dtype, zero=(pad > 0))
        view = slab.reshape(b, hp, wp, c)
        if pad:
            view[:, pad : pad + h, pad : pad + w, :] = x
        else:
            view[:] = x
        return slab, hp, wp

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[3] != self.cin:
            raise DimensionError(f"conv expects (B, H, W, {self.cin}), got {x.shape}")
        k, stride, pad = self.ksize, self.stride, self.pad
        bs, h, w_in, _ = x.shape
        hout, wout = _conv_geometry(h, w_in, k, stride, pad)
        if k == 1 and stride == 1 and pad == 0:
            xf = np.ascontiguousarray(x.reshape(-1, self.cin))
            self._cache = (xf, None, None, x.shape, hout, wout)
            out = xf @ self.w.reshape(self.cout, self.cin).T
            out += self.b
            return out.reshape(bs, hout, wout, self.cout)
        xf, hp, wp = self._pad_flat(x)
        self._cache = (xf, hp, wp, x.shape, hout, wout)
        wmats = _split_weights(self.w)
        nv = bs * hp * wp - ((k - 1) * wp + (k - 1))
        acc = self._ws.get("acc", (nv, self.cout), x.dtype)
        tmp = self._ws.get("acc_tmp", (nv, self.cout), x.dtype)
        first = True
        for i in range(k):
            for j in range(k):
                off = i * wp + j
                np.matmul(xf[off : off + nv], wmats[i][j], out=(acc if first else tmp))
                if not first:
                    acc += tmp
                first = False
        acc += self.b
        # note: the returned window aliases workspace memory and is only valid
        # until the next forward; consumers materialize it immediately
        return _out_view(acc, bs, hp, wp, hout, wout, stride)

    def backward(self, dout: np.ndarray, need_input_grad: bool = True):
        if self._cache is None:
            raise StateError("Conv2d.backward before forward")
        xf, hp, wp, x_shape, hout, wout = self._cache
        bs, h, w_in, _ = x_shape
        k = self.ksize
        if k == 1 and self.stride == 1 and self.pad == 0:
            dmat = np.ascontiguousarray(dout.reshape(-1, self.cout))
            self.dw = (dmat.T @ xf).reshape(self.w.shape)
            self.db = dmat.sum(axis=0)
            if not need_input_grad:
                return None
            return (dmat @ self.w.reshape(self.cout, self.cin)).reshape(x_shape)
        # scatter dout into the flat padded geometry (zeros elsewhere); a
        # leading tail lets the input-grad gather below use negative shifts
        tail = (k - 1) * wp + (k - 1)
        npad = bs * hp * wp
        nv = npad - tail
        dacc2 = self._ws.get("dacc", (npad + tail, self.cout), dout.dtype, zero=True)
        _out_view(dacc2[tail:], bs, hp, wp, hout, wout, self.stride)[:] = dout
        self.db = dout.sum(axis=(0, 1, 2))
        use_gather = need_input_grad and self.cout <= self.cin
        if use_gather:
            # one gathered matrix serves both the weight and input gradients:
            # gat[s, ij, :] = dacc[s - off_ij], so dW_ij = gat[:, ij, :].T @ xf
            # and dx = gat @ stacked weights
            gat = self._ws.get("gat", (npad, k * k, self.cout), dout.dtype)
            wstk = np.empty((k * k * self.cout, self.cin), dtype=self.w.dtype)
            idx = 0
            for i in range(k):
                for j in range(k):
                    off = i * wp + j
                    gat[:, idx, :] = dacc2[tail - off : tail - off + npad]
                    wstk[idx * self.cout : (idx + 1) * self.cout] = self.w[:, :, i, j]
                    idx += 1
            gmat = gat.reshape(npad, -1)
            dw_all = gmat.T @ xf[:npad]
            dw = np.empty_like(self.w)
            idx = 0
            for i in range(k):
                for j in range(k):
                    dw[:, :, i, j] = dw_all[idx * self.cout : (idx + 1) * self.cout]
                    idx += 1
            self.dw = dw
            dxf = self._ws.get("dxf", (npad, self.cin), dout.dtype)
            np.matmul(gmat, wstk, out=dxf)
        else:
            dw = np.empty_like(self.w)
            dacc_t = dacc2[tail : tail + nv].T  # BLAS consumes the transposed view
            for i in range(k):
                for j in range(k):
                    off = i * wp + j
                    dw[:, :, i, j] = dacc_t @ xf[off : off + nv]
            self.dw = dw
        if not need_input_grad:
            return None
        if not use_gather:
            # accumulate k*k shifted products into the narrow input width
            dxf = self._ws.get("dxf", (npad, self.cin), dout.dtype)
            tmp = self._ws.get("dx_tmp", (npad, self.cin), dout.dtype)
            first = True
            for i in range(k):
                for j in range(k):
                    off = i * wp + j
                    wij = np.ascontiguousarray(self.w[:, :, i, j])
                    np.matmul(
                        dacc2[tail - off : tail - off + npad], wij, out=(dxf if first else tmp)
                    )
                    if not first:
                        dxf += tmp
                    first = False
        dx = dxf.reshape(bs, hp, wp, self.cin)
        if self.pad:
            dx = dx[:, self.pad : self.pad + h, self.pad : self.pad + w_in, :]
        return dx

    def astype(self, dtype):
        self.w = self.w.astype(dtype)
        self.b = self.b.astype(dtype)
        self._ws = _Workspace()
        return self


def conv2d(x: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Functional channel-last convolution (correlation) with zero padding."""
    cout, cin, k, _ = w.shape
    layer = Conv2d(cin, cout, ksize=k, stride=stride, pad=pad, zero_init=True, dtype=w.dtype)
    layer.w = w
    layer.b = b
    return np.ascontiguousarray(layer.forward(x))


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise StateError("ReLU.backward before forward")
        return dout * self._mask


class Upsample2x:
    """Nearest-neighbor 2x upsampling (channel-last)."""

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.repeat(2, axis=1).repeat(2, axis=2)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        b, h, w, c = dout.shape
        return dout.reshape(b, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))
