# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernel for the default 4-10-10-4 network.

Mirrors _pure.run_epoch exactly: one pass over the shuffled sample order,
mean-squared-error over each mini-batch, one Adam step per batch, flat
parameter vector updated in place.  Fixed layer sizes let the compiler
unroll the inner products, which is what makes the 10k-epoch training
regime cheap enough to benchmark across many seeds.

Flat layout: W1[4x10] | b1[10] | W2[10x10] | b2[10] | W3[10x4] | b3[4].
"""

from libc.math cimport sqrt

LAYER_SIZES = (4, 10, 10, 4)
N_PARAMS = 204

cdef enum:
    O_W1 = 0
    O_B1 = 40
    O_W2 = 50
    O_B2 = 150
    O_W3 = 160
    O_B3 = 200
    NP_ = 204


def run_epoch(double[::1] p, double[::1] m, double[::1] v, long t,
              double[:, ::1] x, double[:, ::1] y, long[::1] order,
              int batch_size, double lr, double beta1, double beta2,
              double eps):
    """(sse, t_new) after one epoch; p, m, v are updated in place."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t start, bi, s, i, j, k
    cdef int nb
    cdef double sse = 0.0
    cdef double scale, c1, c2
    cdef double z1[10]
    cdef double a1[10]
    cdef double z2[10]
    cdef double a2[10]
    cdef double o[4]
    cdef double gout[4]
    cdef double ga2[10]
    cdef double gz2[10]
    cdef double ga1[10]
    cdef double gz1[10]
    cdef double g[204]
    cdef double xs[4]
    cdef double acc, gk, mh, vh

    if x.shape[1] != 4 or y.shape[1] != 4:
        raise ValueError("kernel expects 4 inputs and 4 outputs")

    for start in range(0, n, batch_size):
        nb = <int> (batch_size if start + batch_size <= n else n - start)
        for i in range(NP_):
            g[i] = 0.0
        scale = 2.0 / (nb * 4.0)

        for bi in range(nb):
            s = order[start + bi]
            for i in range(4):
                xs[i] = x[s, i]
            # forward
            for j in range(10):
                acc = p[O_B1 + j]
                for i in range(4):
                    acc += xs[i] * p[O_W1 + i * 10 + j]
                z1[j] = acc
                a1[j] = acc if acc > 0.0 else 0.0
            for j in range(10):
                acc = p[O_B2 + j]
                for i in range(10):
                    acc += a1[i] * p[O_W2 + i * 10 + j]
                z2[j] = acc
                a2[j] = acc if acc > 0.0 else 0.0
            for k in range(4):
                acc = p[O_B3 + k]
                for j in range(10):
                    acc += a2[j] * p[O_W3 + j * 4 + k]
                o[k] = acc
            # residual, loss, output gradient
            for k in range(4):
                acc = o[k] - y[s, k]
                sse += acc * acc
                gout[k] = scale * acc
            # backward
            for k in range(4):
                g[O_B3 + k] += gout[k]
            for j in range(10):
                acc = 0.0
                for k in range(4):
                    g[O_W3 + j * 4 + k] += a2[j] * gout[k]
                    acc += p[O_W3 + j * 4 + k] * gout[k]
                ga2[j] = acc
                gz2[j] = acc if z2[j] > 0.0 else 0.0
                g[O_B2 + j] += gz2[j]
            for i in range(10):
                acc = 0.0
                for j in range(10):
                    g[O_W2 + i * 10 + j] += a1[i] * gz2[j]
                    acc += p[O_W2 + i * 10 + j] * gz2[j]
                ga1[i] = acc
                gz1[i] = acc if z1[i] > 0.0 else 0.0
                g[O_B1 + i] += gz1[i]
            for i in range(4):
                for j in range(10):
                    g[O_W1 + i * 10 + j] += xs[i] * gz1[j]

        # Adam step
        t += 1
        c1 = 1.0 - beta1 ** t
        c2 = 1.0 - beta2 ** t
        for i in range(NP_):
            gk = g[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * gk
            v[i] = beta2 * v[i] + (1.0 - beta2) * gk * gk
            mh = m[i] / c1
            vh = v[i] / c2
            p[i] -= lr * mh / (sqrt(vh) + eps)

    return sse, t
