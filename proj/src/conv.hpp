#pragma once

#include <cstddef>
#include <vector>

#include "gemm.hpp"

namespace hsjp::nn {

struct ConvShape {
    int in_c = 0;
    int out_c = 0;
    int k = 1;
    int stride = 1;
    int pad = 0;
};

inline int conv_out_dim(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// col is [in_c*k*k, out_h*out_w] row-major; out-of-bounds taps are zero.
template <class T>
void im2col(const T* x, int in_c, int h, int w, int k, int stride, int pad, T* col) {
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const std::size_t ohw = static_cast<std::size_t>(oh) * ow;
    T* dst = col;
    for (int c = 0; c < in_c; ++c) {
        const T* plane = x + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) *dst++ = T(0);
                        continue;
                    }
                    const T* row = plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        *dst++ = (ix < 0 || ix >= w) ? T(0) : row[ix];
                    }
                }
            }
        }
    }
    (void)ohw;
}

// Scatter-add of a col matrix back into the input layout (for dX).
template <class T>
void col2im_add(const T* col, int in_c, int h, int w, int k, int stride, int pad, T* dx) {
    const int oh = conv_out_dim(h, k, stride, pad);
    const int ow = conv_out_dim(w, k, stride, pad);
    const T* src = col;
    for (int c = 0; c < in_c; ++c) {
        T* plane = dx + static_cast<std::size_t>(c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        src += ow;
                        continue;
                    }
                    T* row = plane + static_cast<std::size_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) row[ix] += *src;
                        ++src;
                    }
                }
            }
        }
    }
}

// out[out_c, oh*ow] = W[out_c, in_c*k*k] x col + bias. col_scratch must hold
// in_c*k*k*oh*ow elements.
template <class T>
void conv_forward(const T* x, int h, int w, const ConvShape& s, const T* weight, const T* bias,
                  T* out, T* col_scratch) {
    const int oh = conv_out_dim(h, s.k, s.stride, s.pad);
    const int ow = conv_out_dim(w, s.k, s.stride, s.pad);
    const int kk = s.in_c * s.k * s.k;
    const int ohw = oh * ow;
    im2col(x, s.in_c, h, w, s.k, s.stride, s.pad, col_scratch);
    linalg::gemm<T>(false, false, s.out_c, ohw, kk, T(1), weight, kk, col_scratch, ohw, T(0),
                    out, ohw);
    for (int c = 0; c < s.out_c; ++c) {
        T* row = out + static_cast<std::size_t>(c) * ohw;
        const T b = bias[c];
        for (int i = 0; i < ohw; ++i) row[i] += b;
    }
}

// Accumulates dW/dB; writes dX when non-null. col_scratch as in forward;
// dcol_scratch same size (only used when dx != nullptr).
template <class T>
void conv_backward(const T* x, int h, int w, const ConvShape& s, const T* weight, const T* dout,
                   T* dweight, T* dbias, T* dx, T* col_scratch, T* dcol_scratch) {
    const int oh = conv_out_dim(h, s.k, s.stride, s.pad);
    const int ow = conv_out_dim(w, s.k, s.stride, s.pad);
    const int kk = s.in_c * s.k * s.k;
    const int ohw = oh * ow;

    im2col(x, s.in_c, h, w, s.k, s.stride, s.pad, col_scratch);
    // dW += dOut x col^T
    linalg::gemm<T>(false, true, s.out_c, kk, ohw, T(1), dout, ohw, col_scratch, ohw, T(1),
                    dweight, kk);
    for (int c = 0; c < s.out_c; ++c) {
        const T* row = dout + static_cast<std::size_t>(c) * ohw;
        T acc = T(0);
        for (int i = 0; i < ohw; ++i) acc += row[i];
        dbias[c] += acc;
    }
    if (dx) {
        // dcol = W^T x dOut, then scatter back
        linalg::gemm<T>(true, false, kk, ohw, s.out_c, T(1), weight, kk, dout, ohw, T(0),
                        dcol_scratch, ohw);
        col2im_add(dcol_scratch, s.in_c, h, w, s.k, s.stride, s.pad, dx);
    }
}

}  // namespace hsjp::nn
