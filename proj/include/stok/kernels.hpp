#pragma once

#include "stok/common.hpp"

namespace stok::kern {

// Backend selection. The parallel kernels split the outermost independent
// index across OpenMP threads but run the same per-range code as the serial
// reference, so both backends produce bitwise-identical results.
bool parallel_enabled();
void set_parallel(bool on);
int  thread_count();
void set_thread_count(int n);

struct Conv1dSpec {
    index_t c_in = 0, c_out = 0, t_in = 0;   // input already padded
    index_t kernel = 1, stride = 1, dilation = 1, groups = 1;
    index_t t_out() const { return (t_in - dilation * (kernel - 1) - 1) / stride + 1; }
};

struct ConvT1dSpec {
    index_t c_in = 0, c_out = 0, t_in = 0;
    index_t kernel = 1, stride = 1;
    index_t t_out() const { return (t_in - 1) * stride + kernel; }  // caller trims
};

struct Conv2dSpec {
    index_t c_in = 0, c_out = 0, h_in = 0, w_in = 0;  // input already padded
    index_t kh = 1, kw = 1, sh = 1, sw = 1, dh = 1, dw = 1;
    index_t h_out() const { return (h_in - dh * (kh - 1) - 1) / sh + 1; }
    index_t w_out() const { return (w_in - dw * (kw - 1) - 1) / sw + 1; }
};

namespace ref {
// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
// C[m x n] += A[m x k] * B^T  (B stored n x k)
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
// C[m x n] += A^T * B  (A stored k x m)
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);

// x: [c_in][t_in], w: [c_out][c_in/groups][kernel], y: [c_out][t_out], accumulated.
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y);
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx);
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw);

// x: [c_in][t_in], w: [c_in][c_out][kernel], y: [c_out][t_out], accumulated.
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y);
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx);
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw);

// x: [c_in][h][w], w: [c_out][c_in][kh][kw], y: [c_out][h_out][w_out], accumulated.
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y);
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx);
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw);
}  // namespace ref

namespace par {
void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y);
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx);
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw);
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y);
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx);
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw);
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y);
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx);
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw);
}  // namespace par

// Dispatchers honoring the backend flag.
void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n);
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y);
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx);
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw);
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y);
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx);
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw);
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y);
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx);
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw);

// Elementwise parallel loop; the body must write only index i.
template <class Fn>
void parallel_for(index_t n, const Fn& fn) {
    if (parallel_enabled() && n >= 2048) {
#pragma omp parallel for schedule(static)
        for (index_t i = 0; i < n; ++i) fn(i);
    } else {
        for (index_t i = 0; i < n; ++i) fn(i);
    }
}

// Deterministic sum: fixed-size block partials (parallel across blocks),
// then a serial pass over partials. Identical result for both backends and
// any thread count.
double block_sum(const double* x, index_t n);

}  // namespace stok::kern
