#include "stok/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stok::kern {

namespace {
std::atomic<bool> g_parallel{true};
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

int thread_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_thread_count(int n) {
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(n);
#else
    (void)n;
#endif
}

// ---------------------------------------------------------------------------
// Shared range bodies. ref:: runs them over the full range; par:: splits the
// outer index across threads. One compiled body per kernel keeps the two
// backends bitwise identical.
// ---------------------------------------------------------------------------

namespace {

inline void gemm_nn_rows(const double* A, const double* B, double* C, index_t k, index_t n,
                         index_t i0, index_t i1) {
    for (index_t i = i0; i < i1; ++i) {
        double* ci = C + i * n;
        const double* ai = A + i * k;
        for (index_t p = 0; p < k; ++p) {
            const double a = ai[p];
            const double* bp = B + p * n;
            for (index_t j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

inline void gemm_nt_rows(const double* A, const double* B, double* C, index_t k, index_t n,
                         index_t i0, index_t i1) {
    for (index_t i = i0; i < i1; ++i) {
        const double* ai = A + i * k;
        double* ci = C + i * n;
        for (index_t j = 0; j < n; ++j) {
            const double* bj = B + j * k;
            double acc = 0.0;
            for (index_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

// A stored [k x m]; C rows split by i.
inline void gemm_tn_rows(const double* A, const double* B, double* C, index_t m, index_t k,
                         index_t n, index_t i0, index_t i1) {
    for (index_t p = 0; p < k; ++p) {
        const double* ap = A + p * m;
        const double* bp = B + p * n;
        for (index_t i = i0; i < i1; ++i) {
            const double a = ap[i];
            double* ci = C + i * n;
            for (index_t j = 0; j < n; ++j) ci[j] += a * bp[j];
        }
    }
}

inline void conv1d_fwd_oc(const Conv1dSpec& s, const double* x, const double* w, double* y,
                          index_t oc0, index_t oc1) {
    const index_t to = s.t_out();
    const index_t cpg_in = s.c_in / s.groups;
    const index_t ocpg = s.c_out / s.groups;
    for (index_t oc = oc0; oc < oc1; ++oc) {
        const index_t g = oc / ocpg;
        double* yo = y + oc * to;
        for (index_t icl = 0; icl < cpg_in; ++icl) {
            const index_t ic = g * cpg_in + icl;
            const double* xi = x + ic * s.t_in;
            const double* wk = w + (oc * cpg_in + icl) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double wv = wk[kk];
                const double* xs = xi + kk * s.dilation;
                if (s.stride == 1) {
                    for (index_t t = 0; t < to; ++t) yo[t] += wv * xs[t];
                } else {
                    for (index_t t = 0; t < to; ++t) yo[t] += wv * xs[t * s.stride];
                }
            }
        }
    }
}

inline void conv1d_bwd_data_ic(const Conv1dSpec& s, const double* dy, const double* w, double* dx,
                               index_t ic0, index_t ic1) {
    const index_t to = s.t_out();
    const index_t cpg_in = s.c_in / s.groups;
    const index_t ocpg = s.c_out / s.groups;
    for (index_t ic = ic0; ic < ic1; ++ic) {
        const index_t g = ic / cpg_in;
        const index_t icl = ic - g * cpg_in;
        double* dxi = dx + ic * s.t_in;
        for (index_t ocl = 0; ocl < ocpg; ++ocl) {
            const index_t oc = g * ocpg + ocl;
            const double* dyo = dy + oc * to;
            const double* wk = w + (oc * cpg_in + icl) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double wv = wk[kk];
                double* dxs = dxi + kk * s.dilation;
                if (s.stride == 1) {
                    for (index_t t = 0; t < to; ++t) dxs[t] += wv * dyo[t];
                } else {
                    for (index_t t = 0; t < to; ++t) dxs[t * s.stride] += wv * dyo[t];
                }
            }
        }
    }
}

inline void conv1d_bwd_weight_oc(const Conv1dSpec& s, const double* dy, const double* x,
                                 double* dw, index_t oc0, index_t oc1) {
    const index_t to = s.t_out();
    const index_t cpg_in = s.c_in / s.groups;
    const index_t ocpg = s.c_out / s.groups;
    for (index_t oc = oc0; oc < oc1; ++oc) {
        const index_t g = oc / ocpg;
        const double* dyo = dy + oc * to;
        for (index_t icl = 0; icl < cpg_in; ++icl) {
            const index_t ic = g * cpg_in + icl;
            const double* xi = x + ic * s.t_in;
            double* wk = dw + (oc * cpg_in + icl) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double* xs = xi + kk * s.dilation;
                double acc = 0.0;
                if (s.stride == 1) {
                    for (index_t t = 0; t < to; ++t) acc += dyo[t] * xs[t];
                } else {
                    for (index_t t = 0; t < to; ++t) acc += dyo[t] * xs[t * s.stride];
                }
                wk[kk] += acc;
            }
        }
    }
}

inline void convt1d_fwd_oc(const ConvT1dSpec& s, const double* x, const double* w, double* y,
                           index_t oc0, index_t oc1) {
    const index_t to = s.t_out();
    for (index_t oc = oc0; oc < oc1; ++oc) {
        double* yo = y + oc * to;
        for (index_t ic = 0; ic < s.c_in; ++ic) {
            const double* xi = x + ic * s.t_in;
            const double* wk = w + (ic * s.c_out + oc) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double wv = wk[kk];
                double* ys = yo + kk;
                for (index_t t = 0; t < s.t_in; ++t) ys[t * s.stride] += wv * xi[t];
            }
        }
    }
}

inline void convt1d_bwd_data_ic(const ConvT1dSpec& s, const double* dy, const double* w,
                                double* dx, index_t ic0, index_t ic1) {
    const index_t to = s.t_out();
    for (index_t ic = ic0; ic < ic1; ++ic) {
        double* dxi = dx + ic * s.t_in;
        for (index_t oc = 0; oc < s.c_out; ++oc) {
            const double* dyo = dy + oc * to;
            const double* wk = w + (ic * s.c_out + oc) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double wv = wk[kk];
                const double* dys = dyo + kk;
                for (index_t t = 0; t < s.t_in; ++t) dxi[t] += wv * dys[t * s.stride];
            }
        }
    }
}

inline void convt1d_bwd_weight_ic(const ConvT1dSpec& s, const double* dy, const double* x,
                                  double* dw, index_t ic0, index_t ic1) {
    const index_t to = s.t_out();
    for (index_t ic = ic0; ic < ic1; ++ic) {
        const double* xi = x + ic * s.t_in;
        for (index_t oc = 0; oc < s.c_out; ++oc) {
            const double* dyo = dy + oc * to;
            double* wk = dw + (ic * s.c_out + oc) * s.kernel;
            for (index_t kk = 0; kk < s.kernel; ++kk) {
                const double* dys = dyo + kk;
                double acc = 0.0;
                for (index_t t = 0; t < s.t_in; ++t) acc += xi[t] * dys[t * s.stride];
                wk[kk] += acc;
            }
        }
    }
}

inline void conv2d_fwd_oc(const Conv2dSpec& s, const double* x, const double* w, double* y,
                          index_t oc0, index_t oc1) {
    const index_t ho = s.h_out(), wo = s.w_out();
    for (index_t oc = oc0; oc < oc1; ++oc) {
        double* yo = y + oc * ho * wo;
        for (index_t ic = 0; ic < s.c_in; ++ic) {
            const double* xi = x + ic * s.h_in * s.w_in;
            const double* wk = w + ((oc * s.c_in + ic) * s.kh) * s.kw;
            for (index_t kh = 0; kh < s.kh; ++kh) {
                for (index_t kw = 0; kw < s.kw; ++kw) {
                    const double wv = wk[kh * s.kw + kw];
                    for (index_t oh = 0; oh < ho; ++oh) {
                        const double* xr = xi + (oh * s.sh + kh * s.dh) * s.w_in + kw * s.dw;
                        double* yr = yo + oh * wo;
                        if (s.sw == 1) {
                            for (index_t ow = 0; ow < wo; ++ow) yr[ow] += wv * xr[ow];
                        } else {
                            for (index_t ow = 0; ow < wo; ++ow) yr[ow] += wv * xr[ow * s.sw];
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_bwd_data_ic(const Conv2dSpec& s, const double* dy, const double* w, double* dx,
                               index_t ic0, index_t ic1) {
    const index_t ho = s.h_out(), wo = s.w_out();
    for (index_t ic = ic0; ic < ic1; ++ic) {
        double* dxi = dx + ic * s.h_in * s.w_in;
        for (index_t oc = 0; oc < s.c_out; ++oc) {
            const double* dyo = dy + oc * ho * wo;
            const double* wk = w + ((oc * s.c_in + ic) * s.kh) * s.kw;
            for (index_t kh = 0; kh < s.kh; ++kh) {
                for (index_t kw = 0; kw < s.kw; ++kw) {
                    const double wv = wk[kh * s.kw + kw];
                    for (index_t oh = 0; oh < ho; ++oh) {
                        double* dxr = dxi + (oh * s.sh + kh * s.dh) * s.w_in + kw * s.dw;
                        const double* dyr = dyo + oh * wo;
                        if (s.sw == 1) {
                            for (index_t ow = 0; ow < wo; ++ow) dxr[ow] += wv * dyr[ow];
                        } else {
                            for (index_t ow = 0; ow < wo; ++ow) dxr[ow * s.sw] += wv * dyr[ow];
                        }
                    }
                }
            }
        }
    }
}

inline void conv2d_bwd_weight_oc(const Conv2dSpec& s, const double* dy, const double* x,
                                 double* dw, index_t oc0, index_t oc1) {
    const index_t ho = s.h_out(), wo = s.w_out();
    for (index_t oc = oc0; oc < oc1; ++oc) {
        const double* dyo = dy + oc * ho * wo;
        for (index_t ic = 0; ic < s.c_in; ++ic) {
            const double* xi = x + ic * s.h_in * s.w_in;
            double* wk = dw + ((oc * s.c_in + ic) * s.kh) * s.kw;
            for (index_t kh = 0; kh < s.kh; ++kh) {
                for (index_t kw = 0; kw < s.kw; ++kw) {
                    double acc = 0.0;
                    for (index_t oh = 0; oh < ho; ++oh) {
                        const double* xr = xi + (oh * s.sh + kh * s.dh) * s.w_in + kw * s.dw;
                        const double* dyr = dyo + oh * wo;
                        if (s.sw == 1) {
                            for (index_t ow = 0; ow < wo; ++ow) acc += dyr[ow] * xr[ow];
                        } else {
                            for (index_t ow = 0; ow < wo; ++ow) acc += dyr[ow] * xr[ow * s.sw];
                        }
                    }
                    wk[kh * s.kw + kw] += acc;
                }
            }
        }
    }
}

template <class Body>
void split_outer(index_t n, index_t min_grain, const Body& body) {
#ifdef _OPENMP
    if (n > 1) {
#pragma omp parallel
        {
            const index_t nthreads = omp_get_num_threads();
            const index_t tid = omp_get_thread_num();
            const index_t chunk = std::max<index_t>(min_grain, (n + nthreads - 1) / nthreads);
            const index_t lo = tid * chunk;
            const index_t hi = std::min(n, lo + chunk);
            if (lo < hi) body(lo, hi);
        }
        return;
    }
#endif
    (void)min_grain;
    body(0, n);
}

}  // namespace

// --- reference backend ---

namespace ref {
void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    gemm_nn_rows(A, B, C, k, n, 0, m);
}
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    gemm_nt_rows(A, B, C, k, n, 0, m);
}
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    gemm_tn_rows(A, B, C, m, k, n, 0, m);
}
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y) {
    conv1d_fwd_oc(s, x, w, y, 0, s.c_out);
}
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx) {
    conv1d_bwd_data_ic(s, dy, w, dx, 0, s.c_in);
}
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw) {
    conv1d_bwd_weight_oc(s, dy, x, dw, 0, s.c_out);
}
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y) {
    convt1d_fwd_oc(s, x, w, y, 0, s.c_out);
}
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx) {
    convt1d_bwd_data_ic(s, dy, w, dx, 0, s.c_in);
}
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw) {
    convt1d_bwd_weight_ic(s, dy, x, dw, 0, s.c_in);
}
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y) {
    conv2d_fwd_oc(s, x, w, y, 0, s.c_out);
}
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx) {
    conv2d_bwd_data_ic(s, dy, w, dx, 0, s.c_in);
}
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw) {
    conv2d_bwd_weight_oc(s, dy, x, dw, 0, s.c_out);
}
}  // namespace ref

// --- parallel backend ---

namespace par {
void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    split_outer(m, 8, [&](index_t lo, index_t hi) { gemm_nn_rows(A, B, C, k, n, lo, hi); });
}
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    split_outer(m, 8, [&](index_t lo, index_t hi) { gemm_nt_rows(A, B, C, k, n, lo, hi); });
}
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    split_outer(m, 8, [&](index_t lo, index_t hi) { gemm_tn_rows(A, B, C, m, k, n, lo, hi); });
}
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y) {
    split_outer(s.c_out, 1, [&](index_t lo, index_t hi) { conv1d_fwd_oc(s, x, w, y, lo, hi); });
}
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx) {
    split_outer(s.c_in, 1,
                [&](index_t lo, index_t hi) { conv1d_bwd_data_ic(s, dy, w, dx, lo, hi); });
}
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw) {
    split_outer(s.c_out, 1,
                [&](index_t lo, index_t hi) { conv1d_bwd_weight_oc(s, dy, x, dw, lo, hi); });
}
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y) {
    split_outer(s.c_out, 1, [&](index_t lo, index_t hi) { convt1d_fwd_oc(s, x, w, y, lo, hi); });
}
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx) {
    split_outer(s.c_in, 1,
                [&](index_t lo, index_t hi) { convt1d_bwd_data_ic(s, dy, w, dx, lo, hi); });
}
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw) {
    split_outer(s.c_in, 1,
                [&](index_t lo, index_t hi) { convt1d_bwd_weight_ic(s, dy, x, dw, lo, hi); });
}
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y) {
    split_outer(s.c_out, 1, [&](index_t lo, index_t hi) { conv2d_fwd_oc(s, x, w, y, lo, hi); });
}
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx) {
    split_outer(s.c_in, 1,
                [&](index_t lo, index_t hi) { conv2d_bwd_data_ic(s, dy, w, dx, lo, hi); });
}
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw) {
    split_outer(s.c_out, 1,
                [&](index_t lo, index_t hi) { conv2d_bwd_weight_oc(s, dy, x, dw, lo, hi); });
}
}  // namespace par

// --- dispatchers ---

#define STOK_DISPATCH(fn, ...)                       \
    do {                                             \
        if (parallel_enabled())                      \
            par::fn(__VA_ARGS__);                    \
        else                                         \
            ref::fn(__VA_ARGS__);                    \
    } while (0)

void gemm_nn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    STOK_DISPATCH(gemm_nn, A, B, C, m, k, n);
}
void gemm_nt(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    STOK_DISPATCH(gemm_nt, A, B, C, m, k, n);
}
void gemm_tn(const double* A, const double* B, double* C, index_t m, index_t k, index_t n) {
    STOK_DISPATCH(gemm_tn, A, B, C, m, k, n);
}
void conv1d_fwd(const Conv1dSpec& s, const double* x, const double* w, double* y) {
    STOK_DISPATCH(conv1d_fwd, s, x, w, y);
}
void conv1d_bwd_data(const Conv1dSpec& s, const double* dy, const double* w, double* dx) {
    STOK_DISPATCH(conv1d_bwd_data, s, dy, w, dx);
}
void conv1d_bwd_weight(const Conv1dSpec& s, const double* dy, const double* x, double* dw) {
    STOK_DISPATCH(conv1d_bwd_weight, s, dy, x, dw);
}
void convt1d_fwd(const ConvT1dSpec& s, const double* x, const double* w, double* y) {
    STOK_DISPATCH(convt1d_fwd, s, x, w, y);
}
void convt1d_bwd_data(const ConvT1dSpec& s, const double* dy, const double* w, double* dx) {
    STOK_DISPATCH(convt1d_bwd_data, s, dy, w, dx);
}
void convt1d_bwd_weight(const ConvT1dSpec& s, const double* dy, const double* x, double* dw) {
    STOK_DISPATCH(convt1d_bwd_weight, s, dy, x, dw);
}
void conv2d_fwd(const Conv2dSpec& s, const double* x, const double* w, double* y) {
    STOK_DISPATCH(conv2d_fwd, s, x, w, y);
}
void conv2d_bwd_data(const Conv2dSpec& s, const double* dy, const double* w, double* dx) {
    STOK_DISPATCH(conv2d_bwd_data, s, dy, w, dx);
}
void conv2d_bwd_weight(const Conv2dSpec& s, const double* dy, const double* x, double* dw) {
    STOK_DISPATCH(conv2d_bwd_weight, s, dy, x, dw);
}

#undef STOK_DISPATCH

double block_sum(const double* x, index_t n) {
    constexpr index_t kBlock = 4096;
    const index_t nblocks = (n + kBlock - 1) / kBlock;
    if (nblocks <= 1) {
        double s = 0.0;
        for (index_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    std::vector<double> partial(static_cast<size_t>(nblocks), 0.0);
    const bool go_par = parallel_enabled() && nblocks >= 4;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (go_par)
#endif
    for (index_t b = 0; b < nblocks; ++b) {
        const index_t lo = b * kBlock;
        const index_t hi = std::min(n, lo + kBlock);
        double s = 0.0;
        for (index_t i = lo; i < hi; ++i) s += x[i];
        partial[static_cast<size_t>(b)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace stok::kern
