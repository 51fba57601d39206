#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stok/tensor.hpp"

namespace stok::ag {

struct Node;
using Var = std::shared_ptr<Node>;

// Tape node. Ops created while grad mode is on record their parents and a
// backward closure; backward() replays closures in reverse creation order.
struct Node {
    Tensor val;
    Tensor grad;
    bool requires_grad = false;
    bool grad_ready = false;
    std::int64_t seq = 0;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;
    const char* op = "leaf";

    Tensor& ensure_grad() {
        if (!grad_ready) {
            grad = Tensor::zeros(val.shape());
            grad_ready = true;
        }
        return grad;
    }
    void zero_grad() {
        if (grad_ready) std::fill(grad.data().begin(), grad.data().end(), 0.0);
    }
};

Var constant(Tensor v);
Var make_param(Tensor v);

bool grad_enabled();

// Disables graph construction in scope; forwards still compute values.
struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Backpropagate from a scalar root (numel == 1).
void backward(const Var& root);

// --- elementwise ---
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var add_scalar(const Var& a, double s);
Var scale(const Var& a, double s);
Var abs_(const Var& a);
Var square(const Var& a);
Var sqrt_(const Var& a, double grad_eps = 1e-12);
Var exp_(const Var& a);
Var log_(const Var& a);
Var tanh_(const Var& a);
Var sigmoid_(const Var& a);
Var elu(const Var& a, double alpha = 1.0);
Var leaky_relu(const Var& a, double slope);
Var relu(const Var& a);
Var softplus(const Var& a);

// --- reductions ---
Var sum(const Var& a);
Var mean(const Var& a);
Var sum_axis0(const Var& a);  // [R][C] -> [C]
Var sum_axis1(const Var& a);  // [R][C] -> [R]

// --- shape ---
Var reshape(const Var& a, std::vector<index_t> shape);
Var transpose2d(const Var& a);
Var slice_rows(const Var& a, index_t r0, index_t r1);  // leading-dim slice
Var concat_rows(const std::vector<Var>& parts);        // along leading dim

// --- linear algebra ---
Var matmul(const Var& a, const Var& b);     // [m][k]*[k][n]
Var matmul_nt(const Var& a, const Var& b);  // [m][k]*[n][k]^T
Var linear(const Var& x, const Var& W, const Var& b);  // [T][I], [O][I], [O]
Var bmm(const Var& a, const Var& b);        // [B][m][k]*[B][k][n]
Var bmm_nt(const Var& a, const Var& b);     // [B][m][k]*[B][n][k]^T

// --- neural net ops ---
// x: [Cin][T]; w: [Cout][Cin/groups][K]; optional bias [Cout].
Var conv1d(const Var& x, const Var& w, const Var& b, index_t stride, index_t dilation,
           index_t groups, index_t pad_l, index_t pad_r);
// x: [Cin][T]; w: [Cin][Cout][K]; output trimmed by trim_l/trim_r.
Var convt1d(const Var& x, const Var& w, const Var& b, index_t stride, index_t trim_l,
            index_t trim_r);
// x: [Cin][H][W]; w: [Cout][Cin][KH][KW].
Var conv2d(const Var& x, const Var& w, const Var& b, index_t sh, index_t sw, index_t dh,
           index_t dw, index_t pad_h, index_t pad_w);
// x: [T][I]; wih: [4H][I]; whh: [4H][H]; bias: [4H]; returns [T][H].
Var lstm(const Var& x, const Var& wih, const Var& whh, const Var& bias, bool reverse);
Var embedding(const Var& table, const std::vector<index_t>& ids);
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
// mean negative log-likelihood over rows; label < 0 means "ignore this row".
Var cross_entropy_rows(const Var& logits, const std::vector<index_t>& labels);
Var avg_pool1d(const Var& x, index_t k, index_t s);  // [C][T]

// --- DSP ---
// x: [T]; returns [2][F][frames] (re, im), F = n_fft/2 + 1.
// Window applied per frame; output scaled by "norm".
Var stft_ri(const Var& x, index_t n_fft, index_t hop, const Tensor& window, double norm);
Var magnitude(const Var& re_im);  // [2][F][T'] -> [F][T']

// --- quantization / distillation glue ---
Var detach(const Var& a);
// Forward value = q; gradient passes through to z unchanged.
Var straight_through(const Var& z, const Tensor& q);
// Per-column (axis-0) cosine similarity of same-shape [T][D] inputs; columns
// with a zero-norm side yield cosine 0 with zero gradient.
Var colwise_cosine(const Var& p, const Var& s);
// Per-row cosine, same convention; [T][D] -> [T].
Var rowwise_cosine(const Var& p, const Var& s);

// --- CTC ---
// logits: [T][V]; exact forward algorithm over the extended label sequence.
Var ctc_loss(const Var& logits, const std::vector<index_t>& labels, index_t blank);
// Non-autograd log-likelihood log p(labels | logits) for scoring.
double ctc_log_likelihood(const Tensor& logits, const std::vector<index_t>& labels, index_t blank);

// --- composites ---
Var l1_mean(const Var& a, const Var& b);                  // mean |a-b|
Var mse_mean(const Var& a, const Var& b);                 // mean (a-b)^2
Var rms(const Var& a);                                    // sqrt(mean a^2)

}  // namespace stok::ag
