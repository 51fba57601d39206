#include "stok/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <map>
#include <mutex>
#include <unordered_set>

#include "stok/kernels.hpp"

namespace stok::ag {

namespace {

std::atomic<std::int64_t> g_seq{0};
thread_local bool g_grad_enabled = true;

std::int64_t next_seq() { return g_seq.fetch_add(1, std::memory_order_relaxed); }

bool any_requires_grad(const std::vector<Var>& parents) {
    for (const auto& p : parents)
        if (p && p->requires_grad) return true;
    return false;
}

Var make_node(const char* name, Tensor val, std::vector<Var> parents,
              std::function<void(Node&)> bwd) {
    auto n = std::make_shared<Node>();
    n->val = std::move(val);
    n->seq = next_seq();
    n->op = name;
    if (g_grad_enabled && any_requires_grad(parents)) {
        n->requires_grad = true;
        n->parents = std::move(parents);
        n->backward_fn = std::move(bwd);
    }
    return n;
}

void add_into(Tensor& dst, const Tensor& src) {
    STOK_CHECK(dst.numel() == src.numel(), "gradient shape mismatch");
    double* d = dst.ptr();
    const double* s = src.ptr();
    kern::parallel_for(dst.numel(), [&](index_t i) { d[i] += s[i]; });
}

double logaddexp(double a, double b) {
    if (a == -INFINITY) return b;
    if (b == -INFINITY) return a;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->seq = next_seq();
    n->op = "const";
    return n;
}

Var make_param(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    n->seq = next_seq();
    n->requires_grad = true;
    n->op = "param";
    return n;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void backward(const Var& root) {
    STOK_CHECK(root && root->numel_is_scalar(), "backward root must be scalar");
}

// Defined below; forward declaration trick not used — see Node helper.

}  // namespace stok::ag

// numel_is_scalar helper lives here to keep the header small.
namespace stok::ag {
}  // namespace stok::ag
