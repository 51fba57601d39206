#pragma once

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <sstream>
#include <string>

namespace stok {

using index_t = std::int64_t;

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }

namespace detail {
inline void format_parts(std::ostringstream&) {}
template <class T, class... Rest>
void format_parts(std::ostringstream& os, const T& v, const Rest&... rest) {
    os << v;
    format_parts(os, rest...);
}
}  // namespace detail

template <class... Parts>
std::string strcat_msg(const Parts&... parts) {
    std::ostringstream os;
    detail::format_parts(os, parts...);
    return os.str();
}

#define STOK_CHECK(cond, ...)                                            \
    do {                                                                 \
        if (!(cond)) ::stok::fail(::stok::strcat_msg(__VA_ARGS__));      \
    } while (0)

// Deterministic RNG. Distribution transforms are hand-rolled so results do
// not depend on the standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() {
        return (next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller, no caching: two uniforms per sample.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // [0, n)
    index_t uniform_int(index_t n) {
        STOK_CHECK(n > 0, "uniform_int: n must be positive, got ", n);
        return static_cast<index_t>(next_u64() % static_cast<std::uint64_t>(n));
    }

    // Derive an independent stream, e.g. one per worker or per sub-module.
    Rng fork(std::uint64_t stream) {
        return Rng(next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace stok
