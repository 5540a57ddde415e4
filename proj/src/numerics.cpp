#include "redcmp/numerics.hpp"

#include <cmath>
#include <stdexcept>

namespace redcmp {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::index(std::uint64_t n) {
    // Lemire multiply-shift with rejection for exact uniformity.
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        std::uint64_t threshold = -n % n;
        while (lo < threshold) {
            x = next_u64();
            m = static_cast<unsigned __int128>(x) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t acc = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
    for (std::uint64_t p : parts) {
        acc ^= p + 0x9e3779b97f4a7c15ULL + (acc << 6) + (acc >> 2);
        acc = splitmix64(acc);
    }
    return acc;
}

RealVec affine(const Matrix& w, const RealVec& x, const Matrix& u, const RealVec& h,
               const RealVec& b) {
    if (w.cols != x.size() || u.cols != h.size() || w.rows != u.rows || w.rows != b.size())
        throw std::invalid_argument("affine: dimension mismatch");
    RealVec out = b;
    matvec_add(w, x.data(), out.data());
    matvec_add(u, h.data(), out.data());
    return out;
}

double sigmoid_scalar(double x) {
    // Sign-branched form so exp never overflows.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

RealVec sigmoid(const RealVec& v) {
    RealVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
    return out;
}

RealVec tanh_vec(const RealVec& v) {
    RealVec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
    return out;
}

RealVec softmax(const RealVec& logits) {
    if (logits.empty()) throw std::invalid_argument("softmax: empty input");
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    RealVec out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    const double inv = 1.0 / sum;
    for (double& v : out) v *= inv;
    return out;
}

double cross_entropy(const RealVec& p, const RealVec& target) {
    if (p.size() != target.size()) throw std::invalid_argument("cross_entropy: size mismatch");
    constexpr double kEps = 1e-12;
    double loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        loss -= target[i] * std::log(std::max(p[i], kEps));
    return loss;
}

Matrix rand_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("rand_matrix: scale must be > 0");
    Matrix m(rows, cols);
    for (double& v : m.data) v = rng.uniform(-scale, scale);
    return m;
}

RealVec rand_gaussian(Rng& rng, std::size_t n, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("rand_gaussian: sigma must be >= 0");
    RealVec out(n);
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    for (std::size_t i = 0; i < n; i += 2) {
        const double u1 = 1.0 - rng.uniform();  // (0, 1]
        const double u2 = rng.uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out[i] = sigma * (r * std::cos(kTwoPi * u2));
        if (i + 1 < n) out[i + 1] = sigma * (r * std::sin(kTwoPi * u2));
    }
    return out;
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

void matvec_add(const Matrix& m, const double* x, double* y) {
    const std::size_t rows = m.rows, cols = m.cols;
    const double* w = m.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
        y[r] += acc;
    }
}

void matvec_t_add(const Matrix& m, const double* x, double* y) {
    const std::size_t rows = m.rows, cols = m.cols;
    const double* w = m.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* wr = w + r * cols;
        const double xr = x[r];
        for (std::size_t c = 0; c < cols; ++c) y[c] += wr[c] * xr;
    }
}

void outer_add(Matrix& m, const double* a, const double* b) {
    const std::size_t rows = m.rows, cols = m.cols;
    double* w = m.data.data();
    for (std::size_t r = 0; r < rows; ++r) {
        double* wr = w + r * cols;
        const double ar = a[r];
        for (std::size_t c = 0; c < cols; ++c) wr[c] += ar * b[c];
    }
}

void gemm_acc(std::size_t m, std::size_t k, std::size_t n, const double* a, const double* b,
              double* c) {
    // Saxpy ordering: the inner loop runs unit-stride over a row of B and C,
    // which vectorizes well for the small shapes the trainer produces.
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a + i * k;
        double* ci = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b + p * n;
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

}  // namespace redcmp
