#pragma once

#include <cstddef>
#include <cstdint>
#include <new>
#include <span>
#include <vector>

namespace redcmp {

using RealVec = std::vector<double>;

// 64-byte aligned storage. Vectorized kernels peel loops based on pointer
// alignment; pinning the alignment keeps every run on one code path, which
// the byte-identical-artifacts contract depends on.
template <typename T>
struct AlignedAlloc {
    using value_type = T;
    static constexpr std::size_t alignment = 64;

    AlignedAlloc() = default;
    template <typename U>
    AlignedAlloc(const AlignedAlloc<U>&) noexcept {}

    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{alignment}));
    }
    void deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t{alignment});
    }
    template <typename U>
    bool operator==(const AlignedAlloc<U>&) const noexcept {
        return true;
    }
};

using AlignedVec = std::vector<double, AlignedAlloc<double>>;

// Dense row-major matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Matrix&) const = default;
};

// Deterministic seeded generator (xoshiro256** seeded through splitmix64).
// Identical seed gives an identical stream; advancing the stream is the
// only mutation.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    // Uniform in [0, 1).
    double uniform();
    // Uniform in [lo, hi).
    double uniform(double lo, double hi);
    // Unbiased integer in [0, n), n >= 1.
    std::uint64_t index(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
};

// Mixes a list of values into a single sub-stream seed.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

// W x + U h + b. Dimension mismatch throws std::invalid_argument.
RealVec affine(const Matrix& w, const RealVec& x, const Matrix& u, const RealVec& h,
               const RealVec& b);

double sigmoid_scalar(double x);
RealVec sigmoid(const RealVec& v);
RealVec tanh_vec(const RealVec& v);

// Max-shifted softmax; entries positive, sum 1.
RealVec softmax(const RealVec& logits);

// -sum target_k * ln(max(p_k, 1e-12)).
double cross_entropy(const RealVec& p, const RealVec& target);

// Uniform entries in [-scale, scale].
Matrix rand_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale);
// Zero-mean Gaussian of width sigma via Box-Muller.
RealVec rand_gaussian(Rng& rng, std::size_t n, double sigma);

bool all_finite(std::span<const double> v);

// --- dense kernels -------------------------------------------------------
// Shared by the recurrent cells and the lockstep-batched trainer. Row-major
// throughout; callers guarantee shapes.

// y += M x
void matvec_add(const Matrix& m, const double* x, double* y);
// y += M^T x
void matvec_t_add(const Matrix& m, const double* x, double* y);
// M += a (x) b   (outer product, |a| = rows, |b| = cols)
void outer_add(Matrix& m, const double* a, const double* b);
// C (m x n) += A (m x k) * B (k x n), all row-major contiguous.
void gemm_acc(std::size_t m, std::size_t k, std::size_t n, const double* a,
              const double* b, double* c);

}  // namespace redcmp
