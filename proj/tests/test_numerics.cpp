#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "redcmp/numerics.hpp"

using namespace redcmp;

namespace {

// Independent element-by-element oracle for W x + U h + b.
RealVec affine_oracle(const Matrix& w, const RealVec& x, const Matrix& u, const RealVec& h,
                      const RealVec& b) {
    RealVec out(b.size());
    for (std::size_t r = 0; r < w.rows; ++r) {
        double acc = b[r];
        for (std::size_t c = 0; c < w.cols; ++c) acc += w.at(r, c) * x[c];
        for (std::size_t c = 0; c < u.cols; ++c) acc += u.at(r, c) * h[c];
        out[r] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("affine passes the bias through zero weights") {
    Matrix w(2, 3), u(2, 2);
    const RealVec b{1.0, 2.0};
    const RealVec out = affine(w, RealVec{0.3, -0.7, 2.0}, u, RealVec{5.0, -5.0}, b);
    CHECK(out == b);
}

TEST_CASE("affine identity case") {
    Matrix w(2, 2), u(2, 2);
    w.at(0, 0) = w.at(1, 1) = 1.0;
    u.at(0, 0) = u.at(1, 1) = 1.0;
    const RealVec out = affine(w, {1.0, 0.0}, u, {0.0, 1.0}, {0.0, 0.0});
    CHECK(out[0] == doctest::Approx(1.0));
    CHECK(out[1] == doctest::Approx(1.0));
}

TEST_CASE("affine matches the scalar-loop oracle on random inputs") {
    Rng rng(7);
    const Matrix w = rand_matrix(rng, 3, 3, 1.0);
    const Matrix u = rand_matrix(rng, 3, 3, 1.0);
    RealVec x(3), h(3), b(3);
    for (auto* v : {&x, &h, &b})
        for (double& e : *v) e = rng.uniform(-2.0, 2.0);
    const RealVec got = affine(w, x, u, h, b);
    const RealVec want = affine_oracle(w, x, u, h, b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("affine rejects mismatched dimensions") {
    Matrix w(2, 3), u(2, 2);
    CHECK_THROWS_AS(affine(w, RealVec{1.0}, u, RealVec{1.0, 2.0}, RealVec{0.0, 0.0}),
                    std::invalid_argument);
}

TEST_CASE("sigmoid and tanh analytic points") {
    CHECK(sigmoid({0.0})[0] == doctest::Approx(0.5));
    CHECK(tanh_vec({0.0})[0] == doctest::Approx(0.0));
}

TEST_CASE("sigmoid symmetry") {
    for (double x : {0.5, 3.0, 10.0})
        CHECK(sigmoid({-x})[0] == doctest::Approx(1.0 - sigmoid({x})[0]).epsilon(1e-12));
}

TEST_CASE("sigmoid saturates without overflow") {
    const double v = sigmoid({100.0})[0];
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    // Compare against the exp(-|x|) branch form directly.
    const double e = std::exp(-100.0);
    CHECK(v == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-15));
    CHECK(sigmoid({-1000.0})[0] >= 0.0);
    CHECK(std::isfinite(sigmoid({-1000.0})[0]));
}

TEST_CASE("softmax of equal logits is uniform") {
    const RealVec p = softmax({0.0, 0.0, 0.0});
    for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax survives huge logits") {
    const RealVec p = softmax({1000.0, 0.0});
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(0.0));
    CHECK(std::isfinite(p[0]));
}

TEST_CASE("softmax matches the shifted exp/sum oracle") {
    Rng rng(11);
    RealVec logits(15);
    for (double& v : logits) v = rng.uniform(-5.0, 5.0);
    const RealVec got = softmax(logits);

    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    RealVec want(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) sum += (want[i] = std::exp(logits[i] - mx));
    for (double& v : want) v /= sum;
    for (std::size_t i = 0; i < logits.size(); ++i)
        CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("softmax sums to one even at magnitude 1e3, and is shift-invariant") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        RealVec logits(8);
        for (double& v : logits) v = rng.uniform(-1000.0, 1000.0);
        const RealVec p = softmax(logits);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v >= 0.0);  // spreads past ~700 underflow the cold entries to 0
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

        RealVec shifted = logits;
        for (double& v : shifted) v += 123.456;
        const RealVec q = softmax(shifted);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
    }
}

TEST_CASE("softmax entries are strictly positive at moderate magnitudes") {
    Rng rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        RealVec logits(8);
        for (double& v : logits) v = rng.uniform(-50.0, 50.0);
        for (double v : softmax(logits)) CHECK(v > 0.0);
    }
}

TEST_CASE("cross_entropy of a matching one-hot is (near) zero") {
    RealVec p{0.0, 1.0, 0.0};
    CHECK(cross_entropy(p, p) <= 1e-11);
    CHECK(cross_entropy(p, p) >= 0.0);
}

TEST_CASE("cross_entropy of a uniform over 15 symbols is ln 15") {
    RealVec p(15, 1.0 / 15.0);
    RealVec t(15, 0.0);
    t[3] = 1.0;
    CHECK(cross_entropy(p, t) == doctest::Approx(2.70805).epsilon(1e-5));
    CHECK(cross_entropy(p, t) == doctest::Approx(std::log(15.0)).epsilon(1e-12));
}

TEST_CASE("cross_entropy matches the scalar-loop oracle") {
    Rng rng(3);
    RealVec logits(10), t(10, 0.0);
    for (double& v : logits) v = rng.uniform(-3.0, 3.0);
    t[rng.index(10)] = 1.0;
    const RealVec p = softmax(logits);

    double want = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        want -= t[i] * std::log(std::max(p[i], 1e-12));
    CHECK(cross_entropy(p, t) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("rng streams are reproducible per seed") {
    Rng a(42), b(42), c(43);
    bool all_equal = true, any_diff = false;
    for (int i = 0; i < 100; ++i) {
        const std::uint64_t va = a.next_u64();
        all_equal = all_equal && (va == b.next_u64());
        any_diff = any_diff || (va != c.next_u64());
    }
    CHECK(all_equal);
    CHECK(any_diff);
}

TEST_CASE("rand_matrix stays inside its scale and repeats per seed") {
    Rng a(9), b(9);
    const Matrix m1 = rand_matrix(a, 8, 8, 0.25);
    const Matrix m2 = rand_matrix(b, 8, 8, 0.25);
    CHECK(m1 == m2);
    for (double v : m1.data) CHECK(std::abs(v) <= 0.25);
}

TEST_CASE("rand_gaussian with sigma zero is all zeros") {
    Rng rng(1);
    const RealVec v = rand_gaussian(rng, 7, 0.0);
    for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("rand_gaussian sample deviation tracks sigma") {
    Rng rng(123);
    const std::size_t n = 100000;
    const RealVec v = rand_gaussian(rng, n, 0.2);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(n);
    CHECK(std::abs(std::sqrt(var) - 0.2) < 0.01);
    CHECK(std::abs(mean) < 0.01);
}

TEST_CASE("rng index is unbiased enough for small n") {
    Rng rng(77);
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (int i = 0; i < 50000; ++i) ++counts[rng.index(5)];
    for (std::size_t c : counts) CHECK(std::abs(static_cast<double>(c) - 10000.0) < 500.0);
}
