#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fairhc/kernels.hpp"

using namespace fairhc;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

bool close(double a, double b, double rel) {
    if (std::isinf(a) || std::isinf(b)) return a == b;
    return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace

TEST_SUITE("kernels") {
    TEST_CASE("active table is one of the compiled variants") {
        const auto& active = kernels::active();
        CHECK((active.name == kernels::scalar().name ||
               (kernels::avx2() != nullptr && active.name == kernels::avx2()->name)));
    }

    TEST_CASE("scalar reference values") {
        const auto& k = kernels::scalar();
        const std::vector<double> x{1.0, 2.0, 3.0};
        CHECK(k.pairwise_abs_diff_sum(x) == 8.0);
        CHECK(k.dot(x, x) == 14.0);
        CHECK(k.min_value(x) == 1.0);
        CHECK(std::isinf(k.min_value(std::span<const double>{})));
        std::vector<double> y{1.0, 1.0, 1.0};
        k.axpy(2.0, x, y);
        CHECK(y == std::vector<double>{3.0, 5.0, 7.0});
    }

    TEST_CASE("AVX2 variant matches the scalar reference") {
        const kernels::KernelTable* v = kernels::avx2();
        if (v == nullptr) {
            MESSAGE("AVX2 kernels unavailable on this build or CPU; equivalence not exercised");
            return;
        }
        const auto& s = kernels::scalar();
        std::mt19937_64 rng(1234);
        for (std::size_t n = 0; n <= 67; ++n) {
            CAPTURE(n);
            const auto a = random_vector(rng, n, -5.0, 5.0);
            const auto b = random_vector(rng, n, -5.0, 5.0);
            CHECK(close(v->pairwise_abs_diff_sum(a), s.pairwise_abs_diff_sum(a), 1e-12));
            CHECK(close(v->dot(a, b), s.dot(a, b), 1e-12));
            CHECK(v->min_value(a) == s.min_value(a));
            auto y1 = b;
            auto y2 = b;
            v->axpy(-0.75, a, y1);
            s.axpy(-0.75, a, y2);
            for (std::size_t i = 0; i < n; ++i) CHECK(close(y1[i], y2[i], 1e-14));

            const auto vf = random_vector(rng, n, 0.9, 1.1);
            const auto vt = random_vector(rng, n, 0.9, 1.1);
            const auto delta = random_vector(rng, n, -0.2, 0.2);
            const auto g = random_vector(rng, n, 0.1, 50.0);
            const auto bb = random_vector(rng, n, -50.0, 0.0);
            std::vector<double> c(n), sn(n);
            for (std::size_t i = 0; i < n; ++i) {
                c[i] = std::cos(delta[i]);
                sn[i] = std::sin(delta[i]);
            }
            std::vector<double> p1(n), q1(n), r1(n), t1(n), p2(n), q2(n), r2(n), t2(n);
            const kernels::BranchInputs in{vf, vt, c, sn, g, bb};
            v->branch_flows(in, {p1, q1, r1, t1});
            s.branch_flows(in, {p2, q2, r2, t2});
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(close(p1[i], p2[i], 1e-12));
                CHECK(close(q1[i], q2[i], 1e-12));
                CHECK(close(r1[i], r2[i], 1e-12));
                CHECK(close(t1[i], t2[i], 1e-12));
            }
        }
    }

    TEST_CASE("integer-valued pairwise sums agree exactly") {
        const kernels::KernelTable* v = kernels::avx2();
        if (v == nullptr) return;
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> u(0, 1000);
        for (std::size_t n = 1; n < 40; ++n) {
            std::vector<double> x(n);
            for (double& e : x) e = u(rng);
            CHECK(v->pairwise_abs_diff_sum(x) == kernels::scalar().pairwise_abs_diff_sum(x));
        }
    }
}
