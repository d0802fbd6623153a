#include <doctest.h>

#include <random>

#include "fairhc/errors.hpp"
#include "fairhc/formulation.hpp"
#include "fixtures.hpp"

using namespace fairhc;
using namespace fairhc::testing;

TEST_SUITE("formulation") {
    TEST_CASE("policy grammar round-trips") {
        for (const char* text : {"utilitarian", "egalitarian", "bounded:alpha=0.5,beta=0.3", "bargaining:k=0.7"}) {
            CHECK(to_string(parse_policy(text)) == text);
        }
        CHECK(std::get<Bounded>(parse_policy("bounded: beta=0.25, alpha=1")).alpha == 1.0);
        CHECK(policy_name(parse_policy("bargaining:k=1")) == "bargaining");
    }

    TEST_CASE("policy grammar errors") {
        CHECK_THROWS_AS((void)parse_policy("bounded:alpha=1.5,beta=0"), ParameterOutOfRange);
        CHECK_THROWS_AS((void)parse_policy("bargaining:k=-0.1"), ParameterOutOfRange);
        CHECK_THROWS_AS((void)parse_policy("bounded:alpha=0.5"), InputError);
        CHECK_THROWS_AS((void)parse_policy("utilitarian:k=1"), InputError);
        CHECK_THROWS_AS((void)parse_policy("bargaining:k=abc"), InputError);
        CHECK_THROWS_AS((void)parse_policy("fair"), InputError);
        CHECK_THROWS_AS(validate(Bounded{0.2, 2.0}), ParameterOutOfRange);
    }

    TEST_CASE("policy bounds") {
        const auto f = per_unit(linear3());
        const HCProblem u = build_problem(f, Utilitarian{});
        CHECK(u.lower == std::vector<double>{0.0, 0.0});
        CHECK(u.upper == std::vector<double>{1.5, 1.5});
        CHECK_FALSE(u.tie);

        CHECK(build_problem(f, Egalitarian{}).tie);

        const References refs{2.0, {10.0, 4.0}};
        const HCProblem collapsed = build_problem(f, Bounded{1.0, 0.0}, refs);
        CHECK(collapsed.lower == std::vector<double>{2.0, 2.0});
        CHECK(collapsed.upper == std::vector<double>{2.0, 2.0});
        const HCProblem open = build_problem(f, Bounded{0.0, 1.0}, refs);
        CHECK(open.lower == std::vector<double>{0.0, 0.0});
        CHECK(open.upper == std::vector<double>{10.0, 10.0});

        CHECK_THROWS_AS((void)build_problem(f, Bounded{0.5, 0.5}), MissingReference);
    }

    TEST_CASE("bargaining objective") {
        const auto f = per_unit(linear3());
        const HCProblem b1 = build_problem(f, Bargaining{1.0});
        const std::vector<double> p{0.3, 0.9};
        CHECK(objective_value(b1, p) == doctest::Approx(1.2));
        const HCProblem b0 = build_problem(f, Bargaining{0.0});
        CHECK(objective_value(b0, p) == doctest::Approx(-0.3));
        CHECK(disparity(p) == doctest::Approx(0.3));
        CHECK(b1.upper == std::vector<double>{1.5, 1.5});
    }

    TEST_CASE("bounded feasible sets nest and contain the egalitarian point") {
        const auto f = per_unit(star3());
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const References refs{0.4, {0.9, 0.2}};
        for (int trial = 0; trial < 500; ++trial) {
            const double a = u(rng), b = u(rng);
            const double a2 = a * u(rng), b2 = b + (1.0 - b) * u(rng);
            const HCProblem tight = build_problem(f, Bounded{a, b}, refs);
            const HCProblem loose = build_problem(f, Bounded{a2, b2}, refs);
            for (std::size_t d = 0; d < 2; ++d) {
                CHECK(loose.lower[d] <= tight.lower[d]);
                CHECK(loose.upper[d] >= tight.upper[d]);
            }
            CHECK(within_bounds(tight, std::vector<double>{0.4, 0.4}));
        }
    }
}
