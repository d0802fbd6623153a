#include <doctest.h>

#include <algorithm>
#include <random>

#include <json.hpp>

#include "fairhc/errors.hpp"
#include "fairhc/kpi.hpp"

using namespace fairhc;

TEST_SUITE("kpi") {
    TEST_CASE("price of fairness") {
        CHECK(price_of_fairness(658, 520) == doctest::Approx(0.2097).epsilon(1e-3));
        CHECK(price_of_fairness(922, 325) == doctest::Approx(0.6475).epsilon(1e-3));
        CHECK(price_of_fairness(42.5, 42.5) == 0.0);
        CHECK(price_of_fairness(100, 101) < 0.0);
        CHECK_THROWS_AS((void)price_of_fairness(0, 1), ZeroUtilitarianHC);
        CHECK_THROWS_AS((void)price_of_fairness(10, -1), InputError);
    }

    TEST_CASE("gini reference values") {
        CHECK(gini(std::vector<double>{2, 2, 2}) == 0.0);
        CHECK(gini(std::vector<double>{0, 4}) == 0.5);
        CHECK(gini(std::vector<double>{1, 2, 3}) == doctest::Approx(8.0 / 36.0).epsilon(1e-12));
        const GiniResult z = gini_checked(std::vector<double>{0, 0, 0});
        CHECK(z.value == 0.0);
        CHECK(z.all_zero);
        CHECK_THROWS_AS((void)gini(std::vector<double>{}), InputError);
        CHECK_THROWS_AS((void)gini(std::vector<double>{1, -1}), InputError);
    }

    TEST_CASE("gini invariances and bounds") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u(0.0, 100.0);
        std::uniform_real_distribution<double> scale(0.01, 100.0);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t n = 1 + static_cast<std::size_t>(trial % 25);
            std::vector<double> p(n);
            for (double& x : p) x = u(rng);
            const double g = gini(p);
            CHECK(g >= 0.0);
            CHECK(g <= static_cast<double>(n - 1) / static_cast<double>(n) + 1e-12);
            const double c = scale(rng);
            std::vector<double> scaled(p);
            for (double& x : scaled) x *= c;
            CHECK(gini(scaled) == doctest::Approx(g).epsilon(1e-12));
            std::shuffle(p.begin(), p.end(), rng);
            CHECK(gini(p) == doctest::Approx(g).epsilon(1e-12));
        }
        std::vector<double> single(7, 0.0);
        single[3] = 5.0;
        CHECK(gini(single) == doctest::Approx(6.0 / 7.0).epsilon(1e-14));
    }

    TEST_CASE("report and serialisation") {
        const std::vector<double> alloc{10, 20, 30};
        const KpiReport r = kpi_report(80.0, alloc);
        CHECK(r.hc_fair == 60.0);
        CHECK(r.pof == doctest::Approx(0.25));
        CHECK(r.n == 3);
        CHECK(r.mean_allocation == 20.0);
        CHECK(kpi_csv_header() == "hc_kw,pof,gini");
        CHECK(kpi_csv_row(r) == "60.000000,0.250000,0.222222");
        const auto j = nlohmann::json::parse(kpi_to_json(r));
        CHECK(j.at("pof").get<double>() == doctest::Approx(0.25));
        CHECK(j.at("n").get<int>() == 3);
    }
}
