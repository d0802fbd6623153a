#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fairhc/errors.hpp"
#include "fairhc/kpi.hpp"
#include "fairhc/pareto.hpp"
#include "fixtures.hpp"

using namespace fairhc;
using namespace fairhc::testing;

namespace {

ParetoPoint pt(double gini, double pof, double param = 0.0) {
    ParetoPoint p;
    p.gini = gini;
    p.pof = pof;
    p.param = param;
    p.status = SolveStatus::optimal;
    return p;
}

bool same(const ParetoPoint& a, const ParetoPoint& b) { return a.gini == b.gini && a.pof == b.pof; }

}  // namespace

TEST_SUITE("pareto") {
    TEST_CASE("nondominated filter") {
        const std::vector<ParetoPoint> three{pt(0, 1), pt(1, 0), pt(0.2, 0.2)};
        CHECK(pareto_filter(three).size() == 3);

        const std::vector<ParetoPoint> dominated{pt(0.2, 0.2), pt(0.3, 0.3)};
        const auto f = pareto_filter(dominated);
        REQUIRE(f.size() == 1);
        CHECK(same(f[0], pt(0.2, 0.2)));

        const std::vector<ParetoPoint> dup{pt(0.5, 0.5, 1), pt(0.5, 0.5, 2)};
        const auto d = pareto_filter(dup);
        REQUIRE(d.size() == 1);
        CHECK(d[0].param == 1);

        std::vector<ParetoPoint> bad{pt(0.1, 0.9), pt(std::nan(""), 0.0), pt(0.0, 0.0)};
        bad[2].status = SolveStatus::failed;
        CHECK(pareto_filter(bad).size() == 1);
    }

    TEST_CASE("knee point examples") {
        const std::vector<ParetoPoint> bowed{pt(0, 1), pt(1, 0), pt(0.1, 0.1)};
        CHECK(same(knee_point(bowed), pt(0.1, 0.1)));

        const std::vector<ParetoPoint> two{pt(0, 0.8), pt(0.5, 0)};
        // normalized: (0,1) and (1,0) tie on norm, lower pof wins
        CHECK(same(knee_point(two), pt(0.5, 0)));

        const std::vector<ParetoPoint> on_chord{pt(0, 1), pt(0.5, 0.5), pt(1, 0)};
        const ParetoPoint fb = knee_point(on_chord);
        CHECK(same(fb, pt(0.5, 0.5)));  // smallest normalized norm

        const std::vector<ParetoPoint> off_chord{pt(0, 1), pt(0.5, 0.45), pt(1, 0)};
        CHECK(same(knee_point(off_chord), pt(0.5, 0.45)));

        const std::vector<ParetoPoint> single{pt(0.3, 0.3), pt(0.4, 0.4)};
        CHECK(same(knee_point(single), pt(0.3, 0.3)));

        const std::vector<ParetoPoint> degenerate{pt(0.2, 0.2), pt(0.2, 0.2)};
        CHECK_THROWS_AS((void)knee_point(degenerate), DegenerateFrontier);
        CHECK_THROWS_AS((void)knee_point(std::vector<ParetoPoint>{}), InputError);
    }

    TEST_CASE("knee point is a filtered member and scale invariant") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<ParetoPoint> pts;
            for (int i = 0; i < 3 + trial % 10; ++i) pts.push_back(pt(u(rng), u(rng)));
            const auto nd = pareto_filter(pts);
            if (nd.size() < 2) continue;
            const ParetoPoint k = knee_point(pts);
            CHECK(std::any_of(nd.begin(), nd.end(), [&](const ParetoPoint& p) { return same(p, k); }));

            const double sg = 0.1 + 10 * u(rng), og = u(rng), sf = 0.1 + 10 * u(rng), of = u(rng);
            std::vector<ParetoPoint> scaled(pts);
            for (auto& p : scaled) {
                p.gini = sg * p.gini + og;
                p.pof = sf * p.pof + of;
            }
            const ParetoPoint ks = knee_point(scaled);
            CHECK(ks.gini == doctest::Approx(sg * k.gini + og).epsilon(1e-12));
            CHECK(ks.pof == doctest::Approx(sf * k.pof + of).epsilon(1e-12));
        }
    }

    TEST_CASE("csv round trip") {
        std::vector<ParetoPoint> pts{pt(0.25, 0.5, 0.1), pt(0.0, 0.75, 0.0)};
        pts[0].family = Family::bounded_upper;
        pts[0].hc_kw = 123.456789;
        pts[1].family = Family::endpoint_egal;
        pts[1].status = SolveStatus::max_iter;
        ParetoPoint failed = pt(std::nan(""), std::nan(""), 0.5);
        failed.hc_kw = std::nan("");
        failed.status = SolveStatus::failed;
        pts.push_back(failed);

        const std::string csv = frontier_csv(pts);
        CHECK(csv.rfind("family,param,hc_kw,pof,gini,status\n", 0) == 0);
        CHECK(csv.find("bounded_upper,0.100000,123.456789,0.500000,0.250000,optimal") != std::string::npos);
        const auto back = parse_frontier_csv(csv);
        REQUIRE(back.size() == 3);
        CHECK(back[0].family == Family::bounded_upper);
        CHECK(back[0].hc_kw == doctest::Approx(123.456789));
        CHECK(back[1].status == SolveStatus::max_iter);
        CHECK(std::isnan(back[2].gini));
        CHECK(frontier_csv(back) == csv);
        CHECK_THROWS_AS((void)parse_frontier_csv("family,param\nx,1\n"), ParseError);
    }

    TEST_CASE("bargaining endpoints are recovered") {
        const auto f = per_unit(star3());
        const Frontier fr = sweep(f, Family::bargaining, 2);
        REQUIRE(fr.points.size() == 4);
        CHECK(std::is_sorted(fr.points.begin(), fr.points.end(),
                             [](const ParetoPoint& a, const ParetoPoint& b) { return a.gini < b.gini; }));
        for (const auto& p : fr.points) {
            CHECK(p.status == SolveStatus::optimal);
            if (p.family == Family::endpoint_uti) CHECK(p.pof == 0.0);
            if (p.family == Family::endpoint_egal) CHECK(p.gini == 0.0);
            if (p.family != Family::bargaining) continue;
            const double ref = p.param == 1.0 ? fr.uti_ref.hc_total : fr.egal_ref.hc_total;
            CHECK(std::fabs(p.hc_kw - ref) <= 0.005 * ref);
        }
    }

    TEST_CASE("bounded_lower at alpha 1 keeps every load at or above the egalitarian level") {
        const auto f = per_unit(star3());
        const Frontier fr = sweep(f, Family::bounded_lower, 2);
        const auto it = std::find_if(fr.points.begin(), fr.points.end(), [](const ParetoPoint& p) {
            return p.family == Family::bounded_lower && p.param == 1.0;
        });
        REQUIRE(it != fr.points.end());
        // beta stays 1 along this family, so the box is [P_egal, max P_uti] and need not collapse
        CHECK(it->hc_kw >= fr.egal_ref.hc_total * (1.0 - 1e-9));
        CHECK(it->pof >= -1e-6);

        const HCSolution collapsed = solve_policy(f, Bounded{1.0, 0.0});
        CHECK(gini(collapsed.allocation) == 0.0);
        CHECK(collapsed.hc_total == doctest::Approx(fr.egal_ref.hc_total).epsilon(1e-12));
    }

    TEST_CASE("bargaining pof does not increase with k") {
        SolverOptions opts;
        const auto f = per_unit(linear3());
        const Frontier fr = sweep(f, Family::bargaining, 11, opts);
        std::map<double, double> by_k;
        for (const auto& p : fr.points)
            if (p.family == Family::bargaining) by_k[p.param] = p.pof;
        REQUIRE(by_k.size() == 11);
        double previous = std::numeric_limits<double>::infinity();
        for (const auto& [k, pof] : by_k) {
            CHECK(pof <= previous + 1e-4);
            previous = pof;
        }
    }

    TEST_CASE("thread count does not change the frontier") {
        const auto f = per_unit(linear3());
        const std::string one = frontier_csv(sweep(f, Family::bounded_upper, 5, {}, 1).points);
        const std::string three = frontier_csv(sweep(f, Family::bounded_upper, 5, {}, 3).points);
        CHECK(one == three);
        CHECK_THROWS_AS((void)sweep(f, Family::bargaining, 1), InputError);
        CHECK_THROWS_AS((void)sweep(f, Family::endpoint_uti, 3), InputError);
    }
}
