#include "fairhc/pareto.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fairhc/errors.hpp"
#include "fairhc/kpi.hpp"

namespace fairhc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kChordTol = 1e-12;

FairnessPolicy policy_for(Family family, double param) {
    switch (family) {
        case Family::bounded_lower: return Bounded{param, 1.0};
        case Family::bounded_upper: return Bounded{0.0, param};
        case Family::bargaining: return Bargaining{param};
        case Family::endpoint_uti: return Utilitarian{};
        case Family::endpoint_egal: return Egalitarian{};
    }
    return Utilitarian{};
}

ParetoPoint point_from(Family family, double param, const HCSolution& sol, double hc_uti) {
    ParetoPoint pt;
    pt.family = family;
    pt.param = param;
    pt.status = sol.status;
    pt.hc_kw = sol.hc_total;
    pt.pof = price_of_fairness(hc_uti, sol.hc_total);
    pt.gini = gini(sol.allocation);
    return pt;
}

bool usable(const ParetoPoint& p) {
    return (p.status == SolveStatus::optimal || p.status == SolveStatus::max_iter) && std::isfinite(p.gini) &&
           std::isfinite(p.pof);
}

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
    return a.gini <= b.gini && a.pof <= b.pof && (a.gini < b.gini || a.pof < b.pof);
}

std::string_view status_name(SolveStatus s) { return to_string(s); }

SolveStatus parse_status(std::string_view s) {
    for (SolveStatus v : {SolveStatus::optimal, SolveStatus::infeasible, SolveStatus::max_iter, SolveStatus::failed})
        if (to_string(v) == s) return v;
    throw ParseError(fmt::format("unknown solver status '{}'", s));
}

double parse_double(std::string_view s) {
    if (s == "nan" || s == "-nan") return kNaN;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(fmt::format("invalid number '{}'", s));
    return v;
}

}  // namespace

std::string_view to_string(Family family) {
    switch (family) {
        case Family::bounded_lower: return "bounded_lower";
        case Family::bounded_upper: return "bounded_upper";
        case Family::bargaining: return "bargaining";
        case Family::endpoint_uti: return "endpoint_uti";
        case Family::endpoint_egal: return "endpoint_egal";
    }
    return "bargaining";
}

Family parse_family(std::string_view text) {
    for (Family f : {Family::bounded_lower, Family::bounded_upper, Family::bargaining, Family::endpoint_uti,
                     Family::endpoint_egal})
        if (to_string(f) == text) return f;
    throw InputError(fmt::format("unknown frontier family '{}'", text));
}

Frontier sweep(const std::shared_ptr<const NormalizedFeeder>& feeder, Family family, int steps,
               const SolverOptions& options, int jobs, std::string feeder_id) {
    if (steps < 2) throw InputError("a sweep needs at least 2 steps");
    if (family == Family::endpoint_uti || family == Family::endpoint_egal)
        throw InputError("endpoints are not a sweepable family");

    Frontier fr;
    fr.feeder_id = std::move(feeder_id);
    const ReferenceSolutions refs = solve_references(feeder, options);
    fr.uti_ref = refs.utilitarian;
    fr.egal_ref = refs.egalitarian;
    const double hc_uti = fr.uti_ref.hc_total;

    std::vector<ParetoPoint> swept(static_cast<std::size_t>(steps));
    std::atomic<int> next{0};
    const auto worker = [&] {
        for (int i = next++; i < steps; i = next++) {
            const double param = static_cast<double>(i) / static_cast<double>(steps - 1);
            ParetoPoint& pt = swept[static_cast<std::size_t>(i)];
            try {
                const HCSolution sol = solve_hc(build_problem(feeder, policy_for(family, param), refs.refs), options);
                pt = point_from(family, param, sol, hc_uti);
            } catch (const Error& e) {
                spdlog::warn("{} = {:.4f}: {}", to_string(family), param, e.what());
                pt = {family, param, kNaN, kNaN, kNaN,
                      dynamic_cast<const Infeasible*>(&e) ? SolveStatus::infeasible : SolveStatus::failed};
            }
        }
    };
    const int threads = std::clamp(jobs, 1, steps);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    fr.points = std::move(swept);
    fr.points.push_back(point_from(Family::endpoint_egal, 0.0, fr.egal_ref, hc_uti));
    fr.points.push_back(point_from(Family::endpoint_uti, 1.0, fr.uti_ref, hc_uti));
    std::stable_sort(fr.points.begin(), fr.points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
        const bool fa = std::isfinite(a.gini);
        const bool fb = std::isfinite(b.gini);
        if (fa != fb) return fa;
        return fa && a.gini < b.gini;
    });
    return fr;
}

std::vector<ParetoPoint> pareto_filter(std::span<const ParetoPoint> points) {
    std::vector<ParetoPoint> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const ParetoPoint& p = points[i];
        if (!usable(p)) continue;
        bool keep = true;
        for (std::size_t j = 0; j < points.size() && keep; ++j) {
            if (j == i || !usable(points[j])) continue;
            if (dominates(points[j], p)) keep = false;
            if (j < i && points[j].gini == p.gini && points[j].pof == p.pof) keep = false;
        }
        if (keep) out.push_back(p);
    }
    return out;
}

ParetoPoint knee_point(std::span<const ParetoPoint> points) {
    const std::vector<ParetoPoint> nd = pareto_filter(points);
    if (nd.empty()) throw InputError("frontier has no usable points");
    if (nd.size() == 1) {
        const bool identical = std::all_of(points.begin(), points.end(), [&](const ParetoPoint& p) {
            return !usable(p) || (p.gini == nd[0].gini && p.pof == nd[0].pof);
        });
        if (identical) throw DegenerateFrontier("all frontier points coincide");
        return nd[0];
    }

    double g_min = nd[0].gini, g_max = nd[0].gini, f_min = nd[0].pof, f_max = nd[0].pof;
    for (const auto& p : nd) {
        g_min = std::min(g_min, p.gini);
        g_max = std::max(g_max, p.gini);
        f_min = std::min(f_min, p.pof);
        f_max = std::max(f_max, p.pof);
    }
    const auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };
    std::vector<std::pair<double, double>> z;
    for (const auto& p : nd) z.emplace_back(norm(p.gini, g_min, g_max), norm(p.pof, f_min, f_max));

    // extremes of a nondominated set: least unequal and least costly
    std::size_t a = 0, b = 0;
    for (std::size_t i = 1; i < nd.size(); ++i) {
        if (z[i].first < z[a].first || (z[i].first == z[a].first && z[i].second < z[a].second)) a = i;
        if (z[i].second < z[b].second || (z[i].second == z[b].second && z[i].first < z[b].first)) b = i;
    }
    const double dx = z[b].first - z[a].first;
    const double dy = z[b].second - z[a].second;
    const double chord = std::hypot(dx, dy);

    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < nd.size(); ++i) {
        const double d =
            chord > 0.0 ? std::fabs(dx * (z[a].second - z[i].second) - dy * (z[a].first - z[i].first)) / chord : 0.0;
        if (d > best_d + kChordTol || (std::fabs(d - best_d) <= kChordTol && nd[i].pof < nd[best].pof)) {
            best = i;
            best_d = d;
        }
    }
    if (best_d > kChordTol) return nd[best];

    best = 0;
    double best_n = std::hypot(z[0].first, z[0].second);
    for (std::size_t i = 1; i < nd.size(); ++i) {
        const double n = std::hypot(z[i].first, z[i].second);
        if (n < best_n - kChordTol || (std::fabs(n - best_n) <= kChordTol && nd[i].pof < nd[best].pof)) {
            best = i;
            best_n = n;
        }
    }
    return nd[best];
}

std::string frontier_csv(std::span<const ParetoPoint> points) {
    std::string out = "family,param,hc_kw,pof,gini,status\n";
    for (const auto& p : points) {
        out += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", to_string(p.family), p.param, p.hc_kw, p.pof, p.gini,
                           status_name(p.status));
    }
    return out;
}

std::vector<ParetoPoint> parse_frontier_csv(std::string_view text) {
    std::vector<ParetoPoint> out;
    bool header = true;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (header) {
            if (line != "family,param,hc_kw,pof,gini,status")
                throw ParseError("frontier CSV must start with the header family,param,hc_kw,pof,gini,status");
            header = false;
            continue;
        }
        std::vector<std::string_view> f;
        while (true) {
            const auto c = line.find(',');
            f.push_back(line.substr(0, c));
            if (c == std::string_view::npos) break;
            line = line.substr(c + 1);
        }
        if (f.size() != 6) throw ParseError(fmt::format("frontier CSV line {}: expected 6 fields", line_no));
        ParetoPoint p;
        try {
            p.family = parse_family(f[0]);
        } catch (const InputError& e) {
            throw ParseError(fmt::format("frontier CSV line {}: {}", line_no, e.what()));
        }
        p.param = parse_double(f[1]);
        p.hc_kw = parse_double(f[2]);
        p.pof = parse_double(f[3]);
        p.gini = parse_double(f[4]);
        p.status = parse_status(f[5]);
        out.push_back(p);
    }
    if (header) throw ParseError("frontier CSV is empty");
    return out;
}

}  // namespace fairhc
