#include "fairhc/formulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "fairhc/errors.hpp"

namespace fairhc {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ParameterOutOfRange(fmt::format("{} = {} is outside [0, 1]", name, v));
}

double parse_number(std::string_view s, std::string_view key) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InputError(fmt::format("policy parameter '{}' has invalid value '{}'", key, s));
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

}  // namespace

FairnessPolicy parse_policy(std::string_view text) {
    text = trim(text);
    const auto colon = text.find(':');
    const std::string_view name = trim(text.substr(0, colon));
    std::optional<double> alpha, beta, k;
    if (colon != std::string_view::npos) {
        std::string_view rest = text.substr(colon + 1);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const std::string_view item = trim(rest.substr(0, comma));
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            const auto eq = item.find('=');
            if (eq == std::string_view::npos) throw InputError(fmt::format("malformed policy parameter '{}'", item));
            const std::string_view key = trim(item.substr(0, eq));
            const double value = parse_number(trim(item.substr(eq + 1)), key);
            if (key == "alpha") alpha = value;
            else if (key == "beta") beta = value;
            else if (key == "k" || key == "K") k = value;
            else throw InputError(fmt::format("unknown policy parameter '{}'", key));
        }
    }

    const auto no_params = [&] {
        if (alpha || beta || k) throw InputError(fmt::format("policy '{}' takes no parameters", name));
    };
    FairnessPolicy policy;
    if (name == "utilitarian") {
        no_params();
        policy = Utilitarian{};
    } else if (name == "egalitarian") {
        no_params();
        policy = Egalitarian{};
    } else if (name == "bounded") {
        if (!alpha || !beta || k) throw InputError("bounded policy requires exactly alpha and beta");
        policy = Bounded{*alpha, *beta};
    } else if (name == "bargaining") {
        if (!k || alpha || beta) throw InputError("bargaining policy requires exactly k");
        policy = Bargaining{*k};
    } else {
        throw InputError(fmt::format("unknown policy '{}'", name));
    }
    validate(policy);
    return policy;
}

std::string to_string(const FairnessPolicy& policy) {
    return std::visit(overloaded{[](const Utilitarian&) { return std::string("utilitarian"); },
                                 [](const Egalitarian&) { return std::string("egalitarian"); },
                                 [](const Bounded& b) { return fmt::format("bounded:alpha={},beta={}", b.alpha, b.beta); },
                                 [](const Bargaining& b) { return fmt::format("bargaining:k={}", b.k); }},
                      policy);
}

std::string_view policy_name(const FairnessPolicy& policy) {
    static constexpr std::string_view names[] = {"utilitarian", "egalitarian", "bounded", "bargaining"};
    return names[policy.index()];
}

void validate(const FairnessPolicy& policy) {
    if (const auto* b = std::get_if<Bounded>(&policy)) {
        check_unit(b->alpha, "alpha");
        check_unit(b->beta, "beta");
    } else if (const auto* g = std::get_if<Bargaining>(&policy)) {
        check_unit(g->k, "k");
    }
}

HCProblem build_problem(std::shared_ptr<const NormalizedFeeder> feeder, const FairnessPolicy& policy,
                        const std::optional<References>& refs) {
    validate(policy);
    const std::size_t n = feeder->n_loads();
    if (n == 0) throw InputError("feeder has no loads to host DG");

    HCProblem problem;
    problem.policy = policy;
    problem.lower.assign(n, 0.0);
    problem.upper.assign(n, feeder->dg_cap);

    if (std::holds_alternative<Egalitarian>(policy)) {
        problem.tie = true;
    } else if (const auto* b = std::get_if<Bounded>(&policy)) {
        if (!refs || refs->uti_allocation.size() != n)
            throw MissingReference("bounded policy needs the egalitarian level and a utilitarian allocation");
        const double p_egal = refs->p_egal;
        // A utilitarian optimum never has a largest allocation below the egalitarian
        // level; guard against solver noise so that lower <= upper always holds.
        const double p_max_uti =
            std::max(p_egal, *std::max_element(refs->uti_allocation.begin(), refs->uti_allocation.end()));
        const double lo = b->alpha * p_egal;
        const double hi = p_egal + b->beta * (p_max_uti - p_egal);
        problem.lower.assign(n, lo);
        problem.upper.assign(n, hi);
    } else if (const auto* g = std::get_if<Bargaining>(&policy)) {
        problem.objective = ObjectiveKind::bargaining;
        problem.k = g->k;
    }
    if (refs) {
        problem.reference_egal = refs->p_egal;
        problem.reference_uti = refs->uti_allocation;
    }
    problem.feeder = std::move(feeder);
    return problem;
}

double disparity(std::span<const double> p) {
    if (p.empty()) return 0.0;
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    double worst = 0.0;
    for (double x : p) worst = std::max(worst, std::fabs(x - mean));
    return worst;
}

double objective_value(const HCProblem& problem, std::span<const double> p) {
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (problem.objective == ObjectiveKind::sum) return total;
    return problem.k * total - (1.0 - problem.k) * disparity(p);
}

bool within_bounds(const HCProblem& problem, std::span<const double> p, double tol) {
    if (p.size() != problem.n_loads()) return false;
    for (std::size_t d = 0; d < p.size(); ++d) {
        if (p[d] < problem.lower[d] - tol || p[d] > problem.upper[d] + tol) return false;
        if (problem.tie && std::fabs(p[d] - p[0]) > tol) return false;
    }
    return true;
}

}  // namespace fairhc
