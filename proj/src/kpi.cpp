#include "fairhc/kpi.hpp"

#include <numeric>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "fairhc/errors.hpp"
#include "fairhc/kernels.hpp"

namespace fairhc {

double price_of_fairness(double hc_uti, double hc_fair) {
    if (!(hc_uti > 0.0)) throw ZeroUtilitarianHC(fmt::format("utilitarian HC must be positive, got {}", hc_uti));
    if (!(hc_fair >= 0.0)) throw InputError(fmt::format("fair HC must be non-negative, got {}", hc_fair));
    const double pof = (hc_uti - hc_fair) / hc_uti;
    if (pof < 0.0) spdlog::warn("negative price of fairness {:.3e}: fair HC exceeds the utilitarian reference", pof);
    return pof;
}

GiniResult gini_checked(std::span<const double> allocation) {
    if (allocation.empty()) throw InputError("Gini of an empty allocation");
    for (double p : allocation) {
        if (!(p >= 0.0)) throw InputError(fmt::format("allocation entry {} is negative or not finite", p));
    }
    const auto n = static_cast<double>(allocation.size());
    const double mean = std::accumulate(allocation.begin(), allocation.end(), 0.0) / n;
    if (mean == 0.0) {
        spdlog::warn("Gini of an all-zero allocation is reported as 0");
        return {0.0, true};
    }
    const double diff = kernels::active().pairwise_abs_diff_sum(allocation);
    return {diff / (2.0 * mean * n * n), false};
}

double gini(std::span<const double> allocation) { return gini_checked(allocation).value; }

KpiReport kpi_report(double hc_uti_ref, std::span<const double> allocation_kw) {
    KpiReport r;
    r.hc_uti_ref = hc_uti_ref;
    r.hc_fair = std::accumulate(allocation_kw.begin(), allocation_kw.end(), 0.0);
    r.n = allocation_kw.size();
    const GiniResult g = gini_checked(allocation_kw);
    r.gini = g.value;
    r.all_zero = g.all_zero;
    r.mean_allocation = r.hc_fair / static_cast<double>(r.n);
    r.pof = price_of_fairness(hc_uti_ref, r.hc_fair);
    r.negative_pof = r.pof < 0.0;
    return r;
}

std::string kpi_to_json(const KpiReport& r) {
    const nlohmann::json doc{{"pof", r.pof},
                             {"gini", r.gini},
                             {"hc_uti_ref_kw", r.hc_uti_ref},
                             {"hc_fair_kw", r.hc_fair},
                             {"n", r.n},
                             {"mean_allocation_kw", r.mean_allocation},
                             {"negative_pof", r.negative_pof},
                             {"all_zero", r.all_zero}};
    return doc.dump(2);
}

std::string kpi_csv_header() { return "hc_kw,pof,gini"; }

std::string kpi_csv_row(const KpiReport& r) { return fmt::format("{:.6f},{:.6f},{:.6f}", r.hc_fair, r.pof, r.gini); }

}  // namespace fairhc
