#pragma once

// Price of Fairness and the Gini coefficient of a DG allocation.

#include <cstddef>
#include <span>
#include <string>

namespace fairhc {

/// (hc_uti - hc_fair) / hc_uti, not clamped: a fair HC above the reference
/// gives a negative value and a logged warning.
/// Throws ZeroUtilitarianHC when hc_uti <= 0, InputError when hc_fair < 0.
[[nodiscard]] double price_of_fairness(double hc_uti, double hc_fair);

struct GiniResult {
    double value = 0.0;
    bool all_zero = false;  // mean is zero; value reported as 0
};

/// Sum of |p_i - p_j| over ordered pairs, divided by 2 * mean * n^2.
/// Throws InputError for an empty or negative allocation.
[[nodiscard]] GiniResult gini_checked(std::span<const double> allocation);
[[nodiscard]] double gini(std::span<const double> allocation);

struct KpiReport {
    double pof = 0.0;
    double gini = 0.0;
    double hc_uti_ref = 0.0;  // kW
    double hc_fair = 0.0;     // kW
    std::size_t n = 0;
    double mean_allocation = 0.0;  // kW
    bool negative_pof = false;
    bool all_zero = false;
};

[[nodiscard]] KpiReport kpi_report(double hc_uti_ref, std::span<const double> allocation_kw);

[[nodiscard]] std::string kpi_to_json(const KpiReport& report);
[[nodiscard]] std::string kpi_csv_header();
/// hc_kw,pof,gini at six decimals.
[[nodiscard]] std::string kpi_csv_row(const KpiReport& report);

}  // namespace fairhc
