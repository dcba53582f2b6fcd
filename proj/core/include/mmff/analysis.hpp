#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmff/fusion.hpp"

namespace mmff {

struct MetricsReport {
    std::size_t samples = 0;
    std::optional<double> ccc;      // empty when undefined (zero denominator)
    double rmse = 0.0;
    double mae = 0.0;
    std::optional<double> pearson;  // empty when either series is constant
};

// Lin's concordance correlation, RMSE, MAE and Pearson correlation, all
// with population (1/N) moments.
MetricsReport compute_metrics(std::span<const double> labels, std::span<const double> predictions);

inline constexpr std::string_view kMetricsCsvHeader = "samples,ccc,rmse,mae,pearson";
std::string metrics_csv_row(const MetricsReport& report);
void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report);

struct AblationSpec {
    std::vector<std::size_t> orders;  // retained orders, 1-based, ascending
    std::vector<double> weights;      // renormalized gamma over `orders`
};

// gamma_bar_k = gamma_k / sum_{j in S} gamma_j. Throws NumericError when the
// retained weights sum to zero.
AblationSpec ablate_orders(std::span<const double> gamma, std::span<const std::size_t> orders);

// v_bar = sum_{k in S} gamma_bar_k v^k.
std::vector<double> ablated_fuse(const std::array<std::vector<double>, kOrderCount>& integrated,
                                 const AblationSpec& spec);

// "1,3" -> {1, 3}. Throws UsageError on anything outside 1..3 or empty.
std::vector<std::size_t> parse_order_subset(std::string_view text);
std::string format_order_subset(std::span<const std::size_t> orders);

struct ContributionReport {
    std::array<std::array<double, kModalityCount>, kOrderCount> per_order{};
    std::array<double, kOrderCount> order{};
    std::array<double, kModalityCount> aggregate{};
};

// gamma_mod = sum_k gamma_k * gamma^k_mod.
ContributionReport aggregate_contributions(
    const std::array<std::array<double, kModalityCount>, kOrderCount>& per_order,
    const std::array<double, kOrderCount>& order);

// Dataset-mean weights, then aggregation.
ContributionReport mean_contributions(std::span<const OrderWeightValues> weights);

void write_contributions_csv(const std::filesystem::path& path, const ContributionReport& report);

inline constexpr std::string_view kTraceCsvHeader =
    "iter,g1,g2,g3,g1_t,g1_a,g1_v,g2_t,g2_a,g2_v,g3_t,g3_a,g3_v,gm_t,gm_a,gm_v";

// One CSV row per logged epoch, aggregates appended.
std::string trace_contributions(std::span<const WeightTraceRow> rows);
void write_trace_csv(const std::filesystem::path& path, std::span<const WeightTraceRow> rows);

} // namespace mmff
