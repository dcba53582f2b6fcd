#include "mmff/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmff/csv.hpp"
#include "mmff/error.hpp"

namespace mmff {

MetricsReport compute_metrics(std::span<const double> labels, std::span<const double> predictions) {
    if (labels.size() != predictions.size()) {
        throw DimensionError("compute_metrics: " + std::to_string(labels.size()) + " labels vs " +
                             std::to_string(predictions.size()) + " predictions");
    }
    if (labels.empty()) {
        throw DataError("compute_metrics: no samples");
    }
    const double n = static_cast<double>(labels.size());
    double mu_y = 0.0;
    double mu_p = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        mu_y += labels[i];
        mu_p += predictions[i];
    }
    mu_y /= n;
    mu_p /= n;

    double var_y = 0.0;
    double var_p = 0.0;
    double cov = 0.0;
    double sq = 0.0;
    double abs_err = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double dy = labels[i] - mu_y;
        const double dp = predictions[i] - mu_p;
        var_y += dy * dy;
        var_p += dp * dp;
        cov += dy * dp;
        const double e = predictions[i] - labels[i];
        sq += e * e;
        abs_err += std::abs(e);
    }
    var_y /= n;
    var_p /= n;
    cov /= n;

    MetricsReport report;
    report.samples = labels.size();
    report.rmse = std::sqrt(sq / n);
    report.mae = abs_err / n;
    const double mean_gap = mu_p - mu_y;
    const double ccc_denominator = var_p + var_y + mean_gap * mean_gap;
    if (ccc_denominator > 0.0) {
        report.ccc = 2.0 * cov / ccc_denominator;
    }
    if (var_y > 0.0 && var_p > 0.0) {
        report.pearson = cov / std::sqrt(var_y * var_p);
    }
    return report;
}

std::string metrics_csv_row(const MetricsReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : "nan"; };
    std::ostringstream os;
    os << report.samples << ',' << opt(report.ccc) << ',' << format_number(report.rmse) << ','
       << format_number(report.mae) << ',' << opt(report.pearson);
    return os.str();
}

void write_metrics_csv(const std::filesystem::path& path, const MetricsReport& report) {
    write_text_file(path, std::string(kMetricsCsvHeader) + "\n" + metrics_csv_row(report) + "\n");
}

AblationSpec ablate_orders(std::span<const double> gamma, std::span<const std::size_t> orders) {
    if (gamma.size() != kOrderCount) {
        throw DimensionError("ablate_orders: gamma must have 3 entries");
    }
    if (orders.empty()) {
        throw UsageError("ablate_orders: at least one order must be retained");
    }
    AblationSpec spec;
    spec.orders.assign(orders.begin(), orders.end());
    std::sort(spec.orders.begin(), spec.orders.end());
    if (std::adjacent_find(spec.orders.begin(), spec.orders.end()) != spec.orders.end() ||
        spec.orders.front() < 1 || spec.orders.back() > kOrderCount) {
        throw UsageError("ablate_orders: orders must be distinct values in 1..3");
    }
    double total = 0.0;
    for (std::size_t k : spec.orders) {
        total += gamma[k - 1];
    }
    if (!(total > 0.0)) {
        throw NumericError("ablate_orders: retained order weights sum to zero");
    }
    for (std::size_t k : spec.orders) {
        spec.weights.push_back(gamma[k - 1] / total);
    }
    return spec;
}

std::vector<double> ablated_fuse(const std::array<std::vector<double>, kOrderCount>& integrated,
                                 const AblationSpec& spec) {
    if (spec.orders.size() != spec.weights.size() || spec.orders.empty()) {
        throw UsageError("ablated_fuse: malformed ablation spec");
    }
    const std::size_t dim = integrated[spec.orders.front() - 1].size();
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < spec.orders.size(); ++i) {
        const auto& v = integrated[spec.orders[i] - 1];
        if (v.size() != dim) {
            throw DimensionError("ablated_fuse: integrated factors differ in dimension");
        }
        for (std::size_t j = 0; j < dim; ++j) {
            out[j] += spec.weights[i] * v[j];
        }
    }
    return out;
}

std::vector<std::size_t> parse_order_subset(std::string_view text) {
    std::vector<std::size_t> orders;
    for (const std::string& field : split_csv_line(text)) {
        if (field == "1" || field == "2" || field == "3") {
            orders.push_back(static_cast<std::size_t>(field[0] - '0'));
        } else {
            throw UsageError("invalid order subset '" + std::string(text) +
                             "' (expected e.g. 1,3)");
        }
    }
    std::sort(orders.begin(), orders.end());
    if (std::adjacent_find(orders.begin(), orders.end()) != orders.end()) {
        throw UsageError("order subset '" + std::string(text) + "' repeats an order");
    }
    return orders;
}

std::string format_order_subset(std::span<const std::size_t> orders) {
    std::string out;
    for (std::size_t i = 0; i < orders.size(); ++i) {
        if (i > 0) {
            out += '+';
        }
        out += std::to_string(orders[i]);
    }
    return out;
}

ContributionReport aggregate_contributions(
    const std::array<std::array<double, kModalityCount>, kOrderCount>& per_order,
    const std::array<double, kOrderCount>& order) {
    ContributionReport report;
    report.per_order = per_order;
    report.order = order;
    for (std::size_t m = 0; m < kModalityCount; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kOrderCount; ++k) {
            acc += order[k] * per_order[k][m];
        }
        report.aggregate[m] = acc;
    }
    return report;
}

ContributionReport mean_contributions(std::span<const OrderWeightValues> weights) {
    if (weights.empty()) {
        throw DataError("mean_contributions: no samples");
    }
    std::array<std::array<double, kModalityCount>, kOrderCount> per_order{};
    std::array<double, kOrderCount> order{};
    for (const auto& w : weights) {
        for (std::size_t k = 0; k < kOrderCount; ++k) {
            for (std::size_t m = 0; m < kModalityCount; ++m) {
                per_order[k][m] += w.modality[k][m];
            }
            order[k] += w.order[k];
        }
    }
    const double n = static_cast<double>(weights.size());
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        for (std::size_t m = 0; m < kModalityCount; ++m) {
            per_order[k][m] /= n;
        }
        order[k] /= n;
    }
    return aggregate_contributions(per_order, order);
}

void write_contributions_csv(const std::filesystem::path& path, const ContributionReport& report) {
    std::ostringstream os;
    os << "factor,text,audio,video\n";
    for (std::size_t k = 0; k < kOrderCount; ++k) {
        os << "order" << (k + 1);
        for (double v : report.per_order[k]) {
            os << ',' << format_number(v);
        }
        os << '\n';
    }
    os << "fusion";
    for (double v : report.aggregate) {
        os << ',' << format_number(v);
    }
    os << "\n\norder,g1,g2,g3\nweight";
    for (double v : report.order) {
        os << ',' << format_number(v);
    }
    os << '\n';
    write_text_file(path, os.str());
}

std::string trace_contributions(std::span<const WeightTraceRow> rows) {
    std::ostringstream os;
    os << kTraceCsvHeader << '\n';
    for (const auto& row : rows) {
        const auto report = aggregate_contributions(row.weights.modality, row.weights.order);
        os << row.iteration;
        for (double g : row.weights.order) {
            os << ',' << format_number(g);
        }
        for (const auto& per_mod : row.weights.modality) {
            for (double g : per_mod) {
                os << ',' << format_number(g);
            }
        }
        for (double g : report.aggregate) {
            os << ',' << format_number(g);
        }
        os << '\n';
    }
    return os.str();
}

void write_trace_csv(const std::filesystem::path& path, std::span<const WeightTraceRow> rows) {
    write_text_file(path, trace_contributions(rows));
}

} // namespace mmff
