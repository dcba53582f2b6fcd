// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "mmff/analysis.hpp"
#include "mmff/checkpoint.hpp"
#include "mmff/csv.hpp"
#include "mmff/error.hpp"
#include "mmff/fusion.hpp"
#include "mmff/model.hpp"
#include "mmff/preprocess.hpp"
#include "mmff/proxy.hpp"
#include "mmff/seq_encoder.hpp"
#include "oracles.hpp"

#ifndef MMFF_ACCEPTANCE_CONFIG
#error "MMFF_ACCEPTANCE_CONFIG must name the end-to-end config file"
#endif

using namespace mmff;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1

struct GradSummary {
    double worst = 0.0;
    std::string where;
    std::size_t coords = 0;

    void add(const std::string& label, const oracle::GradCheckResult& r) {
        coords += r.checked;
        if (r.max_rel_error >= worst) {
            worst = r.max_rel_error;
            where = label + " " + r.worst;
        }
    }
};

void primitive_gradients(GradSummary& s) {
    RngStream rng(101);
    const Var a = oracle::random_param(rng, {3, 4});
    const Var b = oracle::random_param(rng, {4, 2});
    const Var u = oracle::random_param(rng, {4});
    const Var w = oracle::random_param(rng, {4});
    const Var bias = oracle::random_param(rng, {3});
    const Var k = oracle::random_param(rng, {1});
    const Var mask = Var::constant({3, 2}, oracle::normals(rng, 6));
    const std::vector<double> t4 = oracle::normals(rng, 4);
    const std::vector<double> t3 = oracle::normals(rng, 3);

    s.add("matmul", oracle::gradcheck([&] { return sum(hadamard(mask, matmul(a, b))); },
                                      {{"a", a}, {"b", b}}));
    s.add("matvec", oracle::gradcheck([&] { return mse_loss(matmul(a, u), t3); },
                                      {{"a", a}, {"u", u}}));
    s.add("add", oracle::gradcheck([&] { return mse_loss(add(u, w), t4); }, {{"u", u}, {"w", w}}));
    s.add("sub", oracle::gradcheck([&] { return mse_loss(sub(u, w), t4); }, {{"u", u}, {"w", w}}));
    s.add("scale", oracle::gradcheck([&] { return mse_loss(scale(k, u), t4); }, {{"k", k}, {"u", u}}));
    s.add("hadamard",
          oracle::gradcheck([&] { return mse_loss(hadamard(u, w), t4); }, {{"u", u}, {"w", w}}));
    s.add("concat", oracle::gradcheck(
                        [&] {
                            return mse_loss(concat({u, bias}), std::vector<double>(7, 0.3));
                        },
                        {{"u", u}, {"bias", bias}}));
    s.add("mean", oracle::gradcheck([&] { return mse_loss(mean(hadamard(u, w)), {{0.7}}); },
                                    {{"u", u}, {"w", w}}));
    s.add("affine", oracle::gradcheck([&] { return mse_loss(affine(a, u, bias), t3); },
                                      {{"a", a}, {"u", u}, {"bias", bias}}));
    s.add("softmax", oracle::gradcheck([&] { return mse_loss(softmax(u), t4); }, {{"u", u}}));
    s.add("softmax2d", oracle::gradcheck([&] { return sum(hadamard(mask, softmax(matmul(a, b)))); },
                                         {{"a", a}, {"b", b}}));
    for (Activation act : {Activation::identity, Activation::relu, Activation::elu, Activation::tanh,
                           Activation::hardtanh, Activation::sigmoid}) {
        s.add(std::string(to_string(act)),
              oracle::gradcheck([&] { return mse_loss(activate(u, act), t4); }, {{"u", u}}));
    }
    s.add("slice", oracle::gradcheck([&] { return mse_loss(slice(u, 1, 2), {{0.1, -0.2}}); },
                                     {{"u", u}}));
    s.add("element", oracle::gradcheck([&] { return mse_loss(element(u, 2), {{0.5}}); }, {{"u", u}}));
    s.add("dropout", oracle::gradcheck(
                         [&] {
                             RngStream local(9);
                             return mse_loss(dropout(u, 0.3, Mode::train, local), t4);
                         },
                         {{"u", u}}));
}

void bilstm_gradients(GradSummary& s) {
    RngStream rng(202);
    ParamStore store;
    const BiLstmParams params = make_bilstm(store, "bilstm", 3, 4, 2, rng);
    std::vector<Var> seq;
    std::vector<oracle::Leaf> leaves = oracle::leaves_of(store);
    for (std::size_t t = 0; t < 5; ++t) {
        seq.push_back(oracle::random_param(rng, {3}));
        leaves.push_back({"x" + std::to_string(t), seq.back()});
    }
    const std::vector<double> target = oracle::normals(rng, 8, 0.5);
    s.add("bilstm", oracle::gradcheck([&] { return mse_loss(bilstm_encode(seq, params), target); },
                                      leaves));
}

void latent_gradients(GradSummary& s) {
    RngStream rng(303);
    ProxyConfig cfg;
    cfg.feature_dim = 8;
    cfg.latent_dim = 4;
    cfg.hidden = 4;
    ProxyModel proxy(cfg, rng);
    ModalityVars x;
    std::vector<oracle::Leaf> leaves = oracle::leaves_of(proxy.params());
    for (Modality m : kModalities) {
        x[index_of(m)] = oracle::random_param(rng, {8});
        leaves.push_back({"x_" + std::string(short_name(m)), x[index_of(m)]});
    }
    s.add("latent_loss", oracle::gradcheck([&] { return latent_loss(x, proxy); }, leaves));
}

void end_to_end_gradients(GradSummary& s) {
    RunConfig cfg;
    cfg.seed = 404;
    cfg.feature_dim = 8;
    cfg.latent_dim = 4;
    cfg.lstm_hidden = 4;
    cfg.factor_hidden = 4;
    cfg.factor_dim = 4;
    cfg.proxy_hidden = 4;
    cfg.head_hidden = 4;
    const std::array<std::size_t, kModalityCount> dims{5, 4, 4};
    MmffModel model(cfg, dims);
    RngStream rng(405);
    std::array<FrameSequence, kModalityCount> seqs;
    for (Modality m : kModalities) {
        seqs[index_of(m)].modality = m;
        seqs[index_of(m)].frames = oracle::random_matrix(rng, 4, dims[index_of(m)]);
    }
    const double label = 0.7;
    auto loss = [&] {
        ModalityVars x;
        x[index_of(Modality::text)] =
            encode_text(model.encoder(Modality::text), seqs[index_of(Modality::text)]);
        for (Modality m : {Modality::audio, Modality::video}) {
            x[index_of(m)] = encode_av(model.encoder(m), seqs[index_of(m)]);
        }
        const LatentProxy z = proxy_encode(x, model.proxy());
        const FusionOutput out = fusion_forward(x, z.z, model.fusion());
        return mse_loss(out.prediction, std::vector<double>{label});
    };
    std::vector<oracle::Leaf> leaves = oracle::leaves_of(model.encoder_params());
    for (auto& l : oracle::leaves_of(model.proxy().params())) leaves.push_back(l);
    for (auto& l : oracle::leaves_of(model.fusion().params())) leaves.push_back(l);
    s.add("L_MSE", oracle::gradcheck(loss, leaves));
}

Outcome criterion_gradients() {
    const auto t0 = Clock::now();
    GradSummary s;
    primitive_gradients(s);
    bilstm_gradients(s);
    latent_gradients(s);
    end_to_end_gradients(s);
    const double elapsed = seconds_since(t0);
    return {s.worst < 1e-4 && elapsed < 60.0,
            "max rel err " + fmt(s.worst) + " at " + s.where + " over " + std::to_string(s.coords) +
                " coords in " + fmt(elapsed) + " s"};
}

// ---------------------------------------------------------------- 2

bool gathered_subsequence(const FrameSequence& seq, const FrameSequence& out) {
    std::size_t j = 0;
    for (std::size_t r = 0; r < out.length(); ++r) {
        bool found = false;
        for (; j < seq.length(); ++j) {
            const double n = oracle::norm(seq.frames.row(j));
            bool same = true;
            for (std::size_t c = 0; c < seq.dims() && same; ++c) {
                const double expected = n > 0.0 ? seq.frames(j, c) / n : 0.0;
                same = std::abs(out.frames(r, c) - expected) <= 1e-12;
            }
            if (same) {
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return true;
}

Outcome criterion_midimax() {
    RngStream rng(2);
    std::size_t mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(60);
        const std::size_t ratio = 1 + rng.below(12);
        std::vector<double> series(n);
        for (double& v : series) {
            // Coarse values force ties.
            v = trial % 2 == 0 ? rng.normal() : static_cast<double>(rng.below(4));
        }
        if (midimax_select(series, ratio).indices() != oracle::midimax_reference(series, ratio)) {
            ++mismatches;
        }
    }
    std::size_t bad_compress = 0;
    for (int trial = 0; trial < 200; ++trial) {
        FrameSequence seq;
        seq.frames = oracle::random_matrix(rng, 2 + rng.below(80), 2 + rng.below(5));
        const std::size_t target = 3 + rng.below(30);
        const PrincipalAxis axis = first_principal_component(seq.frames);
        const FrameSequence out = compress_sequence(seq, axis, target);
        if (out.length() > target || out.dims() != seq.dims() || !gathered_subsequence(seq, out)) {
            ++bad_compress;
        }
    }
    return {mismatches == 0 && bad_compress == 0,
            std::to_string(mismatches) + "/1000 midimax mismatches, " + std::to_string(bad_compress) +
                "/200 compress violations"};
}

// ---------------------------------------------------------------- 3

Outcome criterion_filter() {
    RngStream rng(3);
    std::size_t wrong = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + rng.below(8);
        std::vector<double> scales(k);
        for (double& s : scales) s = std::pow(10.0, rng.uniform(-2.5, 0.0));
        std::vector<FrameSequence> seqs(1 + rng.below(6));
        for (auto& s : seqs) {
            s.frames = Matrix(1 + rng.below(12), k);
            for (std::size_t j = 0; j < s.length(); ++j) {
                for (std::size_t c = 0; c < k; ++c) s.frames(j, c) = scales[c] * rng.normal();
            }
        }
        const double beta = std::pow(10.0, rng.uniform(-5.0, -1.0));
        std::vector<bool> expected(k);
        for (std::size_t c = 0; c < k; ++c) {
            expected[c] = oracle::pooled_variance(seqs, c) > beta;
        }
        const bool none = std::none_of(expected.begin(), expected.end(), [](bool b) { return b; });
        try {
            const FilterMask mask = fit_low_variance_filter(seqs, beta);
            if (none || mask.keep != expected) ++wrong;
        } catch (const ConfigError&) {
            if (!none) ++wrong;
        }
    }
    return {wrong == 0, std::to_string(wrong) + "/100 datasets disagree with the oracle"};
}

// ---------------------------------------------------------------- 4

Outcome criterion_pca() {
    RngStream rng(4);
    double worst_residual = 0.0;
    std::size_t beaten = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t dims = 5 + rng.below(6);
        const std::size_t n = 20 + rng.below(60);
        const Matrix mix = oracle::random_matrix(rng, dims, dims);
        Matrix pooled(n, dims);
        for (std::size_t r = 0; r < n; ++r) {
            const std::vector<double> g = oracle::normals(rng, dims);
            const std::vector<double> row = oracle::matvec(mix, g);
            for (std::size_t c = 0; c < dims; ++c) pooled(r, c) = row[c] + 3.0;
        }
        // Covariance computed independently.
        std::vector<double> mu(dims, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < dims; ++c) mu[c] += pooled(r, c) / static_cast<double>(n);
        }
        Matrix cov(dims, dims);
        for (std::size_t i = 0; i < dims; ++i) {
            for (std::size_t j = 0; j < dims; ++j) {
                double acc = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    acc += (pooled(r, i) - mu[i]) * (pooled(r, j) - mu[j]);
                }
                cov(i, j) = acc / static_cast<double>(n - 1);
            }
        }
        const PrincipalAxis axis = first_principal_component(pooled);
        const double lambda = oracle::rayleigh(cov, axis.direction);
        std::vector<double> resid = oracle::matvec(cov, axis.direction);
        for (std::size_t c = 0; c < dims; ++c) resid[c] -= lambda * axis.direction[c];
        worst_residual = std::max(worst_residual, oracle::norm(resid) / lambda);
        for (int d = 0; d < 100; ++d) {
            if (oracle::rayleigh(cov, oracle::normals(rng, dims)) > lambda * (1.0 + 1e-12)) {
                ++beaten;
            }
        }
    }
    return {worst_residual < 1e-6 && beaten == 0,
            "max ||Cw - lw||/l " + fmt(worst_residual) + ", " + std::to_string(beaten) +
                " random directions beat the axis over 100 covariances"};
}

// ---------------------------------------------------------------- 5, 7

FusionModel random_fusion(RngStream& rng) {
    FusionConfig cfg;
    cfg.feature_dim = 8;
    cfg.latent_dim = 4;
    cfg.factor_hidden = 4;
    cfg.factor_dim = 4;
    cfg.head_hidden = 4;
    cfg.predictor_hidden = 4;
    FusionModel model(cfg, rng);
    // Spread the heads so the weights move well away from uniform.
    for (auto& e : model.params().entries()) {
        for (double& v : e.var.mutable_value()) v *= 3.0;
    }
    return model;
}

ModalityVars random_inputs(RngStream& rng) {
    ModalityVars x;
    for (auto& v : x) v = Var::constant(oracle::normals(rng, 8));
    return x;
}

bool all_zero(const Var& v) {
    return std::all_of(v.value().begin(), v.value().end(), [](double x) { return x == 0.0; });
}

bool same_bits(const Var& a, const Var& b) {
    return a.size() == b.size() && std::equal(a.value().begin(), a.value().end(), b.value().begin());
}

Outcome criterion_simplex() {
    RngStream rng(5);
    const FusionModel model = random_fusion(rng);
    double worst_sum = 0.0;
    std::size_t negative = 0;
    std::size_t identity_failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Var z = Var::constant(oracle::normals(rng, 4, 2.0));
        const OrderWeights w = order_weights(z, model);
        for (const Var* g : {&w.modality[0], &w.modality[1], &w.modality[2], &w.order}) {
            double total = 0.0;
            for (double v : g->value()) {
                if (v < 0.0) ++negative;
                total += v;
            }
            worst_sum = std::max(worst_sum, std::abs(total - 1.0));
        }
        if (trial % 10 != 0) continue;

        const ModalityVars x = random_inputs(rng);
        const FusionOutput out = fusion_forward(x, z, model);
        const auto& v = out.factors.integrated;
        for (std::size_t k = 0; k < kOrderCount; ++k) {
            std::vector<double> vertex(kOrderCount, 0.0);
            vertex[k] = 1.0;
            if (!same_bits(fuse(v, Var::constant(vertex)), v[k])) ++identity_failures;
        }
        for (std::size_t m = 0; m < kModalityCount; ++m) {
            std::vector<double> g(kModalityCount, 0.5);
            g[m] = 0.0;
            const Var gamma = Var::constant(g);
            const auto first = first_order_factors(x, gamma, model);
            if (!all_zero(first[m])) ++identity_failures;
            const auto second = second_order_factors(x, gamma, model);
            for (std::size_t p = 0; p < kPairs.size(); ++p) {
                const bool touches = index_of(kPairs[p].first) == m || index_of(kPairs[p].second) == m;
                if (touches && !all_zero(second[p])) ++identity_failures;
                if (!touches && all_zero(second[p])) ++identity_failures;
            }
            if (!all_zero(third_order_factor(x, gamma, model))) ++identity_failures;
        }
    }
    return {worst_sum <= 1e-6 && negative == 0 && identity_failures == 0,
            "max |sum - 1| " + fmt(worst_sum) + ", " + std::to_string(negative) +
                " negative weights, " + std::to_string(identity_failures) + " identity failures"};
}

Outcome criterion_ablation() {
    RngStream rng(7);
    const FusionModel model = random_fusion(rng);
    double worst = 0.0;
    for (int trial = 0; trial < 300; ++trial) {
        const ModalityVars x = random_inputs(rng);
        const Var z = Var::constant(oracle::normals(rng, 4));
        const FusionOutput out = fusion_forward(x, z, model);
        const std::size_t dropped = rng.below(kOrderCount);
        std::vector<double> gamma(out.weights.order.value().begin(), out.weights.order.value().end());
        gamma[dropped] = 0.0;
        double total = 0.0;
        for (double g : gamma) total += g;
        for (double& g : gamma) g /= total;
        std::vector<std::size_t> kept;
        for (std::size_t k = 1; k <= kOrderCount; ++k) {
            if (k - 1 != dropped) kept.push_back(k);
        }
        std::array<std::vector<double>, kOrderCount> integrated;
        for (std::size_t k = 0; k < kOrderCount; ++k) {
            const auto& v = out.factors.integrated[k];
            integrated[k].assign(v.value().begin(), v.value().end());
        }
        const Var full = fuse(out.factors.integrated, Var::constant(gamma));
        const std::vector<double> ablated = ablated_fuse(integrated, ablate_orders(gamma, kept));
        for (std::size_t i = 0; i < ablated.size(); ++i) {
            worst = std::max(worst, std::abs(ablated[i] - full[i]));
        }
    }
    const AblationSpec hand = ablate_orders(std::vector<double>{0.4, 0.35, 0.25},
                                            std::vector<std::size_t>{1, 2});
    const bool arithmetic = hand.weights.size() == 2 &&
                            std::abs(hand.weights[0] - 8.0 / 15.0) < 1e-15 &&
                            std::abs(hand.weights[1] - 7.0 / 15.0) < 1e-15;
    return {worst < 1e-12 && arithmetic,
            "max |v - v_ablated| " + fmt(worst) + ", (0.4,0.35,0.25) drop 3 -> (" +
                (hand.weights.size() == 2 ? format_number(hand.weights[0]) + ", " +
                                                format_number(hand.weights[1])
                                          : std::string("?")) +
                ")"};
}

// ---------------------------------------------------------------- 8

Outcome criterion_reference_aggregate() {
    const std::array<std::array<double, 3>, 3> rows{{{0.245, 0.566, 0.189},
                                                     {0.408, 0.347, 0.245},
                                                     {0.277, 0.330, 0.393}}};
    const ContributionReport r = aggregate_contributions(rows, {0.387, 0.295, 0.318});
    const std::array<double, 3> expected{0.304, 0.425, 0.271};
    double worst = 0.0;
    for (std::size_t m = 0; m < 3; ++m) {
        worst = std::max(worst, std::abs(r.aggregate[m] - expected[m]));
    }
    return {worst <= 0.005, "aggregate (" + format_number(r.aggregate[0]) + ", " +
                                format_number(r.aggregate[1]) + ", " +
                                format_number(r.aggregate[2]) + "), max deviation " + fmt(worst)};
}

// ---------------------------------------------------------------- 9

double optional_gap(const std::optional<double>& a, const std::optional<double>& b) {
    if (a.has_value() != b.has_value()) return INFINITY;
    return a ? std::abs(*a - *b) : 0.0;
}

Outcome criterion_metrics() {
    RngStream rng(9);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng.below(60);
        std::vector<double> y(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(0.0, 24.0);
            p[i] = y[i] + rng.normal() * rng.uniform(0.0, 6.0);
        }
        const MetricsReport got = compute_metrics(y, p);
        const oracle::Metrics ref = oracle::metrics_reference(y, p);
        worst = std::max({worst, optional_gap(got.ccc, ref.ccc), optional_gap(got.pearson, ref.pearson),
                          std::abs(got.rmse - ref.rmse), std::abs(got.mae - ref.mae)});
    }
    const MetricsReport example =
        compute_metrics(std::vector<double>{0, 1, 2}, std::vector<double>{0, 2, 4});
    const double example_gap = example.ccc ? std::abs(*example.ccc - 8.0 / 13.0) : INFINITY;
    return {worst <= 1e-12 && example_gap <= 1e-12,
            "max gap " + fmt(worst) + " over 1000 pairs, worked example ccc " +
                (example.ccc ? format_number(*example.ccc) : std::string("undefined"))};
}

// ---------------------------------------------------------------- 10, 6, 11

struct Workspace {
    fs::path root;
    explicit Workspace(fs::path p) : root(std::move(p)) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }
};

struct PipelineRun {
    bool ok = false;
    std::string failure;
    double seconds = 0.0;
    double ccc = NAN;
    std::array<double, 3> contribution{NAN, NAN, NAN};
};

PipelineRun run_pipeline(const fs::path& dir, std::uint64_t seed) {
    PipelineRun result;
    const std::string conf = MMFF_ACCEPTANCE_CONFIG;
    const std::string s = std::to_string(seed);
    const std::string raw = (dir / "raw").string();
    const std::string data = (dir / "data").string();
    const std::string run = (dir / "run").string();
    const std::vector<std::vector<std::string>> steps{
        {"synth", "--config", conf, "--seed", s, "--out", raw},
        {"compress", "--config", conf, "--seed", s, "--data", raw, "--out", data},
        {"train", "--config", conf, "--seed", s, "--data", data, "--out", run},
        {"eval", "--data", data, "--out", run},
        {"contrib", "--data", data, "--out", run},
    };
    const auto t0 = Clock::now();
    for (const auto& args : steps) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        if (code != 0) {
            result.failure = args[0] + " exited " + std::to_string(code) + ": " + err.str();
            return result;
        }
    }
    result.seconds = seconds_since(t0);

    std::istringstream metrics(read_text_file(fs::path(run) / "metrics.csv"));
    std::string line;
    std::getline(metrics, line);
    std::getline(metrics, line);
    const auto cells = split_csv_line(line);
    if (cells.size() < 2 || !parse_double(cells[1], result.ccc)) {
        result.failure = "unreadable metrics.csv";
        return result;
    }
    std::istringstream contrib(read_text_file(fs::path(run) / "contributions.csv"));
    while (std::getline(contrib, line)) {
        const auto c = split_csv_line(line);
        if (c.size() == 4 && c[0] == "fusion") {
            for (std::size_t m = 0; m < 3; ++m) parse_double(c[m + 1], result.contribution[m]);
        }
    }
    result.ok = true;
    return result;
}

Outcome criterion_end_to_end(const fs::path& root) {
    std::size_t good_ccc = 0;
    std::size_t audio_first = 0;
    double slowest = 0.0;
    std::string detail;
    bool runs_ok = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PipelineRun r = run_pipeline(root / ("seed" + std::to_string(seed)), seed);
        if (!r.ok) {
            runs_ok = false;
            detail += " seed " + std::to_string(seed) + " failed (" + r.failure + ");";
            continue;
        }
        slowest = std::max(slowest, r.seconds);
        if (r.ccc >= 0.8) ++good_ccc;
        const auto& g = r.contribution;
        if (g[1] > g[0] && g[1] > g[2]) ++audio_first;
        std::cout << "  seed " << seed << ": ccc " << format_number(r.ccc) << ", gamma (t,a,v) ("
                  << format_number(g[0]) << ", " << format_number(g[1]) << ", "
                  << format_number(g[2]) << "), " << fmt(r.seconds) << " s\n";
    }
    const bool pass = runs_ok && good_ccc == 5 && audio_first >= 4 && slowest <= 300.0;
    return {pass, std::to_string(good_ccc) + "/5 seeds with test ccc >= 0.8, audio largest in " +
                      std::to_string(audio_first) + "/5, slowest run " + fmt(slowest) + " s" +
                      detail};
}

Checkpoint backbone_only(const Checkpoint& c, std::size_t& count) {
    Checkpoint out;
    count = 0;
    for (const auto& a : c.arrays) {
        if (a.name.rfind("enc.", 0) == 0 || a.name.rfind("pre.", 0) == 0 ||
            a.name.rfind("proxy.", 0) == 0) {
            CheckpointArray copy = a;
            copy.frozen = false;
            out.arrays.push_back(copy);
            ++count;
        }
    }
    return out;
}

Outcome criterion_freeze(const fs::path& run) {
    if (!fs::exists(run / "stage1.ckpt") || !fs::exists(run / "stage2.ckpt")) {
        return {false, "missing stage checkpoints in " + run.string()};
    }
    const Checkpoint s1 = load_checkpoint(run / "stage1.ckpt");
    const Checkpoint s2 = load_checkpoint(run / "stage2.ckpt");
    std::size_t n1 = 0, n2 = 0;
    const std::string b1 = serialize_checkpoint(backbone_only(s1, n1));
    const std::string b2 = serialize_checkpoint(backbone_only(s2, n2));
    bool frozen = true;
    for (const auto& a : s2.arrays) {
        if (a.name.rfind("fusion.", 0) != 0 && a.name != kStageArrayName) frozen = frozen && a.frozen;
    }
    return {n1 > 0 && n1 == n2 && b1 == b2 && frozen,
            std::to_string(n1) + " encoder/proxy arrays, " + std::to_string(b1.size()) + " bytes, " +
                (b1 == b2 ? "identical" : "different") + " across stage 2" +
                (frozen ? "" : ", not all frozen")};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
        }
    }
    return files;
}

Outcome criterion_determinism(const fs::path& first, const fs::path& again) {
    const PipelineRun r = run_pipeline(again, 1);
    if (!r.ok) return {false, "rerun failed: " + r.failure};
    const auto a = snapshot(first / "run");
    const auto b = snapshot(again / "run");
    std::size_t checkpoints = 0, metric_files = 0;
    std::vector<std::string> differing;
    for (const auto& [name, bytes] : a) {
        if (name.ends_with(".ckpt")) ++checkpoints;
        if (name.ends_with(".csv")) ++metric_files;
        auto it = b.find(name);
        if (it == b.end() || it->second != bytes) differing.push_back(name);
    }
    std::string detail = std::to_string(checkpoints) + " checkpoints and " +
                         std::to_string(metric_files) + " csv files compared";
    for (const auto& d : differing) detail += ", differs: " + d;
    return {differing.empty() && a.size() == b.size() && checkpoints > 0, detail};
}

} // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1])
                                   : fs::temp_directory_path() / "mmff_acceptance";
    Workspace ws(root);

    std::map<int, std::pair<std::string, Outcome>> results;
    auto record = [&](int id, std::string name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name
                  << "): " << o.detail << std::endl;
        results[id] = {std::move(name), std::move(o)};
    };

    record(1, "gradient suite", criterion_gradients);
    record(2, "midimax oracle", criterion_midimax);
    record(3, "filter oracle", criterion_filter);
    record(4, "principal axis", criterion_pca);
    record(5, "simplex weights", criterion_simplex);
    record(10, "end-to-end synthetic", [&] { return criterion_end_to_end(root); });
    record(6, "hierarchy freeze", [&] { return criterion_freeze(root / "seed1" / "run"); });
    record(7, "ablation consistency", criterion_ablation);
    record(8, "reference aggregate", criterion_reference_aggregate);
    record(9, "metrics oracle", criterion_metrics);
    record(11, "determinism", [&] { return criterion_determinism(root / "seed1", root / "rerun1"); });

    std::cout << "\nsummary\n";
    int failed = 0;
    for (const auto& [id, entry] : results) {
        const auto& [name, o] = entry;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ")\n";
        if (!o.pass) ++failed;
    }
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
              << "\n";
    return failed == 0 ? 0 : 1;
}
