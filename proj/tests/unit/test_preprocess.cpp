#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmff/error.hpp"
#include "mmff/preprocess.hpp"
#include "oracles.hpp"

using namespace mmff;

namespace {

FrameSequence seq_from(std::size_t rows, std::size_t cols, std::vector<double> data) {
    FrameSequence s;
    s.sample_id = "x";
    s.frames = Matrix(rows, cols);
    s.frames.data = std::move(data);
    return s;
}

FrameSequence random_seq(RngStream& rng, std::size_t rows, std::size_t cols) {
    FrameSequence s;
    s.sample_id = "r";
    s.frames = oracle::random_matrix(rng, rows, cols);
    return s;
}

} // namespace

TEST_CASE("minmax") {
    const std::vector<FrameSequence> train{seq_from(3, 2, {0, 7, 5, 7, 10, 7})};
    const NormStats stats = fit_minmax(train);
    const FrameSequence out = apply_minmax(train[0], stats);
    CHECK(out.frames(0, 0) == 0.0);
    CHECK(out.frames(1, 0) == 0.5);
    CHECK(out.frames(2, 0) == 1.0);
    for (std::size_t r = 0; r < 3; ++r) {
        CHECK(out.frames(r, 1) == 0.0);
    }
    const FrameSequence test = apply_minmax(seq_from(2, 2, {12, 1, -3, 9}), stats);
    CHECK(test.frames(0, 0) == 1.0);
    CHECK(test.frames(1, 0) == 0.0);
    CHECK_THROWS_AS(fit_minmax(std::vector<FrameSequence>{}), UsageError);
}

TEST_CASE("low-variance filter worked example") {
    const std::vector<FrameSequence> train{seq_from(2, 2, {0.0, 0.2, 0.0, 0.8})};
    const FilterMask mask = fit_low_variance_filter(train, 0.01);
    CHECK(mask.keep == std::vector<bool>{false, true});
    CHECK(mask.statistic[1] == doctest::Approx(0.09).epsilon(1e-12));
    const FrameSequence f = apply_filter(train[0], mask);
    CHECK(f.dims() == 1);
    CHECK(f.frames(1, 0) == 0.8);
    CHECK(kDefaultVarianceThreshold == 0.01);

    const std::vector<FrameSequence> flat{seq_from(2, 1, {0.3, 0.3})};
    CHECK_THROWS_AS(fit_low_variance_filter(flat, 0.01), ConfigError);
}

TEST_CASE("filter beta=0 keeps every non-constant dimension") {
    RngStream rng(2);
    std::vector<FrameSequence> train;
    for (int i = 0; i < 4; ++i) {
        train.push_back(random_seq(rng, 5, 6));
    }
    const FilterMask mask = fit_low_variance_filter(train, 0.0);
    CHECK(mask.kept() == 6);
}

TEST_CASE("filter matches the pooled-variance oracle and ignores sample order") {
    RngStream rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 2 + rng.below(6);
        std::vector<FrameSequence> train;
        for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
            FrameSequence s = random_seq(rng, 1 + rng.below(8), k);
            for (double& v : s.frames.data) {
                v = 0.5 + 0.2 * v;
            }
            train.push_back(s);
        }
        const double beta = 0.04 * rng.uniform();
        std::vector<double> stats(k);
        bool any = false;
        for (std::size_t d = 0; d < k; ++d) {
            stats[d] = oracle::pooled_variance(train, d);
            any = any || stats[d] > beta;
        }
        if (!any) {
            CHECK_THROWS_AS(fit_low_variance_filter(train, beta), ConfigError);
            continue;
        }
        const FilterMask mask = fit_low_variance_filter(train, beta);
        for (std::size_t d = 0; d < k; ++d) {
            CHECK(mask.keep[d] == (stats[d] > beta));
        }
        std::reverse(train.begin(), train.end());
        CHECK(fit_low_variance_filter(train, beta).keep == mask.keep);
    }
}

TEST_CASE("principal component worked example") {
    Matrix pts(3, 2);
    pts.data = {-1, -1, 0, 0, 1, 1};
    const PrincipalAxis axis = first_principal_component(pts);
    CHECK(axis.direction[0] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(axis.direction[1] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    const auto proj = axis.project(pts);
    CHECK(proj[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-12));
    CHECK(std::abs(proj[1]) < 1e-12);
    CHECK(proj[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));

    Matrix same(2, 3);
    same.data = {1, 2, 3, 1, 2, 3};
    const PrincipalAxis flat = first_principal_component(same);
    CHECK(flat.eigenvalue == 0.0);
    CHECK(flat.residual == 0.0);
    CHECK(oracle::norm(flat.direction) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("principal component beats random directions") {
    RngStream rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t k = 5 + rng.below(6);
        const Matrix pts = oracle::random_matrix(rng, 40, k);
        const PrincipalAxis axis = first_principal_component(pts);
        const Matrix c = sample_covariance(pts, axis.mean);
        const auto cw = oracle::matvec(c, axis.direction);
        double resid = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            resid += std::pow(cw[i] - axis.eigenvalue * axis.direction[i], 2);
        }
        CHECK(std::sqrt(resid) < 1e-6 * axis.eigenvalue);
        CHECK(std::abs(oracle::norm(axis.direction) - 1.0) < 1e-9);
        const double best = oracle::rayleigh(c, axis.direction);
        for (int r = 0; r < 100; ++r) {
            CHECK(oracle::rayleigh(c, oracle::normals(rng, k)) <= best + 1e-12);
        }
        const auto first = std::find_if(axis.direction.begin(), axis.direction.end(),
                                        [](double v) { return v != 0.0; });
        CHECK(*first > 0.0);
    }
}

TEST_CASE("midimax examples") {
    const std::vector<double> s{3, 1, 4, 1, 5, 9};
    CHECK(midimax_select(s, 6).indices() == std::vector<std::size_t>{0, 1, 5});
    CHECK(midimax_select(std::vector<double>{1, 2, 3}, 3).indices() ==
          std::vector<std::size_t>{0, 1, 2});
    CHECK(midimax_select(std::vector<double>{2, 2, 2, 2}, 4).indices() ==
          std::vector<std::size_t>{0, 0, 0});
    // short tail keeps everything
    CHECK(midimax_select(std::vector<double>{5, 1, 3, 2, 8, 0, 7}, 5).indices() ==
          std::vector<std::size_t>{1, 2, 4, 5, 6});
}

TEST_CASE("midimax matches brute force and keeps slice envelopes") {
    RngStream rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 1 + rng.below(60);
        const std::size_t ratio = 1 + rng.below(12);
        std::vector<double> series(m);
        for (double& v : series) {
            v = static_cast<double>(rng.below(6));  // many ties
        }
        const MidimaxPlan plan = midimax_select(series, ratio);
        CHECK(plan.indices() == oracle::midimax_reference(series, ratio));
        for (std::size_t s = 0; s < plan.selected.size(); ++s) {
            const std::size_t begin = plan.slice_begin[s];
            const std::size_t end = std::min(m, begin + ratio);
            CHECK(std::is_sorted(plan.selected[s].begin(), plan.selected[s].end()));
            for (std::size_t i : plan.selected[s]) {
                CHECK((i >= begin && i < end));
            }
            if (end - begin == ratio && ratio >= 3) {
                CHECK(plan.selected[s].size() == 3);
            }
        }
    }
    std::vector<double> rising(40);
    for (std::size_t i = 0; i < rising.size(); ++i) {
        rising[i] = static_cast<double>(i * i);
    }
    const MidimaxPlan plan = midimax_select(rising, 7);
    for (std::size_t s = 0; s + 1 < plan.selected.size(); ++s) {
        CHECK(plan.selected[s].front() == plan.slice_begin[s]);
        CHECK(plan.selected[s].back() == plan.slice_begin[s] + 6);
    }
}

TEST_CASE("compress gathers frames, pads and normalizes") {
    RngStream rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t m = 1 + rng.below(200);
        const std::size_t k = 1 + rng.below(5);
        const std::size_t target = 3 + rng.below(40);
        const FrameSequence seq = random_seq(rng, m, k);
        const PrincipalAxis axis = first_principal_component(
            m >= 2 ? seq.frames : oracle::random_matrix(rng, 4, k));
        const FrameSequence out = compress_sequence(seq, axis, target);
        CHECK(out.length() == target);
        CHECK(out.dims() == k);

        const std::size_t ratio = std::max<std::size_t>(1, (3 * m + target - 1) / target);
        auto picks = oracle::midimax_reference(axis.project(seq.frames), ratio);
        for (std::size_t r = 0; r < target; ++r) {
            const std::size_t src = r < picks.size() ? picks[r] : picks.back();
            const double n = oracle::norm(seq.frames.row(src));
            for (std::size_t c = 0; c < k; ++c) {
                CHECK(out.frames(r, c) == doctest::Approx(seq.frames(src, c) / n).epsilon(1e-12));
            }
            CHECK(std::abs(oracle::norm(out.frames.row(r)) - 1.0) < 1e-9);
        }
    }
    FrameSequence empty;
    PrincipalAxis axis;
    CHECK_THROWS_AS(compress_sequence(empty, axis, 5), DataError);
}

TEST_CASE("compress of a short sequence returns its frames") {
    const FrameSequence seq = seq_from(2, 2, {3, 4, 0, 0});
    Matrix pts(2, 2);
    pts.data = {0, 0, 1, 1};
    const FrameSequence out = compress_sequence(seq, first_principal_component(pts), 5);
    CHECK(out.length() == 5);
    CHECK(out.frames(0, 0) == 0.6);
    CHECK(out.frames(0, 1) == 0.8);
    for (std::size_t r = 1; r < 5; ++r) {
        CHECK(out.frames(r, 0) == 0.0);  // zero frame stays zero, then repeated
    }
}

TEST_CASE("preprocessor fitted on training is reused unchanged") {
    RngStream rng(5);
    std::vector<FrameSequence> train;
    for (int i = 0; i < 6; ++i) {
        train.push_back(random_seq(rng, 30 + rng.below(20), 4));
    }
    const SequencePreprocessor pre = SequencePreprocessor::fit(train, 0.001, 9);
    const FrameSequence unseen = random_seq(rng, 50, 4);
    const FrameSequence a = pre.apply(unseen);
    const FrameSequence b = pre.apply(unseen);
    CHECK(a.frames.data == b.frames.data);
    CHECK(a.length() == 9);
    CHECK(a.dims() == pre.filter.kept());
}
