#include <doctest.h>

#include <cmath>
#include <set>

#include "mmff/adamw.hpp"
#include "mmff/error.hpp"
#include "mmff/param_store.hpp"
#include "mmff/rng.hpp"
#include "mmff/training.hpp"

using namespace mmff;

namespace {

void set_grad(ParamStore& store, const std::string& name, std::vector<double> g) {
    Var v = store.get(name);
    v.zero_grad();
    Var probe = Var::constant(v.shape(), std::move(g));
    backward(sum(hadamard(v, probe)));
}

} // namespace

TEST_CASE("param store") {
    ParamStore store;
    store.add("a", {2}, {1, 2});
    store.add("b", {1, 2}, {3, 4});
    CHECK(store.size() == 2);
    CHECK(store.parameter_count() == 4);
    CHECK(store.contains("a"));
    CHECK_THROWS_AS(store.add("a", {1}, {0}), UsageError);
    CHECK_THROWS_AS(store.get("zz"), UsageError);
    store.set_frozen("a", true);
    CHECK(store.frozen("a"));
    CHECK_FALSE(store.all_frozen());
    store.freeze_all();
    CHECK(store.all_frozen());
    CHECK(store.entries()[0].name == "a");
}

TEST_CASE("adamw lr=0 leaves parameters unchanged") {
    ParamStore store;
    store.add("w", {3}, {1, -2, 3});
    AdamW opt({.lr = 0.0});
    set_grad(store, "w", {1, 1, 1});
    opt.step(store);
    const auto v = store.get("w").value();
    CHECK(std::vector<double>(v.begin(), v.end()) == std::vector<double>{1, -2, 3});
    CHECK(opt.steps() == 1);
}

TEST_CASE("adamw decoupled decay with zero gradient") {
    ParamStore store;
    store.add("w", {2}, {2.0, -4.0});
    AdamW opt({.lr = 0.01, .weight_decay = 0.1});
    set_grad(store, "w", {0, 0});
    opt.step(store);
    CHECK(store.get("w")[0] == doctest::Approx(2.0 * 0.999).epsilon(1e-15));
    CHECK(store.get("w")[1] == doctest::Approx(-4.0 * 0.999).epsilon(1e-15));
}

TEST_CASE("adamw first step moves by lr in the gradient sign") {
    ParamStore store;
    store.add("w", {3}, {0.5, 0.5, 0.5});
    const double lr = 0.01;
    AdamW opt({.lr = lr, .weight_decay = 0.0});
    set_grad(store, "w", {3.0, -0.2, 1e-3});
    opt.step(store);
    CHECK(store.get("w")[0] == doctest::Approx(0.5 - lr).epsilon(1e-6));
    CHECK(store.get("w")[1] == doctest::Approx(0.5 + lr).epsilon(1e-6));
    CHECK(store.get("w")[2] == doctest::Approx(0.5 - lr).epsilon(1e-4));
    const auto* m = opt.moments("w");
    REQUIRE(m != nullptr);
    CHECK(m->first[0] == doctest::Approx(0.3));
    CHECK(m->second[0] == doctest::Approx(0.009));
}

TEST_CASE("adamw frozen parameters are bit-identical and missing gradients throw") {
    ParamStore store;
    store.add("frozen", {2}, {0.1, 0.2});
    store.add("live", {2}, {0.3, 0.4});
    store.set_frozen("frozen", true);
    AdamW opt({.lr = 0.1});
    for (int i = 0; i < 50; ++i) {
        set_grad(store, "frozen", {1, 1});
        set_grad(store, "live", {1, -1});
        opt.step(store);
    }
    CHECK(store.get("frozen")[0] == 0.1);
    CHECK(store.get("frozen")[1] == 0.2);
    CHECK(store.get("live")[0] != 0.3);
    CHECK(opt.moments("frozen") == nullptr);

    ParamStore bare;
    bare.add("w", {1}, {1});
    AdamW fresh;
    CHECK_THROWS_AS(fresh.step(bare), StateError);
    CHECK_THROWS_AS(AdamW({.beta1 = 1.0}), ConfigError);
}

TEST_CASE("rng streams") {
    RngStream a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    RngStream base(7);
    const RngStream f1 = base.fork(1);
    CHECK(base.counter() == 0);
    CHECK(base.fork(1).seed() == f1.seed());
    CHECK(base.fork(2).seed() != f1.seed());

    RngStream u(1);
    double total = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double x = u.uniform();
        CHECK((x >= 0.0 && x < 1.0));
        total += x;
    }
    CHECK(std::abs(total / 20000 - 0.5) < 0.01);
    std::set<std::size_t> seen;
    for (int i = 0; i < 200; ++i) {
        seen.insert(u.below(5));
    }
    CHECK(seen == std::set<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("run_epoch, snapshots and non-finite loss") {
    ParamStore store;
    Var w = store.add("w", {1}, {0.0});
    AdamW opt({.lr = 0.1, .weight_decay = 0.0});
    RngStream rng(1);
    const std::vector<double> targets{1, 2, 3, 4};
    auto loss = [&](std::size_t i, RngStream&) {
        return mse_loss(w, std::vector<double>{targets[i]});
    };
    const double first = run_epoch(store, opt, 4, 2, 0, rng, loss);
    const ParamSnapshot snap = take_snapshot(store);
    double last = first;
    for (int e = 1; e < 50; ++e) {
        last = run_epoch(store, opt, 4, 2, e, rng, loss);
    }
    CHECK(last < first);
    CHECK(opt.steps() == 100);
    restore_snapshot(store, snap);
    CHECK(store.get("w")[0] == snap.values[0][0]);

    auto bad = [&](std::size_t, RngStream&) {
        return mse_loss(w, std::vector<double>{std::nan("")});
    };
    CHECK_THROWS_WITH_AS(run_epoch(store, opt, 2, 1, 7, rng, bad), doctest::Contains("7"),
                         NumericError);
}
