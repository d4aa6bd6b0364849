#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spi/harness.hpp"

#include <cmath>
#include <sstream>

using namespace spi;

namespace {

std::shared_ptr<const Model> rb_model() {
    return std::make_shared<RigidBodyModel>(std::array<double, 3>{2.0, 1.0, 2.0 / 3.0},
                                            std::array<double, 3>{1.0, 2.0, 3.0});
}

ConvergenceConfig small_strong() {
    ConvergenceConfig c;
    c.model = rb_model();
    c.y0 = c.model->default_initial_state();
    c.h_list = {0x1p-3, 0x1p-4, 0x1p-5};
    c.h_ref = 0x1p-7;
    c.samples = 16;
    c.seed = 3;
    return c;
}

std::string csv_of(const ErrorReport& r) {
    std::ostringstream s;
    write_convergence_csv(s, r);
    return s.str();
}

}  // namespace

TEST_CASE("fit_rate recovers exact power laws") {
    const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
    std::vector<double> lin, root;
    for (double x : h) {
        lin.push_back(3.0 * x);
        root.push_back(std::sqrt(x));
    }
    const auto a = fit_rate(h, lin);
    CHECK(a.slope == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(a.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit_rate(h, root).slope == doctest::Approx(0.5).epsilon(1e-12));
    // Two points define the line exactly.
    CHECK(fit_rate({0.1, 0.01}, {0.01, 0.0001}).slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_rate({0.1, 0.01}, {0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(fit_rate({0.1}, {0.1}), ContractError);
}

TEST_CASE("noise-floor guard drops points within 3 standard errors") {
    const std::vector<ErrorPoint> pts{{0.5, 0.5, 0.01}, {0.25, 0.25, 0.01}, {0.125, 0.125, 0.01}, {0.0625, 0.02, 0.01}};
    std::vector<double> used;
    const auto fit = fit_above_noise_floor(pts, &used);
    REQUIRE(fit);
    CHECK(used.size() == 3);
    CHECK(fit->slope == doctest::Approx(1.0));
    CHECK_FALSE(fit_above_noise_floor({{0.5, 0.01, 0.01}, {0.25, 0.01, 0.01}}));
}

TEST_CASE("strong error vanishes when h equals h_ref") {
    auto c = small_strong();
    c.h_list = {c.h_ref};
    const auto r = strong_error_experiment(c);
    REQUIRE(r.points.size() == 1);
    CHECK(r.points[0].error == 0.0);
    CHECK(r.failures == 0);
}

TEST_CASE("strong error decreases with h") {
    const auto r = strong_error_experiment(small_strong());
    REQUIRE(r.points.size() == 3);
    CHECK(r.points[0].error > r.points[2].error);
    for (const auto& p : r.points) CHECK(p.std_error > 0.0);
}

TEST_CASE("constant test function has zero weak error") {
    auto c = small_strong();
    c.mode = ErrorMode::weak;
    c.phi = TestFunction::constant;
    for (bool coupled : {false, true}) {
        c.coupled = coupled;
        const auto r = weak_error_experiment(c);
        for (const auto& p : r.points) CHECK(p.error == 0.0);
    }
    CHECK(evaluate_test_function(TestFunction::sum_of_sines, (State(2) << 0.25, 0.5).finished()) ==
          doctest::Approx(1.0));
}

TEST_CASE("1 and 8 workers give byte-identical CSV") {
    for (auto mode : {ErrorMode::strong, ErrorMode::weak}) {
        auto c = small_strong();
        c.mode = mode;
        const auto one = csv_of(convergence_experiment(c));
        c.workers = 8;
        CHECK(csv_of(convergence_experiment(c)) == one);
    }
}

TEST_CASE("CSV headers") {
    const auto r = strong_error_experiment(small_strong());
    const auto text = csv_of(r);
    CHECK(text.rfind("model,scheme,mode,h,samples,error,std_error\n", 0) == 0);
    CHECK(text.find("rb,splitting,strong,0.125,16,") != std::string::npos);

    std::ostringstream ap;
    write_ap_csv(ap, {{1e-2, 1e-2, 0.5, 0.1}});
    CHECK(ap.str() == "epsilon,h,error,std_error\n0.01,0.01,0.5,0.1\n");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("invariant drift series") {
    const auto m = rb_model();
    const auto s = invariant_drift_experiment(*m, SchemeId::splitting, m->default_initial_state(), 2.0, 0.2, 1);
    CHECK(s.names == std::vector<std::string>{"H", "C1"});
    CHECK(s.times.size() == 11);
    CHECK(s.max_casimir_drift <= 1e-12);
    std::ostringstream out;
    write_invariants_csv(out, s);
    CHECK(out.str().rfind("t,H,C1\n0,", 0) == 0);
    const auto em = invariant_drift_experiment(*m, SchemeId::euler_maruyama, m->default_initial_state(), 2.0, 0.2, 1);
    CHECK(em.max_casimir_drift > 1e-3);
}

TEST_CASE("AP sweep: discrepancy shrinks with eps and vanishes at eps = 0") {
    ApSweepConfig c;
    c.model = rb_model();
    c.y0 = c.model->default_initial_state();
    c.eps_list = {1e-2, 1e-4, 1e-6, 1e-8, 0.0};
    c.samples = 10;
    const auto r = ap_sweep(c);
    REQUIRE(r.pathwise.size() == 5);
    for (std::size_t i = 1; i + 1 < r.pathwise.size(); ++i) CHECK(r.pathwise[i].error < r.pathwise[i - 1].error);
    CHECK(r.pathwise[3].error <= 1e-5);
    CHECK(r.pathwise[4].error == 0.0);
    CHECK(r.weak.empty());
}

TEST_CASE("configuration validation") {
    auto c = small_strong();
    c.h_list = {0.3};
    CHECK_THROWS_AS(convergence_experiment(c), ContractError);
    c = small_strong();
    c.samples = 1;
    CHECK_THROWS_AS(convergence_experiment(c), ContractError);
    c = small_strong();
    c.y0 = State::Zero(2);
    CHECK_THROWS_AS(convergence_experiment(c), ContractError);
    c = small_strong();
    c.model = nullptr;
    CHECK_THROWS_AS(c.validate(), ContractError);
    CHECK_THROWS_AS(parse_error_mode("median"), ContractError);

    ApSweepConfig a;
    a.model = rb_model();
    a.y0 = a.model->default_initial_state();
    a.eps_list = {1e-4, 1e-2};
    CHECK_THROWS_AS(ap_sweep(a), ContractError);
    a.eps_list = {-1.0};
    CHECK_THROWS_AS(ap_sweep(a), ContractError);
}

TEST_CASE("parallel_for visits every index once and propagates errors") {
    std::vector<int> hits(1000, 0);
    parallel_for(1000, 4, [&](std::int64_t i) { hits[static_cast<std::size_t>(i)] += 1; });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::int64_t i) {
                                     if (i == 7) throw NumericError("boom");
                                 }),
                    NumericError);
    CHECK_THROWS_AS(parallel_for(10, 0, [](std::int64_t) {}), ContractError);
}
