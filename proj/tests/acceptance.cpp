// Acceptance run: one PASS/FAIL line per criterion, exit code 1 if any fails.
//   spi_acceptance [--workers N] [--only 1,4,7]

#include "ode_oracle.hpp"
#include "spi/harness.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>

using namespace spi;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) detail += "; ";
        detail += what + (ok ? "" : " [violated]");
    }
};

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

const std::array<double, 3> kInertia{2.0, 1.0, 2.0 / 3.0};
const std::array<double, 3> kNoiseInertia{1.0, 2.0, 3.0};

std::vector<std::shared_ptr<const Model>> unit_noise_models() {
    return {std::make_shared<MaxwellBlochModel>(1.0, 1.0),
            std::make_shared<RigidBodyModel>(kInertia, kNoiseInertia, std::array{1.0, 1.0, 1.0}),
            std::make_shared<SineEulerModel>(std::array{1.0, 1.0, 1.0, 1.0})};
}

std::vector<FlowPartId> parts_of(const Model& m) {
    std::vector<FlowPartId> parts;
    for (int k = 0; k < m.deterministic_parts(); ++k) parts.push_back(FlowPartId::det(k));
    for (int k = 0; k < m.noise_count(); ++k) parts.push_back(FlowPartId::sto(k));
    return parts;
}

std::vector<double> dyadic(int from, int to) {
    std::vector<double> h;
    for (int k = from; k <= to; ++k) h.push_back(std::ldexp(1.0, -k));
    return h;
}

Outcome geometry_suite() {
    Outcome o;
    double skew = 0.0, cas = 0.0, jt = 0.0, jf = 0.0;
    for (const auto& m : unit_noise_models()) {
        std::mt19937_64 rng(101);
        const auto fd = m->structure().without_tensor();
        for (int s = 0; s < 100; ++s) {
            const State y = m->random_state(rng);
            skew = std::max(skew, check_skew(m->structure(), y));
            jt = std::max(jt, check_jacobi(m->structure(), y, 1e-4));
            jf = std::max(jf, check_jacobi(fd, y, 1e-4));
            for (const auto& c : m->casimirs()) cas = std::max(cas, check_casimir(c, m->structure(), y));
        }
    }
    o.require(skew <= 1e-14, "skew " + sci(skew));
    o.require(cas <= 1e-12, "casimir " + sci(cas));
    o.require(jt <= 1e-12, "jacobi(tensor) " + sci(jt));
    o.require(jf <= 1e-7, "jacobi(fd) " + sci(jf));
    return o;
}

Outcome casimir_preservation() {
    Outcome o;
    const auto rb = RigidBodyModel(kInertia, kNoiseInertia);
    const auto se = SineEulerModel({1.0, 1.0, 1.0, 1.0});
    double worst = 0.0;
    for (auto s : {SchemeId::splitting, SchemeId::splitting_reversed, SchemeId::weak2}) {
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            worst = std::max(worst, invariant_drift_experiment(rb, s, rb.default_initial_state(), 20.0, 0.2, seed)
                                        .max_casimir_drift);
            worst = std::max(worst, invariant_drift_experiment(se, s, se.default_initial_state(), 1.0, 0.02, seed)
                                        .max_casimir_drift);
        }
    }
    o.require(worst <= 1e-12, "Poisson schemes drift " + sci(worst));
    const double em =
        invariant_drift_experiment(rb, SchemeId::euler_maruyama, rb.default_initial_state(), 20.0, 0.2, 1)
            .max_casimir_drift;
    o.require(em > 1e-3, "Euler-Maruyama drift " + sci(em));
    return o;
}

Outcome poisson_map() {
    Outcome o;
    double worst5 = 0.0, min_order = 1e9, min_coarse_order = 1e9;
    for (const auto& m : unit_noise_models()) {
        std::mt19937_64 rng(7);
        const auto path = sample_path(7, m->noise_count(), 1, 0.1);
        std::vector<double> dw(static_cast<std::size_t>(m->noise_count()));
        path.increments(0, dw);
        const StateMap step = [&](const State& y) { return step_splitting(*m, 0.1, dw, y); };
        for (int s = 0; s < 10; ++s) {
            const State y = m->random_state(rng);
            auto r = [&](double fd) { return check_poisson_map(step, m->structure(), y, fd); };
            const double r5 = r(1e-5);
            worst5 = std::max(worst5, r5);
            min_order = std::min(min_order, std::log10(r(1e-4) / r5));
            min_coarse_order = std::min(min_coarse_order, std::log10(r(1e-2) / r(1e-3)));
        }
    }
    o.require(worst5 <= 1e-6, "residual(1e-5) " + sci(worst5));
    // Quadratic shrinkage is two decades per decade of fd step; 1.5 leaves room for rounding.
    o.require(min_order >= 1.5, "fd order 1e-4 -> 1e-5 " + fixed(min_order));
    o.detail += " (informational: fd order 1e-2 -> 1e-3 " + fixed(min_coarse_order) + ")";
    return o;
}

Outcome strong_orders(int workers) {
    struct Case {
        std::string name;
        std::shared_ptr<const Model> model;
        double target;
    };
    const std::vector<Case> cases{
        {"rb", std::make_shared<RigidBodyModel>(kInertia, kNoiseInertia), 0.5},
        {"mb(1,0)", std::make_shared<MaxwellBlochModel>(1.0, 0.0), 1.0},
        {"mb(0,1)", std::make_shared<MaxwellBlochModel>(0.0, 1.0), 1.0},
        {"se(1 noise)", std::make_shared<SineEulerModel>(std::array{1.0, 0.0, 0.0, 0.0}), 1.0},
        {"se(4 noises)", std::make_shared<SineEulerModel>(std::array{1.0, 1.0, 1.0, 1.0}), 0.5},
    };
    Outcome o;
    for (const auto& c : cases) {
        ConvergenceConfig cfg;
        cfg.model = c.model;
        cfg.y0 = c.model->default_initial_state();
        cfg.h_list = dyadic(5, 10);
        cfg.h_ref = 0x1p-14;
        cfg.samples = 200;
        cfg.seed = 2024;
        cfg.workers = workers;
        const auto r = strong_error_experiment(cfg);
        if (!r.fit) {
            o.require(false, c.name + " no fit");
            continue;
        }
        o.require(std::abs(r.fit->slope - c.target) <= 0.15,
                  c.name + " slope " + fixed(r.fit->slope) + " (target " + fixed(c.target) + ")");
    }
    return o;
}

Outcome weak_order(SchemeId scheme, bool coupled, double target, double tol, int workers) {
    ConvergenceConfig cfg;
    cfg.model = std::make_shared<RigidBodyModel>(kInertia, kInertia, std::array{1e-3, 1e-3, 1e-3});
    cfg.scheme = scheme;
    cfg.y0 = cfg.model->default_initial_state();
    cfg.h_list = dyadic(4, 9);
    cfg.h_ref = 0x1p-11;
    cfg.samples = 100'000;
    cfg.seed = 77;
    cfg.mode = ErrorMode::weak;
    cfg.coupled = coupled;
    cfg.workers = workers;
    const auto r = weak_error_experiment(cfg);
    Outcome o;
    if (!r.fit) {
        o.require(false, "fewer than two points above the noise floor");
        return o;
    }
    o.require(std::abs(r.fit->slope - target) <= tol, "slope " + fixed(r.fit->slope) + " over " +
                                                           std::to_string(r.fitted_h.size()) + " points" +
                                                           (coupled ? " (coupled paths)" : " (independent paths)"));
    return o;
}

Outcome ap_property() {
    Outcome o;
    ApSweepConfig cfg;
    cfg.model = std::make_shared<RigidBodyModel>(kInertia, kNoiseInertia);
    cfg.y0 = cfg.model->default_initial_state();
    cfg.h = 1e-2;
    cfg.eps_list = {1e-2, 1e-4, 1e-6, 1e-8};
    cfg.samples = 100;
    const auto r = ap_sweep(cfg);
    bool decreasing = true;
    std::string seq;
    for (std::size_t i = 0; i < r.pathwise.size(); ++i) {
        if (i > 0 && !(r.pathwise[i].error < r.pathwise[i - 1].error)) decreasing = false;
        seq += (i ? " " : "") + sci(r.pathwise[i].error);
    }
    o.require(decreasing, "decreasing [" + seq + "]");
    o.require(r.pathwise.back().error <= 1e-5, "eps=1e-8 discrepancy " + sci(r.pathwise.back().error));
    bool identical = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto path = sample_path(seed, 3, 100, 1e-2);
        identical = identical && advance_ap(*cfg.model, ApConfig{0.0, OuVariant::implicit_euler}, cfg.y0, path).y ==
                                     advance(SchemeId::splitting, *cfg.model, cfg.y0, path);
    }
    o.require(identical, "eps=0 bit-identical to splitting");
    return o;
}

Outcome mb_bound() {
    const MaxwellBlochModel mb(1.0, 0.0);
    std::mt19937_64 rng(8);
    std::int64_t violations = 0;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const State y0 = 3.0 * mb.random_state(rng);
        std::vector<State> rec;
        advance(SchemeId::splitting, mb, y0, sample_path(derive_sample_seed(8, i), 2, 100, 0.1), &rec);
        for (std::size_t n = 0; n < rec.size(); ++n) {
            if (rec[n].norm() > std::pow(1.1, static_cast<double>(n)) * y0.norm() * (1.0 + 1e-14)) ++violations;
        }
    }
    Outcome o;
    o.require(violations == 0, std::to_string(violations) + " violations over 1000 trajectories x 100 steps");
    return o;
}

Outcome flow_oracle() {
    Outcome o;
    double flow_err = 0.0, jac_err = 0.0;
    for (const auto& m : unit_noise_models()) {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> time(0.0, 1.0);
        for (const auto part : parts_of(*m)) {
            const auto& q = m->form(part);
            const auto field = [&](const State& y) { return State(m->structure_at(y) * q.gradient(y)); };
            for (int s = 0; s < 20; ++s) {
                const State y0 = m->random_state(rng);
                const double t = s == 0 ? 1.0 : time(rng);
                flow_err = std::max(flow_err,
                                    (m->flow(part, t, y0) - testing::ode_oracle(field, y0, t)).cwiseAbs().maxCoeff());
            }
        }
        for (int s = 0; s < 20; ++s) {
            const State y = m->random_state(rng);
            for (int k = 0; k < m->noise_count(); ++k) {
                const Matrix fd = fd_jacobian([&](const State& x) { return m->diffusion(k, x); }, y, 1e-6);
                jac_err = std::max(jac_err, (fd - m->diffusion_jacobian(k, y)).cwiseAbs().maxCoeff());
            }
        }
    }
    o.require(flow_err <= 1e-9, "flow vs oracle " + sci(flow_err));
    o.require(jac_err <= 1e-6, "Ito Jacobian vs FD " + sci(jac_err));
    return o;
}

Outcome determinism() {
    Outcome o;
    auto csv = [](const ConvergenceConfig& c) {
        std::ostringstream s;
        write_convergence_csv(s, convergence_experiment(c));
        return s.str();
    };
    struct Run {
        std::string name;
        ErrorMode mode;
        bool coupled;
    };
    for (const auto& run : {Run{"strong", ErrorMode::strong, false}, Run{"weak", ErrorMode::weak, false},
                            Run{"weak coupled", ErrorMode::weak, true}}) {
        ConvergenceConfig c;
        c.model = std::make_shared<SineEulerModel>(std::array{1.0, 1.0, 1.0, 1.0});
        c.y0 = c.model->default_initial_state();
        c.h_list = dyadic(3, 6);
        c.h_ref = 0x1p-8;
        c.samples = 200;
        c.mode = run.mode;
        c.coupled = run.coupled;
        c.workers = 1;
        const auto one = csv(c);
        c.workers = 8;
        o.require(csv(c) == one, run.name + " CSV identical for 1 and 8 workers");
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("Acceptance criteria");
    int workers = 1;
    std::vector<int> only;
    app.add_option("--workers", workers, "Worker threads for the Monte Carlo criteria")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
        double time_limit = 0.0;  // seconds; 0 = none
    };
    const std::vector<Criterion> criteria{
        {1, "geometry suite", geometry_suite, 5.0},
        {2, "Casimir preservation", casimir_preservation, 10.0},
        {3, "Poisson-map residual", poisson_map, 5.0},
        {4, "strong orders", [&] { return strong_orders(workers); }},
        {5, "weak order 1 (splitting)", [&] { return weak_order(SchemeId::splitting, false, 1.0, 0.3, workers); }},
        {6, "weak order 2 (weak2)", [&] { return weak_order(SchemeId::weak2, true, 2.0, 0.4, workers); }},
        {7, "AP property", ap_property, 10.0},
        {8, "Maxwell-Bloch growth bound", mb_bound},
        {9, "flows vs ODE oracle", flow_oracle},
        {10, "worker determinism", determinism},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit > 0.0) o.require(secs < c.time_limit, "runtime limit " + fixed(c.time_limit) + " s");
        if (!o.pass) ++failed;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << "): " << o.detail
                  << "  [" << fixed(secs) << " s]" << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
