#include "spi/cli.hpp"

#include "spi/harness.hpp"
#include "spi/model_config.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace spi::cli {

namespace {

struct Common {
    std::string model = "rb";
    std::string config;
    std::uint64_t seed = 1;
    std::string out;
    int workers = 1;
    bool gnuplot = false;
};

ModelConfig load_model(const Common& c) {
    if (!c.config.empty()) return ModelConfig::from_json_file(c.config);
    return ModelConfig::preset(c.model);
}

// Per-model defaults for single-trajectory runs.
struct TrajectoryDefaults {
    double h;
    double T;
};

TrajectoryDefaults trajectory_defaults(const std::string& model) {
    if (model == "mb") return {0.01, 1.0};
    if (model == "rb") return {0.2, 20.0};
    return {0.02, 1.0};
}

double flag_real(const std::string& flag, const std::string& text) {
    try {
        return parse_real(text);
    } catch (const ContractError& e) {
        throw ContractError(flag + ": " + e.what());
    }
}

std::vector<double> flag_list(const std::string& flag, const std::string& text) {
    try {
        return parse_real_list(text);
    } catch (const ContractError& e) {
        throw ContractError(flag + ": " + e.what());
    }
}

void require_positive(const std::string& flag, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ContractError(flag + " must be positive and finite");
}

// Writes to --out when given, else to stdout.
template <typename Fn>
void emit(const std::string& path, std::ostream& out, Fn write) {
    if (path.empty()) {
        write(out);
        return;
    }
    std::ofstream f(path);
    if (!f) throw ContractError("--out: cannot write '" + path + "'");
    write(f);
}

void emit_gnuplot(const Common& c, const std::string& body, std::ostream& err) {
    if (!c.gnuplot) return;
    if (c.out.empty()) throw ContractError("--gnuplot needs --out");
    const std::string script = c.out + ".gp";
    std::ofstream f(script);
    if (!f) throw ContractError("--gnuplot: cannot write '" + script + "'");
    f << "set datafile separator ','\nset key autotitle columnhead\n" << body;
    err << "wrote " << script << '\n';
}

OuVariant parse_ou(const std::string& text) {
    if (text == "implicit") return OuVariant::implicit_euler;
    if (text == "midpoint") return OuVariant::midpoint;
    throw ContractError("--ou must be implicit or midpoint");
}

std::string gp_string(const std::string& s) { return "'" + s + "'"; }

struct CheckRow {
    std::string model;
    std::string check;
    double value;
    double limit;
};

std::vector<CheckRow> run_checks(const Model& model, int states, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double skew = 0.0, jac_tensor = 0.0, jac_fd = 0.0, pmap = 0.0;
    std::vector<double> cas(model.casimirs().size(), 0.0);
    const auto fd_structure = model.structure().without_tensor();
    const auto path = sample_path(seed, model.noise_count(), 1, 0.1);
    std::vector<double> dw(static_cast<std::size_t>(model.noise_count()));
    path.increments(0, dw);
    const StateMap one_step = [&](const State& y) { return step_splitting(model, 0.1, dw, y); };
    for (int s = 0; s < states; ++s) {
        const State y = model.random_state(rng);
        skew = std::max(skew, check_skew(model.structure(), y));
        jac_tensor = std::max(jac_tensor, check_jacobi(model.structure(), y, 1e-4));
        jac_fd = std::max(jac_fd, check_jacobi(fd_structure, y, 1e-4));
        const auto cs = model.casimirs();
        for (std::size_t i = 0; i < cs.size(); ++i) cas[i] = std::max(cas[i], check_casimir(cs[i], model.structure(), y));
        pmap = std::max(pmap, check_poisson_map(one_step, model.structure(), y, 1e-5));
    }
    std::vector<CheckRow> rows{{model.name(), "skew", skew, 1e-14},
                               {model.name(), "jacobi(tensor)", jac_tensor, 1e-12},
                               {model.name(), "jacobi(fd)", jac_fd, 1e-7}};
    const auto cs = model.casimirs();
    for (std::size_t i = 0; i < cs.size(); ++i) rows.push_back({model.name(), "casimir " + cs[i].name, cas[i], 1e-12});
    rows.push_back({model.name(), "poisson map", pmap, 1e-6});
    return rows;
}

}  // namespace

double parse_real(const std::string& text) {
    std::string t = text;
    t.erase(std::remove_if(t.begin(), t.end(), [](unsigned char ch) { return std::isspace(ch); }), t.end());
    if (t.empty()) throw ContractError("empty number");
    if (t.rfind("2^", 0) == 0) {
        const std::string e = t.substr(2);
        std::size_t used = 0;
        int k = 0;
        try {
            k = std::stoi(e, &used);
        } catch (const std::exception&) {
            throw ContractError("bad power of two '" + text + "'");
        }
        if (used != e.size()) throw ContractError("bad power of two '" + text + "'");
        return std::ldexp(1.0, k);
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw ContractError("not a number: '" + text + "'");
    }
    if (used != t.size()) throw ContractError("not a number: '" + text + "'");
    return v;
}

std::vector<double> parse_real_list(const std::string& text) {
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        if (a.rfind("2^", 0) != 0 || b.rfind("2^", 0) != 0) {
            throw ContractError("ranges must have the form 2^-a..2^-b");
        }
        const int ka = static_cast<int>(std::lround(std::log2(parse_real(a))));
        const int kb = static_cast<int>(std::lround(std::log2(parse_real(b))));
        std::vector<double> out;
        const int step = ka <= kb ? 1 : -1;
        for (int k = ka;; k += step) {
            out.push_back(std::ldexp(1.0, k));
            if (k == kb) break;
        }
        return out;
    }
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(item));
    if (out.empty()) throw ContractError("empty list");
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Explicit splitting stochastic Poisson integrators", "spi"};
    app.require_subcommand(1);
    // "-h" would clash with the step-size flag --h.
    app.set_help_flag("--help", "Print this help message and exit");

    Common c;
    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--model", c.model, "Preset: mb, rb or se");
        sub->add_option("--config", c.config, "JSON model config (overrides --model)");
        sub->add_option("--seed", c.seed, "Master seed");
        if (with_out) {
            sub->add_option("--out", c.out, "Output CSV (default: stdout)");
            sub->add_flag("--gnuplot", c.gnuplot, "Also write <out>.gp");
        }
    };

    std::string scheme = "splitting", h_text, t_text, traj_eps, ou = "implicit";
    std::int64_t stride = 1;
    auto* sim = app.add_subcommand("simulate", "Integrate one trajectory");
    add_common(sim, true);
    sim->add_option("--scheme", scheme, "splitting, splitting_reversed, weak2, em or midpoint");
    sim->add_option("--h", h_text, "Step size");
    sim->add_option("--T", t_text, "Final time");
    sim->add_option("--stride", stride, "Record every stride-th step");
    sim->add_option("--eps", traj_eps, "Use the asymptotic-preserving scheme at this eps (0 = limit SDE)");
    sim->add_option("--ou", ou, "OU discretisation with --eps: implicit or midpoint");

    std::string mode = "strong", h_list_text = "2^-5..2^-10", h_ref_text = "2^-14", phi = "sines";
    std::int64_t samples = 200;
    bool coupled = false;
    auto* conv = app.add_subcommand("convergence", "Strong or weak convergence study");
    add_common(conv, true);
    conv->add_option("--mode", mode, "strong or weak");
    conv->add_option("--scheme", scheme, "Scheme");
    conv->add_option("--h-list", h_list_text, "Step sizes, e.g. 2^-5..2^-10");
    conv->add_option("--h-ref", h_ref_text, "Reference step size");
    conv->add_option("--T", t_text, "Final time (default 1)");
    conv->add_option("--samples", samples, "Monte Carlo samples");
    conv->add_option("--workers", c.workers, "Worker threads");
    conv->add_option("--phi", phi, "Weak test function: sines or constant");
    conv->add_flag("--coupled", coupled, "Weak mode: reuse the reference path");

    auto* inv = app.add_subcommand("invariants", "Hamiltonian and Casimirs along one trajectory");
    add_common(inv, true);
    inv->add_option("--scheme", scheme, "Scheme");
    inv->add_option("--h", h_text, "Step size");
    inv->add_option("--T", t_text, "Final time");
    inv->add_option("--eps", traj_eps, "Use the asymptotic-preserving scheme at this eps (0 = limit SDE)");
    inv->add_option("--ou", ou, "OU discretisation with --eps: implicit or midpoint");

    std::string eps_text = "1e-2,1e-4,1e-6,1e-8", weak_h_list, weak_h_ref = "2^-12", weak_out;
    std::int64_t ap_samples = 100, weak_samples = 1000;
    auto* ap = app.add_subcommand("ap", "Asymptotic-preserving sweep over eps");
    add_common(ap, true);
    ap->add_option("--h", h_text, "Step size (default 1e-2)");
    ap->add_option("--T", t_text, "Final time (default 1)");
    ap->add_option("--eps", eps_text, "Comma-separated eps values, descending");
    ap->add_option("--samples", ap_samples, "Paths for the path-wise discrepancy");
    ap->add_option("--ou", ou, "OU discretisation: implicit or midpoint");
    ap->add_option("--workers", c.workers, "Worker threads");
    ap->add_option("--weak-h-list", weak_h_list, "Also compute weak errors per eps at these steps");
    ap->add_option("--weak-h-ref", weak_h_ref, "Reference step of the weak curves");
    ap->add_option("--weak-samples", weak_samples, "Samples of the weak curves");
    ap->add_option("--weak-out", weak_out, "CSV for the weak curves (default: stdout)");

    std::string check_model = "all";
    int check_states = 100;
    auto* chk = app.add_subcommand("checks", "Geometry predicates on random states");
    chk->add_option("--model", check_model, "mb, rb, se or all");
    chk->add_option("--states", check_states, "Random states per model");
    chk->add_option("--seed", c.seed, "Seed");

    // CLI11 consumes arguments from the back.
    std::vector<std::string> rev;
    if (args.size() > 1) rev.assign(args.rbegin(), args.rend() - 1);
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        err << app.help();
        return kValidationError;
    }

    try {
        if (*chk) {
            std::vector<std::string> names = check_model == "all" ? std::vector<std::string>{"mb", "rb", "se"}
                                                                  : std::vector<std::string>{check_model};
            if (check_states < 1) throw ContractError("--states must be positive");
            bool ok = true;
            out << std::left << std::setw(6) << "model" << std::setw(16) << "check" << std::setw(14) << "value"
                << std::setw(10) << "limit" << "result\n";
            for (const auto& name : names) {
                auto cfg = ModelConfig::preset(name);
                // Nonzero amplitudes on every noise so the Poisson-map check exercises all sub-flows.
                std::fill(cfg.sigma.begin(), cfg.sigma.end(), 1.0);
                const auto model = make_model(cfg);
                for (const auto& row : run_checks(*model, check_states, c.seed)) {
                    const bool pass = row.value <= row.limit;
                    ok = ok && pass;
                    out << std::setw(6) << row.model << std::setw(16) << row.check << std::setw(14)
                        << std::setprecision(3) << std::scientific << row.value << std::setw(10) << row.limit
                        << (pass ? "PASS" : "FAIL") << '\n';
                }
            }
            out << std::defaultfloat;
            return ok ? kOk : kNumericError;
        }

        const ModelConfig mc = load_model(c);
        const std::shared_ptr<const Model> model = make_model(mc);

        if (*sim || *inv) {
            const auto d = trajectory_defaults(mc.model);
            const double h = h_text.empty() ? d.h : flag_real("--h", h_text);
            const double T = t_text.empty() ? d.T : flag_real("--T", t_text);
            require_positive("--h", h);
            require_positive("--T", T);
            const SchemeId s = parse_scheme(scheme);
            const double ratio = T / h;
            if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) throw ContractError("--h must divide --T");
            const auto n = static_cast<std::int64_t>(std::llround(ratio));
            if (stride < 1 || n % stride != 0) throw ContractError("--stride must divide the step count");
            const auto path = sample_path(c.seed, model->noise_count(), n, h);
            Trajectory traj;
            if (!traj_eps.empty()) {
                if (s != SchemeId::splitting) throw ContractError("--eps only applies to the splitting scheme");
                const double eps = flag_real("--eps", traj_eps);
                if (!(eps >= 0.0)) throw ContractError("--eps must be nonnegative");
                traj = integrate_ap(*model, ApConfig{eps, parse_ou(ou)}, mc.y0, path, stride);
            } else {
                IntegrateOptions opts;
                opts.record_stride = stride;
                traj = integrate(s, *model, mc.y0, path, opts);
            }
            if (*inv) {
                const auto series = invariant_series(traj);
                emit(c.out, out, [&](std::ostream& o) { write_invariants_csv(o, series); });
                err << "max Casimir drift " << format_double(series.max_casimir_drift) << '\n';
                std::string plot = "set xlabel 't'\nplot";
                for (std::size_t i = 0; i < series.names.size(); ++i) {
                    plot += (i ? ", " : " ") + gp_string(c.out) + " using 1:" + std::to_string(i + 2) + " with lines";
                }
                emit_gnuplot(c, plot + "\n", err);
                return kOk;
            }
            emit(c.out, out, [&](std::ostream& o) { write_trajectory_csv(o, traj); });
            std::string plot = "set xlabel 't'\nplot";
            for (int i = 0; i < model->dim(); ++i) {
                plot += (i ? ", " : " ") + gp_string(c.out) + " using 1:" + std::to_string(i + 2) + " with lines";
            }
            emit_gnuplot(c, plot + "\n", err);
            return kOk;
        }

        if (*conv) {
            ConvergenceConfig cfg;
            cfg.model = model;
            cfg.scheme = parse_scheme(scheme);
            cfg.y0 = mc.y0;
            cfg.T = t_text.empty() ? 1.0 : flag_real("--T", t_text);
            cfg.h_list = flag_list("--h-list", h_list_text);
            cfg.h_ref = flag_real("--h-ref", h_ref_text);
            cfg.samples = samples;
            cfg.seed = c.seed;
            cfg.mode = parse_error_mode(mode);
            if (phi == "sines") {
                cfg.phi = TestFunction::sum_of_sines;
            } else if (phi == "constant") {
                cfg.phi = TestFunction::constant;
            } else {
                throw ContractError("--phi must be sines or constant");
            }
            cfg.coupled = coupled;
            cfg.workers = c.workers;
            const auto report = convergence_experiment(cfg);
            emit(c.out, out, [&](std::ostream& o) { write_convergence_csv(o, report); });
            (c.out.empty() ? err : out) << summarize(report);
            emit_gnuplot(c,
                         "set logscale xy\nset xlabel 'h'\nset ylabel 'error'\nplot " + gp_string(c.out) +
                             " using 4:6:7 with yerrorlines\n",
                         err);
            return kOk;
        }

        if (*ap) {
            ApSweepConfig cfg;
            cfg.model = model;
            cfg.y0 = mc.y0;
            cfg.h = h_text.empty() ? 1e-2 : flag_real("--h", h_text);
            cfg.T = t_text.empty() ? 1.0 : flag_real("--T", t_text);
            cfg.eps_list = flag_list("--eps", eps_text);
            cfg.seed = c.seed;
            cfg.samples = ap_samples;
            cfg.workers = c.workers;
            cfg.ou_variant = parse_ou(ou);
            if (!weak_h_list.empty()) {
                cfg.weak_h_list = flag_list("--weak-h-list", weak_h_list);
                cfg.weak_h_ref = flag_real("--weak-h-ref", weak_h_ref);
                cfg.weak_samples = weak_samples;
            }
            const auto report = ap_sweep(cfg);
            emit(c.out, out, [&](std::ostream& o) { write_ap_csv(o, report.pathwise); });
            if (!report.weak.empty()) emit(weak_out, out, [&](std::ostream& o) { write_ap_csv(o, report.weak); });
            emit_gnuplot(c,
                         "set logscale xy\nset xlabel 'epsilon'\nset ylabel 'discrepancy'\nplot " + gp_string(c.out) +
                             " using 1:3 with linespoints\n",
                         err);
            return kOk;
        }
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumericError;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kNumericError;
    }
    return kValidationError;
}

}  // namespace spi::cli
