#include "spi/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace spi {

namespace {

// Salt separating the independent per-level streams of a weak experiment.
constexpr std::uint64_t kLevelSalt = 0x6a09e667f3bcc909ull;

std::int64_t steps_for(double T, double h, const char* what) {
    const double ratio = T / h;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(ratio - n) > 1e-9 * std::max(1.0, n)) {
        throw ContractError(std::string(what) + " = " + format_double(h) + " does not divide T = " + format_double(T));
    }
    return static_cast<std::int64_t>(n);
}

std::int64_t ratio_of(double h, double h_ref) {
    const double r = h / h_ref;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * n) {
        throw ContractError("h = " + format_double(h) + " is not a multiple of h_ref = " + format_double(h_ref));
    }
    return static_cast<std::int64_t>(n);
}

std::uint64_t level_seed(std::uint64_t master, std::size_t level, std::int64_t sample) {
    return derive_sample_seed(derive_sample_seed(master ^ kLevelSalt, level), static_cast<std::uint64_t>(sample));
}

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::int64_t count = 0;
};

// Two-pass, in index order: the result must not depend on the worker count.
template <typename Get>
Moments moments(std::int64_t n, const std::vector<char>& failed, Get get) {
    Moments m;
    double sum = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (failed[static_cast<std::size_t>(i)]) continue;
        sum += get(i);
        ++m.count;
    }
    if (m.count == 0) return m;
    m.mean = sum / static_cast<double>(m.count);
    double ss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (failed[static_cast<std::size_t>(i)]) continue;
        const double d = get(i) - m.mean;
        ss += d * d;
    }
    m.variance = m.count > 1 ? ss / static_cast<double>(m.count - 1) : 0.0;
    return m;
}

std::int64_t count_failures(const std::vector<char>& failed, std::int64_t samples) {
    const auto f = static_cast<std::int64_t>(std::count(failed.begin(), failed.end(), char{1}));
    if (f * 100 > samples) {
        throw SolverError(std::to_string(f) + " of " + std::to_string(samples) +
                          " samples failed (more than 1%); experiment aborted");
    }
    if (f == samples) throw SolverError("every sample failed");
    return f;
}

// RMS of per-sample values r_i with standard error by the delta method.
ErrorPoint rms_point(double h, const Moments& sq) {
    ErrorPoint p;
    p.h = h;
    p.error = std::sqrt(std::max(sq.mean, 0.0));
    const double se_sq = std::sqrt(sq.variance / static_cast<double>(sq.count));
    p.std_error = p.error > 0.0 ? se_sq / (2.0 * p.error) : 0.0;
    return p;
}

using Runner = std::function<State(const BrownianPath&)>;

struct WeakSetup {
    int noise_count = 0;
    double T = 1.0;
    std::vector<double> h_list;
    double h_ref = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    TestFunction phi = TestFunction::sum_of_sines;
    bool coupled = false;
    int workers = 1;
};

std::vector<ErrorPoint> weak_core(const WeakSetup& s, const Runner& run, std::int64_t* failures) {
    const std::size_t levels = s.h_list.size();
    const std::int64_t n_ref = steps_for(s.T, s.h_ref, "h_ref");
    std::vector<std::int64_t> factor(levels), n_h(levels);
    for (std::size_t j = 0; j < levels; ++j) {
        n_h[j] = steps_for(s.T, s.h_list[j], "h");
        factor[j] = s.coupled ? ratio_of(s.h_list[j], s.h_ref) : 1;
    }
    const std::size_t stride = levels + 1;
    std::vector<double> vals(static_cast<std::size_t>(s.samples) * stride, 0.0);
    std::vector<char> failed(static_cast<std::size_t>(s.samples), 0);

    parallel_for(s.samples, s.workers, [&](std::int64_t i) {
        double* row = vals.data() + static_cast<std::size_t>(i) * stride;
        try {
            if (s.coupled) {
                const auto fine = sample_path(derive_sample_seed(s.seed, static_cast<std::uint64_t>(i)), s.noise_count,
                                              n_ref, s.h_ref);
                row[levels] = evaluate_test_function(s.phi, run(fine));
                for (std::size_t j = 0; j < levels; ++j) {
                    row[j] = evaluate_test_function(s.phi, run(coarsen(fine, factor[j])));
                }
            } else {
                row[levels] = evaluate_test_function(
                    s.phi, run(sample_path(level_seed(s.seed, levels, i), s.noise_count, n_ref, s.h_ref)));
                for (std::size_t j = 0; j < levels; ++j) {
                    row[j] = evaluate_test_function(
                        s.phi, run(sample_path(level_seed(s.seed, j, i), s.noise_count, n_h[j], s.h_list[j])));
                }
            }
        } catch (const SolverError&) {
            failed[static_cast<std::size_t>(i)] = 1;
        } catch (const NumericError&) {
            failed[static_cast<std::size_t>(i)] = 1;
        }
    });
    *failures = count_failures(failed, s.samples);

    auto at = [&](std::int64_t i, std::size_t j) { return vals[static_cast<std::size_t>(i) * stride + j]; };
    const Moments ref = moments(s.samples, failed, [&](std::int64_t i) { return at(i, levels); });
    std::vector<ErrorPoint> points;
    for (std::size_t j = 0; j < levels; ++j) {
        ErrorPoint p;
        p.h = s.h_list[j];
        if (s.coupled) {
            const Moments d = moments(s.samples, failed, [&](std::int64_t i) { return at(i, j) - at(i, levels); });
            p.error = std::abs(d.mean);
            p.std_error = std::sqrt(d.variance / static_cast<double>(d.count));
        } else {
            const Moments m = moments(s.samples, failed, [&](std::int64_t i) { return at(i, j); });
            p.error = std::abs(m.mean - ref.mean);
            p.std_error = std::sqrt(m.variance / static_cast<double>(m.count) +
                                    ref.variance / static_cast<double>(ref.count));
        }
        points.push_back(p);
    }
    return points;
}

void finish_report(ErrorReport& r) {
    r.fit = fit_above_noise_floor(r.points, &r.fitted_h);
}

}  // namespace

std::string to_string(ErrorMode m) { return m == ErrorMode::strong ? "strong" : "weak"; }

ErrorMode parse_error_mode(const std::string& s) {
    if (s == "strong") return ErrorMode::strong;
    if (s == "weak") return ErrorMode::weak;
    throw ContractError("unknown mode '" + s + "' (expected strong or weak)");
}

double evaluate_test_function(TestFunction phi, const State& y) {
    if (phi == TestFunction::constant) return 1.0;
    double s = 0.0;
    for (int i = 0; i < y.size(); ++i) s += std::sin(2.0 * std::numbers::pi * y[i]);
    return s;
}

void ConvergenceConfig::validate() const {
    if (!model) throw ContractError("convergence: model is required");
    if (y0.size() != model->dim()) throw ContractError("convergence: y0 has the wrong dimension");
    if (!(T > 0.0)) throw ContractError("convergence: T must be positive");
    if (h_list.empty()) throw ContractError("convergence: h_list is empty");
    if (!(h_ref > 0.0)) throw ContractError("convergence: h_ref must be positive");
    if (samples < 2) throw ContractError("convergence: samples must be at least 2");
    if (workers < 1) throw ContractError("convergence: workers must be at least 1");
    steps_for(T, h_ref, "h_ref");
    for (double h : h_list) {
        if (!(h > 0.0)) throw ContractError("convergence: every h must be positive");
        ratio_of(h, h_ref);
        steps_for(T, h, "h");
    }
    if (scheme == SchemeId::midpoint && h_ref >= 1.0) {
        throw ContractError("convergence: midpoint truncation needs h < 1");
    }
}

RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& errors) {
    if (h.size() != errors.size()) throw ContractError("fit_rate: h and errors differ in length");
    if (h.size() < 2) throw ContractError("fit_rate: need at least two points");
    const auto n = static_cast<double>(h.size());
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0) || !(errors[i] > 0.0)) throw DomainError("fit_rate: values must be positive");
        sx += std::log(h[i]);
        sy += std::log(errors[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx, dy = std::log(errors[i]) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw DomainError("fit_rate: all step sizes are equal");
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

std::optional<RateFit> fit_above_noise_floor(const std::vector<ErrorPoint>& points, std::vector<double>* used,
                                             double factor) {
    std::vector<double> h, e;
    for (const auto& p : points) {
        if (p.error > 0.0 && p.error > factor * p.std_error) {
            h.push_back(p.h);
            e.push_back(p.error);
        }
    }
    if (used) *used = h;
    if (h.size() < 2) return std::nullopt;
    return fit_rate(h, e);
}

ErrorReport strong_error_experiment(const ConvergenceConfig& cfg) {
    cfg.validate();
    const Model& model = *cfg.model;
    const int m = model.noise_count();
    const std::size_t levels = cfg.h_list.size();
    const std::int64_t n_ref = steps_for(cfg.T, cfg.h_ref, "h_ref");
    std::vector<std::int64_t> factor(levels);
    std::int64_t record_stride = 0;
    for (std::size_t j = 0; j < levels; ++j) {
        factor[j] = ratio_of(cfg.h_list[j], cfg.h_ref);
        record_stride = j == 0 ? factor[j] : std::gcd(record_stride, factor[j]);
    }

    std::vector<double> sq(static_cast<std::size_t>(cfg.samples) * levels, 0.0);
    std::vector<char> failed(static_cast<std::size_t>(cfg.samples), 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::int64_t i) {
        try {
            const auto fine = sample_path(derive_sample_seed(cfg.seed, static_cast<std::uint64_t>(i)), m, n_ref,
                                          cfg.h_ref);
            std::vector<State> ref;
            ref.reserve(static_cast<std::size_t>(n_ref / record_stride + 1));
            advance(cfg.scheme, model, cfg.y0, fine, &ref, record_stride, cfg.midpoint);
            std::vector<State> coarse;
            for (std::size_t j = 0; j < levels; ++j) {
                coarse.clear();
                advance(cfg.scheme, model, cfg.y0, coarsen(fine, factor[j]), &coarse, 1, cfg.midpoint);
                const auto skip = static_cast<std::size_t>(factor[j] / record_stride);
                double worst = 0.0;
                for (std::size_t n = 0; n < coarse.size(); ++n) {
                    worst = std::max(worst, (ref[n * skip] - coarse[n]).squaredNorm());
                }
                sq[static_cast<std::size_t>(i) * levels + j] = worst;
            }
        } catch (const SolverError&) {
            failed[static_cast<std::size_t>(i)] = 1;
        } catch (const NumericError&) {
            failed[static_cast<std::size_t>(i)] = 1;
        }
    });

    ErrorReport r;
    r.model = model.name();
    r.scheme = to_string(cfg.scheme);
    r.mode = ErrorMode::strong;
    r.samples = cfg.samples;
    r.failures = count_failures(failed, cfg.samples);
    for (std::size_t j = 0; j < levels; ++j) {
        const Moments mo = moments(cfg.samples, failed,
                                   [&](std::int64_t i) { return sq[static_cast<std::size_t>(i) * levels + j]; });
        r.points.push_back(rms_point(cfg.h_list[j], mo));
    }
    finish_report(r);
    return r;
}

ErrorReport weak_error_experiment(const ConvergenceConfig& cfg) {
    cfg.validate();
    const Model& model = *cfg.model;
    WeakSetup s{model.noise_count(), cfg.T,   cfg.h_list, cfg.h_ref, cfg.samples,
                cfg.seed,           cfg.phi, cfg.coupled, cfg.workers};
    const Runner run = [&](const BrownianPath& p) {
        return advance(cfg.scheme, model, cfg.y0, p, nullptr, 1, cfg.midpoint);
    };
    ErrorReport r;
    r.model = model.name();
    r.scheme = to_string(cfg.scheme);
    r.mode = ErrorMode::weak;
    r.samples = cfg.samples;
    r.points = weak_core(s, run, &r.failures);
    finish_report(r);
    return r;
}

ErrorReport convergence_experiment(const ConvergenceConfig& cfg) {
    return cfg.mode == ErrorMode::strong ? strong_error_experiment(cfg) : weak_error_experiment(cfg);
}

InvariantSeries invariant_drift_experiment(const Model& model, SchemeId scheme, const State& y0, double T, double h,
                                           std::uint64_t seed, const MidpointConfig& midpoint) {
    if (!(h > 0.0) || !(T > 0.0)) throw ContractError("invariants: h and T must be positive");
    const std::int64_t n = steps_for(T, h, "h");
    IntegrateOptions opts;
    opts.midpoint = midpoint;
    return invariant_series(integrate(scheme, model, y0, sample_path(seed, model.noise_count(), n, h), opts));
}

InvariantSeries invariant_series(const Trajectory& traj) {
    if (traj.invariants.empty()) throw ContractError("invariant_series: trajectory has no recorded invariants");
    InvariantSeries s;
    for (const auto& [name, value] : traj.invariants.front()) s.names.push_back(name);
    s.times = traj.times;
    for (const auto& inv : traj.invariants) {
        std::vector<double> row;
        for (const auto& [name, value] : inv) row.push_back(value);
        s.values.push_back(std::move(row));
    }
    // Column 0 is the Hamiltonian; the rest are Casimirs.
    for (const auto& row : s.values) {
        for (std::size_t c = 1; c < row.size(); ++c) {
            s.max_casimir_drift = std::max(s.max_casimir_drift, std::abs(row[c] - s.values.front()[c]));
        }
    }
    return s;
}

void ApSweepConfig::validate() const {
    if (!model) throw ContractError("ap: model is required");
    if (y0.size() != model->dim()) throw ContractError("ap: y0 has the wrong dimension");
    if (!(h > 0.0) || !(T > 0.0)) throw ContractError("ap: h and T must be positive");
    steps_for(T, h, "h");
    if (eps_list.empty()) throw ContractError("ap: eps list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] >= 0.0)) throw ContractError("ap: every eps must be nonnegative");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ContractError("ap: eps list must be sorted descending");
    }
    if (samples < 1 || workers < 1) throw ContractError("ap: samples and workers must be positive");
    if (!weak_h_list.empty()) {
        if (weak_samples < 2) throw ContractError("ap: weak samples must be at least 2");
        steps_for(T, weak_h_ref, "h_ref");
        for (double hw : weak_h_list) steps_for(T, hw, "h");
    }
}

ApReport ap_sweep(const ApSweepConfig& cfg) {
    cfg.validate();
    const Model& model = *cfg.model;
    const int m = model.noise_count();
    const std::int64_t n = steps_for(cfg.T, cfg.h, "h");
    const std::size_t ne = cfg.eps_list.size();

    std::vector<double> sq(static_cast<std::size_t>(cfg.samples) * ne, 0.0);
    std::vector<char> failed(static_cast<std::size_t>(cfg.samples), 0);
    parallel_for(cfg.samples, cfg.workers, [&](std::int64_t i) {
        const auto path = sample_path(derive_sample_seed(cfg.seed, static_cast<std::uint64_t>(i)), m, n, cfg.h);
        const State limit = advance(SchemeId::splitting, model, cfg.y0, path);
        for (std::size_t e = 0; e < ne; ++e) {
            const State y = advance_ap(model, ApConfig{cfg.eps_list[e], cfg.ou_variant}, cfg.y0, path).y;
            sq[static_cast<std::size_t>(i) * ne + e] = (y - limit).squaredNorm();
        }
    });
    ApReport r;
    r.model = model.name();
    for (std::size_t e = 0; e < ne; ++e) {
        const Moments mo =
            moments(cfg.samples, failed, [&](std::int64_t i) { return sq[static_cast<std::size_t>(i) * ne + e]; });
        const ErrorPoint p = rms_point(cfg.h, mo);
        r.pathwise.push_back({cfg.eps_list[e], p.h, p.error, p.std_error});
    }

    if (!cfg.weak_h_list.empty()) {
        WeakSetup s{m, cfg.T, cfg.weak_h_list, cfg.weak_h_ref, cfg.weak_samples, cfg.seed, TestFunction::sum_of_sines,
                    false, cfg.workers};
        for (double eps : cfg.eps_list) {
            const ApConfig ap{eps, cfg.ou_variant};
            const Runner run = [&](const BrownianPath& p) { return advance_ap(model, ap, cfg.y0, p).y; };
            std::int64_t failures = 0;
            for (const auto& p : weak_core(s, run, &failures)) r.weak.push_back({eps, p.h, p.error, p.std_error});
        }
    }
    return r;
}

void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t)>& fn) {
    if (workers < 1) throw ContractError("workers must be at least 1");
    if (count <= 0) return;
    if (workers == 1 || count == 1) {
        for (std::int64_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::int64_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                const std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
    };
    const int n = static_cast<int>(std::min<std::int64_t>(workers, count));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), res.ptr};
}

void write_convergence_csv(std::ostream& out, const ErrorReport& report) {
    out << "model,scheme,mode,h,samples,error,std_error\n";
    for (const auto& p : report.points) {
        out << report.model << ',' << report.scheme << ',' << to_string(report.mode) << ',' << format_double(p.h) << ','
            << report.samples - report.failures << ',' << format_double(p.error) << ',' << format_double(p.std_error)
            << '\n';
    }
}

void write_invariants_csv(std::ostream& out, const InvariantSeries& series) {
    out << 't';
    for (const auto& name : series.names) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        out << format_double(series.times[i]);
        for (double v : series.values[i]) out << ',' << format_double(v);
        out << '\n';
    }
}

void write_ap_csv(std::ostream& out, const std::vector<ApRow>& rows) {
    out << "epsilon,h,error,std_error\n";
    for (const auto& r : rows) {
        out << format_double(r.eps) << ',' << format_double(r.h) << ',' << format_double(r.error) << ','
            << format_double(r.std_error) << '\n';
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    if (traj.states.empty()) return;
    out << 't';
    for (int i = 0; i < traj.states.front().size(); ++i) out << ",y" << i + 1;
    if (!traj.invariants.empty()) {
        for (const auto& [name, value] : traj.invariants.front()) out << ',' << name;
    }
    out << '\n';
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
        out << format_double(traj.times[n]);
        for (int i = 0; i < traj.states[n].size(); ++i) out << ',' << format_double(traj.states[n][i]);
        if (n < traj.invariants.size()) {
            for (const auto& [name, value] : traj.invariants[n]) out << ',' << format_double(value);
        }
        out << '\n';
    }
}

std::string summarize(const ErrorReport& report) {
    std::ostringstream s;
    s << report.model << ' ' << report.scheme << ' ' << to_string(report.mode) << ": " << report.samples
      << " samples, " << report.failures << " failed\n";
    for (const auto& p : report.points) {
        s << "  h=" << format_double(p.h) << "  error=" << format_double(p.error)
          << "  std_error=" << format_double(p.std_error) << '\n';
    }
    if (report.fit) {
        s << "slope=" << format_double(report.fit->slope) << " intercept=" << format_double(report.fit->intercept)
          << " r2=" << format_double(report.fit->r2) << " points=" << report.fitted_h.size() << '\n';
    } else {
        s << "slope=nan (fewer than two points above the noise floor)\n";
    }
    return s.str();
}

}  // namespace spi
