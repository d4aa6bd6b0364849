#pragma once

#include "spi/integrators.hpp"
#include "spi/multiscale.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace spi {

enum class ErrorMode { strong, weak };
enum class TestFunction { sum_of_sines, constant };

std::string to_string(ErrorMode m);
ErrorMode parse_error_mode(const std::string& s);

/// phi(y) = sum_i sin(2 pi y_i), or 1.
double evaluate_test_function(TestFunction phi, const State& y);

struct ConvergenceConfig {
    std::shared_ptr<const Model> model;
    SchemeId scheme = SchemeId::splitting;
    State y0;
    double T = 1.0;
    std::vector<double> h_list;
    double h_ref = 0x1p-14;
    std::int64_t samples = 200;
    std::uint64_t seed = 1;
    ErrorMode mode = ErrorMode::strong;
    TestFunction phi = TestFunction::sum_of_sines;
    /// Weak mode only: drive every h from the reference path instead of fresh paths.
    bool coupled = false;
    int workers = 1;
    MidpointConfig midpoint;

    /// Throws ContractError naming the offending field.
    void validate() const;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares on (ln h, ln e).  Nonpositive entries raise DomainError.
RateFit fit_rate(const std::vector<double>& h, const std::vector<double>& errors);

struct ErrorPoint {
    double h = 0.0;
    double error = 0.0;
    double std_error = 0.0;
};

struct ErrorReport {
    std::string model;
    std::string scheme;
    ErrorMode mode = ErrorMode::strong;
    std::int64_t samples = 0;
    std::int64_t failures = 0;
    std::vector<ErrorPoint> points;
    /// Fit over the points above the noise floor (error > 3 std_error); empty if fewer than two.
    std::optional<RateFit> fit;
    std::vector<double> fitted_h;
};

/// Keeps points with error > factor * std_error and fits them.
std::optional<RateFit> fit_above_noise_floor(const std::vector<ErrorPoint>& points, std::vector<double>* used = nullptr,
                                             double factor = 3.0);

ErrorReport strong_error_experiment(const ConvergenceConfig& cfg);
ErrorReport weak_error_experiment(const ConvergenceConfig& cfg);
ErrorReport convergence_experiment(const ConvergenceConfig& cfg);

struct InvariantSeries {
    std::vector<std::string> names;  // "H", then Casimir names
    std::vector<double> times;
    std::vector<std::vector<double>> values;  // one row per time, aligned with names
    double max_casimir_drift = 0.0;
};

/// Tabulates the invariants recorded along `traj`.
InvariantSeries invariant_series(const Trajectory& traj);

InvariantSeries invariant_drift_experiment(const Model& model, SchemeId scheme, const State& y0, double T, double h,
                                           std::uint64_t seed, const MidpointConfig& midpoint = {});

struct ApSweepConfig {
    std::shared_ptr<const Model> model;
    State y0;
    double h = 1e-2;
    double T = 1.0;
    std::vector<double> eps_list{1e-2, 1e-4, 1e-6, 1e-8};
    std::uint64_t seed = 1;
    std::int64_t samples = 100;
    OuVariant ou_variant = OuVariant::implicit_euler;
    int workers = 1;
    /// Optional weak-error-vs-h curves per eps; skipped when empty.
    std::vector<double> weak_h_list;
    double weak_h_ref = 0x1p-12;
    std::int64_t weak_samples = 1000;

    void validate() const;
};

struct ApRow {
    double eps = 0.0;
    double h = 0.0;
    double error = 0.0;
    double std_error = 0.0;
};

struct ApReport {
    std::string model;
    /// RMS over samples of |y^{eps,[N]} - y^{[N]}| with shared increments.
    std::vector<ApRow> pathwise;
    /// Weak error of the AP scheme against itself at weak_h_ref, per eps and h.
    std::vector<ApRow> weak;
};

ApReport ap_sweep(const ApSweepConfig& cfg);

/// Runs fn(i) for i in [0, count) on `workers` threads; fn must only touch slot i.
void parallel_for(std::int64_t count, int workers, const std::function<void(std::int64_t)>& fn);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

void write_convergence_csv(std::ostream& out, const ErrorReport& report);
void write_invariants_csv(std::ostream& out, const InvariantSeries& series);
void write_ap_csv(std::ostream& out, const std::vector<ApRow>& rows);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

std::string summarize(const ErrorReport& report);

}  // namespace spi
