#pragma once

#include "spi/models.hpp"
#include "spi/noise.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spi {

enum class SchemeId { splitting, splitting_reversed, weak2, euler_maruyama, midpoint };

std::string to_string(SchemeId s);
SchemeId parse_scheme(const std::string& name);
const std::vector<SchemeId>& all_schemes();
/// True for the schemes built only from exact sub-flows.
bool is_poisson_scheme(SchemeId s);

struct MidpointConfig {
    double tol = 1e-12;
    int max_iter = 100;
};

/// Stochastic flows (k = 1..m, time sigma_k dW_k) then deterministic flows (k = 1..p, time h).
State step_splitting(const Model& model, double h, std::span<const double> dw, State y);
/// Deterministic flows first, then stochastic flows.
State step_splitting_reversed(const Model& model, double h, std::span<const double> dw, State y);
/// Strang(h/2) o Lie-Trotter stochastic (ascending for gamma = 1, descending for -1) o Strang(h/2).
State step_weak2(const Model& model, double h, std::span<const double> dw, int gamma, State y);
/// Euler-Maruyama on the Ito form.
State step_euler_maruyama(const Model& model, double h, std::span<const double> dw, State y);
/// Stochastic midpoint rule solved by fixed-point iteration; dw must be truncated already.
State step_midpoint(const Model& model, double h, std::span<const double> dw, State y,
                    const MidpointConfig& cfg = {});

/// Palindromic deterministic composition with total time `time`:
/// H_1(time/2) .. H_{p-1}(time/2) H_p(time) H_{p-1}(time/2) .. H_1(time/2).
void strang_deterministic(const Model& model, double time, State& y);

struct StepInputs {
    double h = 0.0;
    std::span<const double> dw;
    int gamma = 1;
};

/// Uniform one-step entry point.  For the midpoint scheme dw must already be truncated.
State step(SchemeId scheme, const Model& model, const StepInputs& in, State y,
           const MidpointConfig& cfg = {});

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::vector<NamedValues> invariants;
};

struct IntegrateOptions {
    std::int64_t record_stride = 1;
    bool record_invariants = true;
    MidpointConfig midpoint;
};

/// Runs `scheme` over every increment of `path` (h = path.step_size()).
/// The midpoint scheme truncates each increment at the path's resolution.
Trajectory integrate(SchemeId scheme, const Model& model, const State& y0, const BrownianPath& path,
                     const IntegrateOptions& opts = {});

/// Final state only, recording every `stride`-th state into `record` when non-null.
State advance(SchemeId scheme, const Model& model, const State& y0, const BrownianPath& path,
              std::vector<State>* record = nullptr, std::int64_t stride = 1, const MidpointConfig& cfg = {});

}  // namespace spi
