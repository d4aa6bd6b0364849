#include "spi/integrators.hpp"

#include <array>
#include <cmath>
#include <string>

namespace spi {

namespace {

void require_step(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ContractError("step size must be positive and finite");
}

void require_increments(const Model& model, std::span<const double> dw) {
    if (static_cast<int>(dw.size()) != model.noise_count()) {
        throw ContractError("expected " + std::to_string(model.noise_count()) + " increments, got " +
                            std::to_string(dw.size()));
    }
}

struct Flow {
    FlowPartId part;
    double time;
};

// Replays a composition one flow at a time to name the part that broke.
[[noreturn]] void report_non_finite(const Model& model, std::span<const Flow> flows, State y) {
    for (const auto& f : flows) {
        model.apply_flow(f.part, f.time, y);
        if (!y.allFinite()) {
            throw NumericError("non-finite state after sub-flow " + f.part.label() + " of model " + model.name());
        }
    }
    throw NumericError("non-finite state in model " + model.name());
}

State compose(const Model& model, std::span<const Flow> flows, State y) {
    const State start = y;
    for (const auto& f : flows) model.apply_flow(f.part, f.time, y);
    if (!y.allFinite()) report_non_finite(model, flows, start);
    return y;
}

constexpr int kMaxFlows = 64;

struct FlowList {
    std::array<Flow, kMaxFlows> items{};
    int size = 0;
    void push(FlowPartId p, double t) { items[static_cast<std::size_t>(size++)] = {p, t}; }
    std::span<const Flow> view() const { return {items.data(), static_cast<std::size_t>(size)}; }
};

void push_stochastic(FlowList& list, const Model& model, std::span<const double> dw, bool ascending) {
    const int m = model.noise_count();
    for (int i = 0; i < m; ++i) {
        const int k = ascending ? i : m - 1 - i;
        list.push(FlowPartId::sto(k), model.sigma(k) * dw[static_cast<std::size_t>(k)]);
    }
}

void push_deterministic(FlowList& list, const Model& model, double h) {
    for (int k = 0; k < model.deterministic_parts(); ++k) list.push(FlowPartId::det(k), h);
}

void push_strang(FlowList& list, const Model& model, double time) {
    const int p = model.deterministic_parts();
    for (int k = 0; k < p - 1; ++k) list.push(FlowPartId::det(k), 0.5 * time);
    list.push(FlowPartId::det(p - 1), time);
    for (int k = p - 2; k >= 0; --k) list.push(FlowPartId::det(k), 0.5 * time);
}

}  // namespace

std::string to_string(SchemeId s) {
    switch (s) {
        case SchemeId::splitting: return "splitting";
        case SchemeId::splitting_reversed: return "splitting_reversed";
        case SchemeId::weak2: return "weak2";
        case SchemeId::euler_maruyama: return "em";
        case SchemeId::midpoint: return "midpoint";
    }
    return "unknown";
}

SchemeId parse_scheme(const std::string& name) {
    if (name == "splitting") return SchemeId::splitting;
    if (name == "splitting_reversed" || name == "reversed") return SchemeId::splitting_reversed;
    if (name == "weak2") return SchemeId::weak2;
    if (name == "em" || name == "euler_maruyama") return SchemeId::euler_maruyama;
    if (name == "midpoint") return SchemeId::midpoint;
    throw ContractError("unknown scheme '" + name + "'");
}

const std::vector<SchemeId>& all_schemes() {
    static const std::vector<SchemeId> v{SchemeId::splitting, SchemeId::splitting_reversed, SchemeId::weak2,
                                         SchemeId::euler_maruyama, SchemeId::midpoint};
    return v;
}

bool is_poisson_scheme(SchemeId s) {
    return s == SchemeId::splitting || s == SchemeId::splitting_reversed || s == SchemeId::weak2;
}

State step_splitting(const Model& model, double h, std::span<const double> dw, State y) {
    require_step(h);
    require_increments(model, dw);
    FlowList flows;
    push_stochastic(flows, model, dw, true);
    push_deterministic(flows, model, h);
    return compose(model, flows.view(), std::move(y));
}

State step_splitting_reversed(const Model& model, double h, std::span<const double> dw, State y) {
    require_step(h);
    require_increments(model, dw);
    FlowList flows;
    push_deterministic(flows, model, h);
    push_stochastic(flows, model, dw, true);
    return compose(model, flows.view(), std::move(y));
}

void strang_deterministic(const Model& model, double time, State& y) {
    FlowList flows;
    push_strang(flows, model, time);
    y = compose(model, flows.view(), y);
}

State step_weak2(const Model& model, double h, std::span<const double> dw, int gamma, State y) {
    require_step(h);
    require_increments(model, dw);
    if (gamma != 1 && gamma != -1) throw ContractError("weak2: gamma must be +1 or -1");
    FlowList flows;
    push_strang(flows, model, 0.5 * h);
    push_stochastic(flows, model, dw, gamma == 1);
    push_strang(flows, model, 0.5 * h);
    return compose(model, flows.view(), std::move(y));
}

State step_euler_maruyama(const Model& model, double h, std::span<const double> dw, State y) {
    if (!(h >= 0.0)) throw ContractError("step size must be nonnegative");
    require_increments(model, dw);
    State next = y + h * model.drift_ito(y);
    for (int k = 0; k < model.noise_count(); ++k) {
        const double w = dw[static_cast<std::size_t>(k)];
        if (w != 0.0) next += w * model.diffusion(k, y);
    }
    if (!next.allFinite()) throw NumericError("Euler-Maruyama produced a non-finite state");
    return next;
}

State step_midpoint(const Model& model, double h, std::span<const double> dw, State y,
                    const MidpointConfig& cfg) {
    require_step(h);
    require_increments(model, dw);
    if (!(cfg.tol > 0.0)) throw ContractError("midpoint tolerance must be positive");
    State next = y;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const State mid = 0.5 * (y + next);
        State candidate = y + h * model.drift_stratonovich(mid);
        for (int k = 0; k < model.noise_count(); ++k) {
            const double w = dw[static_cast<std::size_t>(k)];
            if (w != 0.0) candidate += w * model.diffusion(k, mid);
        }
        if (!candidate.allFinite()) throw SolverError("midpoint fixed-point iteration diverged");
        const double change = (candidate - next).cwiseAbs().maxCoeff();
        next = candidate;
        if (change <= cfg.tol) return next;
    }
    throw SolverError("midpoint fixed-point iteration did not converge in " + std::to_string(cfg.max_iter) +
                      " iterations");
}

State step(SchemeId scheme, const Model& model, const StepInputs& in, State y, const MidpointConfig& cfg) {
    switch (scheme) {
        case SchemeId::splitting: return step_splitting(model, in.h, in.dw, std::move(y));
        case SchemeId::splitting_reversed: return step_splitting_reversed(model, in.h, in.dw, std::move(y));
        case SchemeId::weak2: return step_weak2(model, in.h, in.dw, in.gamma, std::move(y));
        case SchemeId::euler_maruyama: return step_euler_maruyama(model, in.h, in.dw, std::move(y));
        case SchemeId::midpoint: return step_midpoint(model, in.h, in.dw, std::move(y), cfg);
    }
    throw ContractError("unknown scheme");
}

State advance(SchemeId scheme, const Model& model, const State& y0, const BrownianPath& path,
              std::vector<State>* record, std::int64_t stride, const MidpointConfig& cfg) {
    if (y0.size() != model.dim()) throw ContractError("initial state has the wrong dimension");
    if (path.noise_count() != model.noise_count()) {
        throw ContractError("path noise count does not match the model");
    }
    if (stride < 1 || path.steps() % stride != 0) throw ContractError("record stride must divide the step count");
    const double h = path.step_size();
    const int m = model.noise_count();
    std::array<double, kMaxDim> dw{};
    const std::span<double> dws(dw.data(), static_cast<std::size_t>(m));
    const double sqrt_h = std::sqrt(h);
    State y = y0;
    if (record) record->push_back(y);
    for (std::int64_t n = 0; n < path.steps(); ++n) {
        path.increments(n, dws);
        if (scheme == SchemeId::midpoint) {
            for (auto& w : dws) w = truncate_increment(w / sqrt_h, h);
        }
        try {
            y = step(scheme, model, StepInputs{h, dws, path.rademacher(n)}, std::move(y), cfg);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(n) + ": " + e.what());
        } catch (const SolverError& e) {
            throw SolverError("step " + std::to_string(n) + ": " + e.what());
        }
        if (record && (n + 1) % stride == 0) record->push_back(y);
    }
    return y;
}

Trajectory integrate(SchemeId scheme, const Model& model, const State& y0, const BrownianPath& path,
                     const IntegrateOptions& opts) {
    std::vector<State> states;
    states.reserve(static_cast<std::size_t>(path.steps() / opts.record_stride + 1));
    advance(scheme, model, y0, path, &states, opts.record_stride, opts.midpoint);
    Trajectory traj;
    traj.states = std::move(states);
    const double dt = path.step_size() * static_cast<double>(opts.record_stride);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        traj.times.push_back(static_cast<double>(i) * dt);
        if (opts.record_invariants) traj.invariants.push_back(model.invariants(traj.states[i]));
    }
    return traj;
}

}  // namespace spi
