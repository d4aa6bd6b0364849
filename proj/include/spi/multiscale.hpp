#pragma once

#include "spi/integrators.hpp"

#include <vector>

namespace spi {

enum class OuVariant { implicit_euler, midpoint };

struct ApConfig {
    /// eps = 0 selects the limiting splitting scheme exactly.
    double eps = 1.0;
    OuVariant ou_variant = OuVariant::implicit_euler;
};

/// Slow variable y and the Ornstein-Uhlenbeck drivers xi (units time^-1/2).
struct MultiscaleState {
    State y;
    std::vector<double> xi;

    static MultiscaleState start(const State& y0, int noise_count) {
        return {y0, std::vector<double>(static_cast<std::size_t>(noise_count), 0.0)};
    }
};

double ou_update(double xi, double h, double eps, double dw, OuVariant variant);

/// One asymptotic-preserving step: update every xi, then stochastic flows with
/// times sigma_k h xi_k / eps (or the averaged xi for the midpoint variant), then
/// deterministic flows.
MultiscaleState step_ap(const Model& model, double h, const ApConfig& cfg, MultiscaleState s,
                        std::span<const double> dw);

/// Runs step_ap over every increment of `path`; returns the final state.
MultiscaleState advance_ap(const Model& model, const ApConfig& cfg, const State& y0, const BrownianPath& path,
                           std::vector<State>* record = nullptr);

/// Full AP trajectory (every `stride`-th state, with invariants).  No resolution guard.
Trajectory integrate_ap(const Model& model, const ApConfig& cfg, const State& y0, const BrownianPath& path,
                        std::int64_t stride = 1);

/// Self-consistent reference for the random ODE at fixed eps: step_ap on a fine grid
/// that resolves the OU time scale.  Throws DomainError unless T/N_fine <= eps^2/10.
Trajectory integrate_multiscale_reference(const Model& model, const ApConfig& cfg, const State& y0, double T,
                                          std::int64_t n_fine, std::uint64_t seed);
Trajectory integrate_multiscale_reference(const Model& model, const ApConfig& cfg, const State& y0,
                                          const BrownianPath& path);

}  // namespace spi
