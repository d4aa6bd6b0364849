#include "spi/multiscale.hpp"

#include <array>
#include <cmath>
#include <string>

namespace spi {

double ou_update(double xi, double h, double eps, double dw, OuVariant variant) {
    if (!(h > 0.0)) throw ContractError("ou_update: h must be positive");
    if (!(eps > 0.0)) throw ContractError("ou_update: eps must be positive");
    const double r = h / (eps * eps);
    if (variant == OuVariant::implicit_euler) return (xi + dw / eps) / (1.0 + r);
    return ((1.0 - 0.5 * r) * xi + dw / eps) / (1.0 + 0.5 * r);
}

MultiscaleState step_ap(const Model& model, double h, const ApConfig& cfg, MultiscaleState s,
                        std::span<const double> dw) {
    if (!(cfg.eps >= 0.0)) throw ContractError("step_ap: eps must be nonnegative");
    if (static_cast<int>(s.xi.size()) != model.noise_count()) {
        throw ContractError("step_ap: xi has the wrong length");
    }
    if (cfg.eps == 0.0) {
        s.y = step_splitting(model, h, dw, std::move(s.y));
        return s;
    }
    if (!(h > 0.0)) throw ContractError("step_ap: h must be positive");
    if (static_cast<int>(dw.size()) != model.noise_count()) throw ContractError("step_ap: wrong increment count");
    // OU flow times; step_splitting scales each by sigma_k.
    std::array<double, kMaxDim> times{};
    const int m = model.noise_count();
    for (int k = 0; k < m; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double old = s.xi[i];
        s.xi[i] = ou_update(old, h, cfg.eps, dw[i], cfg.ou_variant);
        const double xi_eff = cfg.ou_variant == OuVariant::implicit_euler ? s.xi[i] : 0.5 * (old + s.xi[i]);
        times[i] = h * xi_eff / cfg.eps;
    }
    s.y = step_splitting(model, h, std::span<const double>(times.data(), static_cast<std::size_t>(m)),
                         std::move(s.y));
    return s;
}

MultiscaleState advance_ap(const Model& model, const ApConfig& cfg, const State& y0, const BrownianPath& path,
                           std::vector<State>* record) {
    if (path.noise_count() != model.noise_count()) throw ContractError("path noise count does not match the model");
    MultiscaleState s = MultiscaleState::start(y0, model.noise_count());
    std::array<double, kMaxDim> dw{};
    const std::span<double> dws(dw.data(), static_cast<std::size_t>(model.noise_count()));
    if (record) record->push_back(s.y);
    for (std::int64_t n = 0; n < path.steps(); ++n) {
        path.increments(n, dws);
        try {
            s = step_ap(model, path.step_size(), cfg, std::move(s), dws);
        } catch (const NumericError& e) {
            throw NumericError("step " + std::to_string(n) + ": " + e.what());
        }
        if (record) record->push_back(s.y);
    }
    return s;
}

Trajectory integrate_ap(const Model& model, const ApConfig& cfg, const State& y0, const BrownianPath& path,
                        std::int64_t stride) {
    if (stride < 1 || path.steps() % stride != 0) throw ContractError("integrate_ap: stride must divide the step count");
    std::vector<State> all;
    advance_ap(model, cfg, y0, path, &all);
    Trajectory traj;
    for (std::size_t i = 0; i < all.size(); i += static_cast<std::size_t>(stride)) {
        traj.times.push_back(static_cast<double>(i) * path.step_size());
        traj.invariants.push_back(model.invariants(all[i]));
        traj.states.push_back(std::move(all[i]));
    }
    return traj;
}

Trajectory integrate_multiscale_reference(const Model& model, const ApConfig& cfg, const State& y0,
                                          const BrownianPath& path) {
    const double h = path.step_size();
    if (!(cfg.eps > 0.0)) throw DomainError("multiscale reference needs eps > 0");
    if (h > cfg.eps * cfg.eps / 10.0) {
        throw DomainError("multiscale reference: fine step " + std::to_string(h) +
                          " does not resolve the OU time scale (need h <= eps^2/10 = " +
                          std::to_string(cfg.eps * cfg.eps / 10.0) + ")");
    }
    return integrate_ap(model, cfg, y0, path);
}

Trajectory integrate_multiscale_reference(const Model& model, const ApConfig& cfg, const State& y0, double T,
                                          std::int64_t n_fine, std::uint64_t seed) {
    if (!(T > 0.0) || n_fine < 1) throw ContractError("multiscale reference: need T > 0 and N_fine >= 1");
    const double h = T / static_cast<double>(n_fine);
    if (!(cfg.eps > 0.0) || h > cfg.eps * cfg.eps / 10.0) {
        // Check before drawing a path that may be huge.
        throw DomainError("multiscale reference: h_fine = " + std::to_string(h) + " exceeds eps^2/10");
    }
    return integrate_multiscale_reference(model, cfg, y0, sample_path(seed, model.noise_count(), n_fine, h));
}

}  // namespace spi
