#pragma once

#include "spi/geometry.hpp"
#include "spi/types.hpp"

#include <array>
#include <complex>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace spi {

enum class FlowKind { deterministic, stochastic };

/// Which split Hamiltonian a sub-flow belongs to.  Indices are zero-based:
/// deterministic in [0, p), stochastic in [0, m).
struct FlowPartId {
    FlowKind kind = FlowKind::deterministic;
    int index = 0;

    static FlowPartId det(int k) { return {FlowKind::deterministic, k}; }
    static FlowPartId sto(int k) { return {FlowKind::stochastic, k}; }
    std::string label() const;
};

/// H(y) = 1/2 y^T G y + c^T y.  Every split Hamiltonian of the shipped models has this form.
struct QuadraticForm {
    Matrix hessian;
    State linear;

    double value(const State& y) const { return 0.5 * y.dot(hessian * y) + linear.dot(y); }
    State gradient(const State& y) const { return hessian * y + linear; }
};

using NamedValues = std::vector<std::pair<std::string, double>>;

/**
 * A stochastic Lie-Poisson system
 *
 *   dy = B(y) grad H(y) dt + sum_k sigma_k B(y) grad Hhat_k(y) o dW_k
 *
 * with H split into p parts and every sub-flow available in closed form.
 * Models are immutable after construction.
 */
class Model {
public:
    virtual ~Model() = default;

    virtual std::string name() const = 0;
    virtual std::unique_ptr<Model> clone() const = 0;

    int dim() const { return dim_; }
    int deterministic_parts() const { return static_cast<int>(det_.size()); }
    int noise_count() const { return static_cast<int>(noise_.size()); }
    virtual std::string noise_label(int k) const { return "W" + std::to_string(k + 1); }

    const std::vector<double>& sigmas() const { return sigma_; }
    double sigma(int k) const;

    const StructureMatrix& structure() const { return structure_; }
    Matrix structure_at(const State& y) const;

    double hamiltonian(const State& y) const;
    State hamiltonian_gradient(const State& y) const;
    const QuadraticForm& form(FlowPartId part) const;

    /// Exact sub-flow for signed flow time t, in place.  For stochastic parts the
    /// caller passes t = sigma_k * dW_k.
    virtual void apply_flow(FlowPartId part, double t, State& y) const = 0;
    State flow(FlowPartId part, double t, const State& y) const;
    HamiltonianPart part(FlowPartId part) const;

    virtual std::vector<CasimirFn> casimirs() const = 0;

    /// B(y) grad H(y).
    State drift_stratonovich(const State& y) const;
    /// sigma_k B(y) grad Hhat_k(y).
    State diffusion(int k, const State& y) const;
    /// Analytic Jacobian of diffusion(k, .) at y.
    Matrix diffusion_jacobian(int k, const State& y) const;
    /// Stratonovich drift plus 1/2 sum_k Dg_k g_k.
    State drift_ito(const State& y) const;

    /// Hamiltonian value followed by every Casimir.
    NamedValues invariants(const State& y) const;

    virtual State random_state(std::mt19937_64& rng) const { return spi::random_state(dim_, rng); }
    virtual State default_initial_state() const = 0;

protected:
    Model(int dim, std::vector<Matrix> tensor, std::vector<QuadraticForm> det,
          std::vector<QuadraticForm> noise, std::vector<double> sigma);

    void check_part(FlowPartId part) const;

private:
    int dim_;
    StructureMatrix structure_;
    std::vector<QuadraticForm> det_;
    std::vector<QuadraticForm> noise_;
    std::vector<double> sigma_;
};

/// Stochastic Maxwell-Bloch: noise slot 0 drives Hhat_1 = y1^2/2 (label W1),
/// slot 1 drives Hhat_3 = y3 (label W3).
class MaxwellBlochModel final : public Model {
public:
    MaxwellBlochModel(double sigma1, double sigma3);

    std::string name() const override { return "mb"; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<MaxwellBlochModel>(*this); }
    std::string noise_label(int k) const override { return k == 0 ? "W1" : "W3"; }
    void apply_flow(FlowPartId part, double t, State& y) const override;
    std::vector<CasimirFn> casimirs() const override;
    State default_initial_state() const override;
};

class RigidBodyModel final : public Model {
public:
    RigidBodyModel(std::array<double, 3> inertia, std::array<double, 3> noise_inertia,
                   std::array<double, 3> sigma = {1.0, 1.0, 1.0});

    std::string name() const override { return "rb"; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<RigidBodyModel>(*this); }
    void apply_flow(FlowPartId part, double t, State& y) const override;
    std::vector<CasimirFn> casimirs() const override;
    State default_initial_state() const override;

    const std::array<double, 3>& inertia() const { return inertia_; }
    const std::array<double, 3>& noise_inertia() const { return noise_inertia_; }

private:
    std::array<double, 3> inertia_;
    std::array<double, 3> noise_inertia_;
};

/**
 * Stochastic sine-Euler truncation with M = 1 (N = 3).
 *
 * The four independent modes are ordered (1,0), (1,1), (0,1), (-1,1).  The real
 * state is x = (Re w_1..Re w_4, Im w_1..Im w_4); the complex 8-vector
 * (w_1..w_4, w_1*..w_4*) is recovered by to_complex().
 */
class SineEulerModel final : public Model {
public:
    using Complex = std::complex<double>;
    using Modes = std::array<Complex, 4>;
    using LatticeVec = std::array<int, 2>;

    explicit SineEulerModel(std::array<double, 4> sigma);

    std::string name() const override { return "se"; }
    std::unique_ptr<Model> clone() const override { return std::make_unique<SineEulerModel>(*this); }
    std::string noise_label(int k) const override;
    void apply_flow(FlowPartId part, double t, State& y) const override;
    std::vector<CasimirFn> casimirs() const override;
    State random_state(std::mt19937_64& rng) const override;
    State default_initial_state() const override;

    static const std::array<LatticeVec, 4>& modes();
    /// The eight lattice vectors of the fundamental cell in storage order (modes, then negatives).
    static const std::array<LatticeVec, 8>& cell();

    static State from_modes(const Modes& w);
    static Modes to_modes(const State& x);
    /// (w_1..w_4, w_1*..w_4*).
    static Eigen::Matrix<Complex, 8, 1> to_complex(const State& x);
    /// Projects a complex 8-vector onto the independent modes (first half).
    static State from_complex(const Eigen::Matrix<Complex, 8, 1>& z);
    /// w_n for any lattice vector n, reduced mod 3 with w_(0,0) = 0.
    static Complex mode_value(const State& x, LatticeVec n);

    /// Complex structure matrix in the (w, w*) coordinates.
    static Eigen::Matrix<Complex, 8, 8> complex_structure(const State& x);

    static double casimir2(const State& x);
    static State casimir2_gradient(const State& x);

private:
    // Generator of the frozen-mode linear flow on the six free real coordinates:
    // A = x_re * re_coeff[j] + x_im * im_coeff[j] for the deterministic part j.
    using Block = Eigen::Matrix<double, 6, 6>;
    std::array<Block, 4> re_coeff_;
    std::array<Block, 4> im_coeff_;
    std::array<std::array<int, 6>, 4> free_index_;
};

/// Wraps lattice index components into {-1, 0, 1}.
int wrap_mod3(int v);

}  // namespace spi
