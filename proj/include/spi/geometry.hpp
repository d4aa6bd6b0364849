#pragma once

#include "spi/types.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace spi {

using ScalarField = std::function<double(const State&)>;
using VectorField = std::function<State(const State&)>;
using StateMap = std::function<State(const State&)>;

/**
 * Structure (Poisson) matrix B(y) of a Poisson system.
 *
 * When the system is Lie-Poisson, `tensor` holds the matrices E_l = B(e_l), so
 * that B(y) = sum_l y_l E_l.  In the index convention B_ij(y) = sum_k b^k_ji y_k
 * this means b^k_ij = E_k(j, i), see coefficient().
 */
struct StructureMatrix {
    int dim = 0;
    std::function<Matrix(const State&)> eval;
    std::optional<std::vector<Matrix>> tensor;

    Matrix operator()(const State& y) const { return eval(y); }
    bool is_lie_poisson() const { return tensor.has_value(); }
    /// b^k_ij with zero-based indices; requires the linear tensor.
    double coefficient(int k, int i, int j) const;

    /// Same matrix with the linear tensor dropped (forces finite differences).
    StructureMatrix without_tensor() const;
    /// Lie-Poisson structure matrix from its tensor.
    static StructureMatrix from_tensor(std::vector<Matrix> tensor);
};

struct HamiltonianPart {
    ScalarField value;
    VectorField gradient;
    /// Exact flow of y' = B(y) grad H(y) for signed flow time t.
    std::function<State(double, const State&)> exact_flow;
};

struct CasimirFn {
    std::string name;
    ScalarField value;
    VectorField gradient;
};

/// grad F(y)^T B(y) grad G(y).
double poisson_bracket(const VectorField& grad_f, const VectorField& grad_g,
                       const StructureMatrix& b, const State& y);

/// max_ij |B_ij(y) + B_ji(y)|.
double check_skew(const StructureMatrix& b, const State& y);
double check_skew(const Matrix& b);

/// Largest cyclic sum of the Jacobi identity.  Derivatives of B come from the
/// linear tensor when present, otherwise from central differences of step fd_step.
double check_jacobi(const StructureMatrix& b, const State& y, double fd_step);

/// ||grad C(y)^T B(y)||_inf.
double check_casimir(const CasimirFn& c, const StructureMatrix& b, const State& y);

/// Central-difference Jacobian of a map at y.
Matrix fd_jacobian(const StateMap& map, const State& y, double fd_step);

/// ||D B(y) D^T - B(map(y))||_max with D the central-difference Jacobian.
double check_poisson_map(const StateMap& map, const StructureMatrix& b, const State& y,
                         double fd_step);

/// Uniform on [-1, 1]^dim.
State random_state(int dim, std::mt19937_64& rng);

}  // namespace spi
