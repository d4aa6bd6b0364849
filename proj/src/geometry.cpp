#include "spi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace spi {

namespace {

void require_dim(const State& y, int dim, const char* what) {
    if (y.size() != dim) {
        throw ContractError(std::string(what) + ": state has dimension " + std::to_string(y.size()) +
                            ", expected " + std::to_string(dim));
    }
}

// dB/dy_l at y, one matrix per l.
std::vector<Matrix> structure_derivatives(const StructureMatrix& b, const State& y, double fd_step) {
    if (b.tensor) return *b.tensor;
    std::vector<Matrix> d;
    d.reserve(b.dim);
    for (int l = 0; l < b.dim; ++l) {
        State yp = y;
        State ym = y;
        yp[l] += fd_step;
        ym[l] -= fd_step;
        d.push_back((b(yp) - b(ym)) / (2.0 * fd_step));
    }
    return d;
}

}  // namespace

double StructureMatrix::coefficient(int k, int i, int j) const {
    if (!tensor) throw ContractError("coefficient: structure matrix has no linear tensor");
    return (*tensor).at(static_cast<std::size_t>(k))(j, i);
}

StructureMatrix StructureMatrix::without_tensor() const {
    StructureMatrix copy = *this;
    copy.tensor.reset();
    return copy;
}

StructureMatrix StructureMatrix::from_tensor(std::vector<Matrix> tensor) {
    StructureMatrix b;
    b.dim = static_cast<int>(tensor.size());
    auto shared = std::make_shared<const std::vector<Matrix>>(tensor);
    b.eval = [shared, dim = b.dim](const State& y) {
        Matrix m = Matrix::Zero(dim, dim);
        for (int l = 0; l < dim; ++l) m += y[l] * (*shared)[l];
        return m;
    };
    b.tensor = std::move(tensor);
    return b;
}

double poisson_bracket(const VectorField& grad_f, const VectorField& grad_g,
                       const StructureMatrix& b, const State& y) {
    require_dim(y, b.dim, "poisson_bracket");
    const State gf = grad_f(y);
    const State gg = grad_g(y);
    if (gf.size() != b.dim || gg.size() != b.dim) {
        throw ContractError("poisson_bracket: gradient dimension does not match structure matrix");
    }
    return gf.dot(b(y) * gg);
}

double check_skew(const Matrix& m) {
    return (m + m.transpose()).cwiseAbs().maxCoeff();
}

double check_skew(const StructureMatrix& b, const State& y) {
    require_dim(y, b.dim, "check_skew");
    return check_skew(b(y));
}

double check_jacobi(const StructureMatrix& b, const State& y, double fd_step) {
    require_dim(y, b.dim, "check_jacobi");
    if (!(fd_step > 0.0)) throw ContractError("check_jacobi: fd_step must be positive");
    const int d = b.dim;
    const Matrix bm = b(y);
    const std::vector<Matrix> db = structure_derivatives(b, y, fd_step);
    double worst = 0.0;
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < d; ++k) {
                double sum = 0.0;
                for (int l = 0; l < d; ++l) {
                    sum += db[l](i, j) * bm(l, k) + db[l](j, k) * bm(l, i) + db[l](k, i) * bm(l, j);
                }
                worst = std::max(worst, std::abs(sum));
            }
        }
    }
    return worst;
}

double check_casimir(const CasimirFn& c, const StructureMatrix& b, const State& y) {
    require_dim(y, b.dim, "check_casimir");
    const State g = c.gradient(y);
    return (g.transpose() * b(y)).cwiseAbs().maxCoeff();
}

Matrix fd_jacobian(const StateMap& map, const State& y, double fd_step) {
    const int d = static_cast<int>(y.size());
    Matrix jac(d, d);
    for (int j = 0; j < d; ++j) {
        State yp = y;
        State ym = y;
        yp[j] += fd_step;
        ym[j] -= fd_step;
        jac.col(j) = (map(yp) - map(ym)) / (2.0 * fd_step);
    }
    return jac;
}

double check_poisson_map(const StateMap& map, const StructureMatrix& b, const State& y,
                         double fd_step) {
    require_dim(y, b.dim, "check_poisson_map");
    if (!(fd_step > 0.0)) throw ContractError("check_poisson_map: fd_step must be positive");
    const Matrix jac = fd_jacobian(map, y, fd_step);
    const Matrix lhs = jac * b(y) * jac.transpose();
    return (lhs - b(map(y))).cwiseAbs().maxCoeff();
}

State random_state(int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    State y(dim);
    for (int i = 0; i < dim; ++i) y[i] = u(rng);
    return y;
}

}  // namespace spi
