#include "spi/models.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace spi {

namespace {

Matrix zero_matrix(int d) { return Matrix::Zero(d, d); }
State zero_state(int d) { return State::Zero(d); }

QuadraticForm diagonal_form(int d, int i, double coeff) {
    QuadraticForm q{zero_matrix(d), zero_state(d)};
    q.hessian(i, i) = coeff;
    return q;
}

QuadraticForm linear_form(int d, int i) {
    QuadraticForm q{zero_matrix(d), zero_state(d)};
    q.linear[i] = 1.0;
    return q;
}

// Hat map tensor: B(y) = [[0,-y3,y2],[y3,0,-y1],[-y2,y1,0]].
std::vector<Matrix> hat_tensor() {
    std::vector<Matrix> e(3, zero_matrix(3));
    e[0](1, 2) = -1.0;
    e[0](2, 1) = 1.0;
    e[1](0, 2) = 1.0;
    e[1](2, 0) = -1.0;
    e[2](0, 1) = -1.0;
    e[2](1, 0) = 1.0;
    return e;
}

// B(y) = [[0,-y3,y2],[y3,0,0],[-y2,0,0]].
std::vector<Matrix> maxwell_bloch_tensor() {
    std::vector<Matrix> e(3, zero_matrix(3));
    e[1](0, 2) = 1.0;
    e[1](2, 0) = -1.0;
    e[2](0, 1) = -1.0;
    e[2](1, 0) = 1.0;
    return e;
}

// Rotates (y_a, y_b) by angle theta: (c y_a + s y_b, -s y_a + c y_b).
inline void rotate(State& y, int a, int b, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double ya = y[a];
    const double yb = y[b];
    y[a] = c * ya + s * yb;
    y[b] = -s * ya + c * yb;
}

void require_positive_distinct(const std::array<double, 3>& v, const char* what) {
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw ContractError(std::string(what) + " must be positive");
        }
    }
    if (v[0] == v[1] || v[1] == v[2] || v[0] == v[2]) {
        throw ContractError(std::string(what) + " must be pairwise distinct");
    }
}

void require_nonnegative(const std::vector<double>& sigma) {
    for (double s : sigma) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw ContractError("noise amplitudes must be nonnegative");
    }
}

}  // namespace

std::string FlowPartId::label() const {
    return (kind == FlowKind::deterministic ? "H" : "Hhat") + std::to_string(index + 1);
}

Model::Model(int dim, std::vector<Matrix> tensor, std::vector<QuadraticForm> det,
             std::vector<QuadraticForm> noise, std::vector<double> sigma)
    : dim_(dim),
      structure_(StructureMatrix::from_tensor(std::move(tensor))),
      det_(std::move(det)),
      noise_(std::move(noise)),
      sigma_(std::move(sigma)) {
    require_nonnegative(sigma_);
    if (sigma_.size() != noise_.size()) throw ContractError("one noise amplitude per noise Hamiltonian required");
}

double Model::sigma(int k) const {
    if (k < 0 || k >= noise_count()) throw ContractError("noise index out of range");
    return sigma_[static_cast<std::size_t>(k)];
}

Matrix Model::structure_at(const State& y) const {
    const auto& e = *structure_.tensor;
    Matrix b = Matrix::Zero(dim_, dim_);
    for (int l = 0; l < dim_; ++l) {
        if (y[l] != 0.0) b.noalias() += y[l] * e[static_cast<std::size_t>(l)];
    }
    return b;
}

void Model::check_part(FlowPartId part) const {
    const int count = part.kind == FlowKind::deterministic ? deterministic_parts() : noise_count();
    if (part.index < 0 || part.index >= count) {
        throw ContractError("flow part " + part.label() + " out of range for model " + name());
    }
}

const QuadraticForm& Model::form(FlowPartId part) const {
    check_part(part);
    const auto& parts = part.kind == FlowKind::deterministic ? det_ : noise_;
    return parts[static_cast<std::size_t>(part.index)];
}

double Model::hamiltonian(const State& y) const {
    double h = 0.0;
    for (const auto& q : det_) h += q.value(y);
    return h;
}

State Model::hamiltonian_gradient(const State& y) const {
    State g = State::Zero(dim_);
    for (const auto& q : det_) g += q.gradient(y);
    return g;
}

State Model::flow(FlowPartId part, double t, const State& y) const {
    check_part(part);
    State out = y;
    apply_flow(part, t, out);
    return out;
}

HamiltonianPart Model::part(FlowPartId id) const {
    const QuadraticForm q = form(id);
    std::shared_ptr<const Model> self = clone();
    return HamiltonianPart{
        [q](const State& y) { return q.value(y); },
        [q](const State& y) { return q.gradient(y); },
        [self, id](double t, const State& y) { return self->flow(id, t, y); },
    };
}

State Model::drift_stratonovich(const State& y) const {
    return structure_at(y) * hamiltonian_gradient(y);
}

State Model::diffusion(int k, const State& y) const {
    const double s = sigma(k);
    if (s == 0.0) return State::Zero(dim_);
    return s * (structure_at(y) * noise_[static_cast<std::size_t>(k)].gradient(y));
}

Matrix Model::diffusion_jacobian(int k, const State& y) const {
    // g(y) = s B(y) grad Hhat(y), B linear:  Dg = s (B(y) G + [E_l grad Hhat(y)]_l).
    const double s = sigma(k);
    const auto& q = noise_[static_cast<std::size_t>(k)];
    const State grad = q.gradient(y);
    Matrix jac = structure_at(y) * q.hessian;
    const auto& e = *structure_.tensor;
    for (int l = 0; l < dim_; ++l) jac.col(l) += e[static_cast<std::size_t>(l)] * grad;
    return s * jac;
}

State Model::drift_ito(const State& y) const {
    State f = drift_stratonovich(y);
    for (int k = 0; k < noise_count(); ++k) {
        if (sigma(k) == 0.0) continue;
        f += 0.5 * (diffusion_jacobian(k, y) * diffusion(k, y));
    }
    return f;
}

NamedValues Model::invariants(const State& y) const {
    NamedValues out;
    out.emplace_back("H", hamiltonian(y));
    for (const auto& c : casimirs()) out.emplace_back(c.name, c.value(y));
    return out;
}

// ---------------------------------------------------------------------------

MaxwellBlochModel::MaxwellBlochModel(double sigma1, double sigma3)
    : Model(3, maxwell_bloch_tensor(), {diagonal_form(3, 0, 1.0), linear_form(3, 2)},
            {diagonal_form(3, 0, 1.0), linear_form(3, 2)}, {sigma1, sigma3}) {}

void MaxwellBlochModel::apply_flow(FlowPartId part, double t, State& y) const {
    // H1 = Hhat1 = y1^2/2 rotates (y2, y3) by y1 t; H3 = Hhat3 = y3 shears y1 += t y2.
    if (part.index == 0) {
        rotate(y, 1, 2, y[0] * t);
    } else {
        y[0] += t * y[1];
    }
}

std::vector<CasimirFn> MaxwellBlochModel::casimirs() const {
    return {CasimirFn{
        "C1",
        [](const State& y) { return 0.5 * (y[1] * y[1] + y[2] * y[2]); },
        [](const State& y) {
            State g(3);
            g << 0.0, y[1], y[2];
            return g;
        },
    }};
}

State MaxwellBlochModel::default_initial_state() const {
    State y(3);
    y << 1.0, 2.0, 3.0;
    return y;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<QuadraticForm> rigid_body_forms(const std::array<double, 3>& moments) {
    std::vector<QuadraticForm> forms;
    for (int k = 0; k < 3; ++k) forms.push_back(diagonal_form(3, k, 1.0 / moments[static_cast<std::size_t>(k)]));
    return forms;
}

}  // namespace

RigidBodyModel::RigidBodyModel(std::array<double, 3> inertia, std::array<double, 3> noise_inertia,
                               std::array<double, 3> sigma)
    : Model(3, hat_tensor(), rigid_body_forms(inertia), rigid_body_forms(noise_inertia),
            {sigma[0], sigma[1], sigma[2]}),
      inertia_(inertia),
      noise_inertia_(noise_inertia) {
    require_positive_distinct(inertia_, "moments of inertia");
    require_positive_distinct(noise_inertia_, "noise moments");
}

void RigidBodyModel::apply_flow(FlowPartId part, double t, State& y) const {
    // Axis k: y_k frozen, (y_{k+1}, y_{k+2}) (cyclic) rotate by y_k t / I_k.
    const int k = part.index;
    const double moment = part.kind == FlowKind::deterministic ? inertia_[static_cast<std::size_t>(k)]
                                                               : noise_inertia_[static_cast<std::size_t>(k)];
    rotate(y, (k + 1) % 3, (k + 2) % 3, y[k] * t / moment);
}

std::vector<CasimirFn> RigidBodyModel::casimirs() const {
    return {CasimirFn{
        "C1",
        [](const State& y) { return y.squaredNorm(); },
        [](const State& y) { return State(2.0 * y); },
    }};
}

State RigidBodyModel::default_initial_state() const {
    State y(3);
    y << std::cos(1.1), 0.0, std::sin(1.1);
    return y;
}

}  // namespace spi
