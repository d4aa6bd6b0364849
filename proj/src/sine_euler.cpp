#include "spi/models.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>

namespace spi {

namespace {

using Complex = SineEulerModel::Complex;
using LatticeVec = SineEulerModel::LatticeVec;
using CVec8 = Eigen::Matrix<Complex, 8, 1>;
using CMat8 = Eigen::Matrix<Complex, 8, 8>;

const double kHalfSqrt3 = std::sqrt(3.0) / 2.0;

int positive_mod3(int v) { return ((v % 3) + 3) % 3; }

// sin(2 pi c / 3) and cos(2 pi c / 3) evaluated exactly on the residue of c.
double sin_factor(int c) {
    switch (positive_mod3(c)) {
        case 1: return kHalfSqrt3;
        case 2: return -kHalfSqrt3;
        default: return 0.0;
    }
}

double cos_factor(int c) { return positive_mod3(c) == 0 ? 1.0 : -0.5; }

int cross(LatticeVec m, LatticeVec n) { return m[0] * n[1] - m[1] * n[0]; }

LatticeVec add(LatticeVec a, LatticeVec b) { return {a[0] + b[0], a[1] + b[1]}; }
LatticeVec neg(LatticeVec a) { return {-a[0], -a[1]}; }

double squared_length(LatticeVec n) { return static_cast<double>(n[0] * n[0] + n[1] * n[1]); }

struct Slot {
    int index = -1;  // -1: the zero mode
    bool conjugate = false;
};

Slot lookup(LatticeVec n) {
    const LatticeVec w{wrap_mod3(n[0]), wrap_mod3(n[1])};
    if (w[0] == 0 && w[1] == 0) return {};
    const auto& modes = SineEulerModel::modes();
    for (int j = 0; j < 4; ++j) {
        if (modes[j] == w) return {j, false};
        if (modes[j] == neg(w)) return {j, true};
    }
    throw ContractError("sine-Euler lattice lookup failed");
}

// x = T^{-1} z with T = [[I, iI], [I, -iI]].
CMat8 t_inverse() {
    CMat8 m = CMat8::Zero();
    const Complex i(0.0, 1.0);
    for (int j = 0; j < 4; ++j) {
        m(j, j) = 0.5;
        m(j, j + 4) = 0.5;
        m(j + 4, j) = -0.5 * i;
        m(j + 4, j + 4) = 0.5 * i;
    }
    return m;
}

Matrix real_structure(const State& x) {
    static const CMat8 tinv = t_inverse();
    const CMat8 bz = SineEulerModel::complex_structure(x);
    const CMat8 bx = tinv * bz * tinv.transpose();
    if (bx.imag().cwiseAbs().maxCoeff() > 1e-12) {
        throw NumericError("sine-Euler structure matrix is not real in (Re, Im) coordinates");
    }
    return bx.real();
}

std::vector<Matrix> sine_euler_tensor() {
    std::vector<Matrix> e;
    for (int l = 0; l < 8; ++l) {
        State unit = State::Zero(8);
        unit[l] = 1.0;
        e.push_back(real_structure(unit));
    }
    return e;
}

std::vector<QuadraticForm> mode_forms(double scale) {
    std::vector<QuadraticForm> forms;
    const auto& modes = SineEulerModel::modes();
    for (int j = 0; j < 4; ++j) {
        QuadraticForm q{Matrix::Zero(8, 8), State::Zero(8)};
        const double c = 2.0 * scale / squared_length(modes[j]);
        q.hessian(j, j) = c;
        q.hessian(j + 4, j + 4) = c;
        forms.push_back(q);
    }
    return forms;
}

}  // namespace

int wrap_mod3(int v) {
    const int r = positive_mod3(v);
    return r == 2 ? -1 : r;
}

const std::array<LatticeVec, 4>& SineEulerModel::modes() {
    static const std::array<LatticeVec, 4> m{{{1, 0}, {1, 1}, {0, 1}, {-1, 1}}};
    return m;
}

const std::array<LatticeVec, 8>& SineEulerModel::cell() {
    static const std::array<LatticeVec, 8> c = [] {
        std::array<LatticeVec, 8> out{};
        for (int j = 0; j < 4; ++j) {
            out[j] = modes()[j];
            out[j + 4] = neg(modes()[j]);
        }
        return out;
    }();
    return c;
}

SineEulerModel::SineEulerModel(std::array<double, 4> sigma)
    : Model(8, sine_euler_tensor(), mode_forms(1.0), mode_forms(0.5),
            {sigma[0], sigma[1], sigma[2], sigma[3]}) {
    const auto& e = *structure().tensor;
    for (int j = 0; j < 4; ++j) {
        int r = 0;
        for (int i = 0; i < 8; ++i) {
            if (i != j && i != j + 4) free_index_[j][r++] = i;
        }
        // d/dt x = B(x) G x with G supported on the frozen pair; the generator's
        // column l is E_l G x, linear in the two frozen coordinates.
        const double g = form(FlowPartId::det(j)).hessian(j, j);
        for (int a = 0; a < 6; ++a) {
            for (int b = 0; b < 6; ++b) {
                const auto& el = e[free_index_[j][b]];
                re_coeff_[j](a, b) = g * el(free_index_[j][a], j);
                im_coeff_[j](a, b) = g * el(free_index_[j][a], j + 4);
            }
        }
    }
}

std::string SineEulerModel::noise_label(int k) const {
    const auto& n = modes().at(static_cast<std::size_t>(k));
    return "W(" + std::to_string(n[0]) + "," + std::to_string(n[1]) + ")";
}

void SineEulerModel::apply_flow(FlowPartId part, double t, State& y) const {
    const int j = part.index;
    // Hhat_k = H_k / 2, so the stochastic flow at time t is the deterministic one at t/2.
    const double time = part.kind == FlowKind::deterministic ? t : 0.5 * t;
    if (time == 0.0) return;
    const Block gen = time * (y[j] * re_coeff_[j] + y[j + 4] * im_coeff_[j]);
    const Block propagator = gen.exp();
    Eigen::Matrix<double, 6, 1> free;
    for (int a = 0; a < 6; ++a) free[a] = y[free_index_[j][a]];
    const Eigen::Matrix<double, 6, 1> next = propagator * free;
    for (int a = 0; a < 6; ++a) y[free_index_[j][a]] = next[a];
    if (!next.allFinite()) throw NumericError("sine-Euler flow produced a non-finite state");
}

SineEulerModel::Complex SineEulerModel::mode_value(const State& x, LatticeVec n) {
    const Slot s = lookup(n);
    if (s.index < 0) return {0.0, 0.0};
    const Complex w(x[s.index], x[s.index + 4]);
    return s.conjugate ? std::conj(w) : w;
}

State SineEulerModel::from_modes(const Modes& w) {
    State x(8);
    for (int j = 0; j < 4; ++j) {
        x[j] = w[j].real();
        x[j + 4] = w[j].imag();
    }
    return x;
}

SineEulerModel::Modes SineEulerModel::to_modes(const State& x) {
    Modes w;
    for (int j = 0; j < 4; ++j) w[j] = Complex(x[j], x[j + 4]);
    return w;
}

Eigen::Matrix<SineEulerModel::Complex, 8, 1> SineEulerModel::to_complex(const State& x) {
    CVec8 z;
    for (int j = 0; j < 4; ++j) {
        z[j] = Complex(x[j], x[j + 4]);
        z[j + 4] = std::conj(z[j]);
    }
    return z;
}

State SineEulerModel::from_complex(const Eigen::Matrix<Complex, 8, 1>& z) {
    Modes w;
    for (int j = 0; j < 4; ++j) w[j] = z[j];
    return from_modes(w);
}

Eigen::Matrix<SineEulerModel::Complex, 8, 8> SineEulerModel::complex_structure(const State& x) {
    CMat8 b;
    const auto& c = cell();
    for (int a = 0; a < 8; ++a) {
        for (int bb = 0; bb < 8; ++bb) {
            b(a, bb) = sin_factor(cross(c[a], c[bb])) * mode_value(x, add(c[a], c[bb]));
        }
    }
    return b;
}

double SineEulerModel::casimir2(const State& x) {
    Complex sum(0.0, 0.0);
    for (const auto& n : cell()) {
        for (const auto& m : cell()) {
            sum += cos_factor(cross(n, m)) * mode_value(x, n) * mode_value(x, m) *
                   mode_value(x, neg(add(n, m)));
        }
    }
    return sum.real();
}

State SineEulerModel::casimir2_gradient(const State& x) {
    // dC2/dw_p = 3 sum_n cos(2 pi/3 n x p) w_n w_{-n-p}; then chain rule to (Re, Im).
    CVec8 dz;
    const auto& c = cell();
    for (int p = 0; p < 8; ++p) {
        Complex s(0.0, 0.0);
        for (const auto& n : c) s += cos_factor(cross(n, c[p])) * mode_value(x, n) * mode_value(x, neg(add(n, c[p])));
        dz[p] = 3.0 * s;
    }
    State g(8);
    const Complex i(0.0, 1.0);
    for (int j = 0; j < 4; ++j) {
        g[j] = (dz[j] + dz[j + 4]).real();
        g[j + 4] = (i * (dz[j] - dz[j + 4])).real();
    }
    return g;
}

std::vector<CasimirFn> SineEulerModel::casimirs() const {
    return {
        CasimirFn{"C1", [](const State& x) { return x.squaredNorm(); },
                  [](const State& x) { return State(2.0 * x); }},
        CasimirFn{"C2", [](const State& x) { return casimir2(x); },
                  [](const State& x) { return casimir2_gradient(x); }},
    };
}

State SineEulerModel::random_state(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Modes w;
    for (auto& wj : w) {
        const double r = std::sqrt(u(rng));
        const double phi = 2.0 * std::numbers::pi * u(rng);
        wj = std::polar(r, phi);
    }
    return from_modes(w);
}

State SineEulerModel::default_initial_state() const {
    return from_modes({Complex(0.1, 0.3), Complex(0.2, 0.3), Complex(0.3, 0.2), Complex(0.4, 0.1)});
}

}  // namespace spi
