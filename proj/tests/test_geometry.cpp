#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spi/geometry.hpp"

#include <cmath>

using namespace spi;

namespace {

// Lie-Poisson structure of so(3)*.
StructureMatrix so3() {
    std::vector<Matrix> e(3, Matrix::Zero(3, 3));
    // B(y) = [[0, -y3, y2], [y3, 0, -y1], [-y2, y1, 0]]
    e[0](2, 1) = 1.0;
    e[0](1, 2) = -1.0;
    e[1](0, 2) = 1.0;
    e[1](2, 0) = -1.0;
    e[2](1, 0) = 1.0;
    e[2](0, 1) = -1.0;
    return StructureMatrix::from_tensor(e);
}

State vec3(double a, double b, double c) { return (State(3) << a, b, c).finished(); }

}  // namespace

TEST_CASE("structure matrix from a tensor evaluates linearly") {
    const auto b = so3();
    const State y = vec3(1.0, 2.0, 3.0);
    Matrix expected(3, 3);
    expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
    CHECK((b(y) - expected).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.is_lie_poisson());
    CHECK_FALSE(b.without_tensor().is_lie_poisson());
    // b^k_ij = E_k(j, i): B_ij(y) = sum_k b^k_ji y_k.
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += b.coefficient(k, j, i) * y[k];
            CHECK(s == doctest::Approx(expected(i, j)));
        }
    }
}

TEST_CASE("poisson bracket of coordinate functions") {
    const auto b = so3();
    const State y = vec3(0.3, -0.2, 0.5);
    auto e = [](int i) { return [i](const State&) { State g = State::Zero(3); g[i] = 1.0; return g; }; };
    // {y1, y2} = B_12 = -y3.
    CHECK(poisson_bracket(e(0), e(1), b, y) == doctest::Approx(-0.5));
    CHECK(poisson_bracket(e(1), e(0), b, y) == doctest::Approx(0.5));
}

TEST_CASE("skew, Jacobi and Casimir predicates") {
    const auto b = so3();
    std::mt19937_64 rng(1);
    const CasimirFn norm2{"C", [](const State& y) { return y.squaredNorm(); },
                          [](const State& y) { return State(2.0 * y); }};
    for (int s = 0; s < 100; ++s) {
        const State y = random_state(3, rng);
        CHECK(check_skew(b, y) == 0.0);
        CHECK(check_jacobi(b, y, 1e-4) <= 1e-14);
        CHECK(check_jacobi(b.without_tensor(), y, 1e-4) <= 1e-10);
        CHECK(check_casimir(norm2, b, y) <= 1e-15);
    }
}

TEST_CASE("predicates detect broken structures") {
    // Not skew.
    Matrix m(2, 2);
    m << 0, 1, 1, 0;
    CHECK(check_skew(m) == 2.0);

    // Skew but violating Jacobi: B(y) built from a non-Lie bracket.
    std::vector<Matrix> e(3, Matrix::Zero(3, 3));
    e[0](0, 1) = 1.0;
    e[0](1, 0) = -1.0;
    e[1](1, 2) = 1.0;
    e[1](2, 1) = -1.0;
    const auto bad = StructureMatrix::from_tensor(e);
    const State y = vec3(0.4, 0.7, -0.3);
    CHECK(check_skew(bad, y) == 0.0);
    CHECK(check_jacobi(bad, y, 1e-4) > 1e-3);
    CHECK(check_jacobi(bad.without_tensor(), y, 1e-4) > 1e-3);

    // |y|^2 is not a Casimir of the bracket above.
    const CasimirFn norm2{"C", [](const State& x) { return x.squaredNorm(); },
                          [](const State& x) { return State(2.0 * x); }};
    CHECK(check_casimir(norm2, bad, y) > 1e-3);
}

TEST_CASE("fd_jacobian is exact for linear maps up to rounding") {
    Matrix a(3, 3);
    a << 1, 2, 3, 4, 5, 6, 7, 8, 10;
    const Matrix j = fd_jacobian([&](const State& y) { return State(a * y); }, vec3(1, 1, 1), 1e-3);
    CHECK((j - a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("poisson-map residual separates Poisson maps from non-Poisson maps") {
    const auto b = so3();
    const State y = vec3(0.2, 0.5, -0.7);
    // Rotations are Poisson maps of so(3)*.
    const double c = std::cos(0.8), s = std::sin(0.8);
    Matrix r(3, 3);
    r << c, -s, 0, s, c, 0, 0, 0, 1;
    // Linear map: no truncation error, only rounding of order eps / fd_step.
    CHECK(check_poisson_map([&](const State& x) { return State(r * x); }, b, y, 1e-5) < 1e-10);
    // A uniform scaling is not.
    CHECK(check_poisson_map([](const State& x) { return State(1.1 * x); }, b, y, 1e-5) > 1e-3);
    // Exact flows of y1^2/2 then y2^2/2 (times 0.9, 0.7): a nonlinear Poisson map.
    auto flow = [](const State& x) {
        State out = x;
        const double a = -out[0] * 0.9;
        const double y2 = out[1], y3 = out[2];
        out[1] = std::cos(a) * y2 - std::sin(a) * y3;
        out[2] = std::sin(a) * y2 + std::cos(a) * y3;
        const double b = -out[1] * 0.7;
        const double y1 = out[0], z3 = out[2];
        out[2] = std::cos(b) * z3 - std::sin(b) * y1;
        out[0] = std::sin(b) * z3 + std::cos(b) * y1;
        return out;
    };
    CHECK(flow(y).norm() == doctest::Approx(y.norm()).epsilon(1e-15));
    // Steps large enough that truncation, not rounding, dominates.
    const double r2 = check_poisson_map(flow, b, y, 1e-2);
    const double r3 = check_poisson_map(flow, b, y, 1e-3);
    CHECK(r3 < 1e-7);
    CHECK(r3 < r2 / 50.0);
}

TEST_CASE("random_state is uniform on the cube and reproducible") {
    std::mt19937_64 a(9), b(9);
    for (int s = 0; s < 50; ++s) {
        const State x = random_state(4, a);
        CHECK(x == random_state(4, b));
        CHECK(x.cwiseAbs().maxCoeff() <= 1.0);
    }
}
