#include "doctest.h"
#include "generators.hpp"

#include "holonomy/errors.hpp"
#include "holonomy/models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace holonomy;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a holonomy::Error");
    return ErrorKind::InvalidArgument;
}

GHOTriple random_triple(gen::Rng& rng) {
    const double z = rng.uniform(0.5, 3.0);
    const double y = rng.uniform(-1.0, 1.0);
    const double w2 = rng.uniform(0.5, 4.0);
    return {(w2 + y * y) / z, y, z};
}

}  // namespace

TEST_CASE("spin Hamiltonian in the (|->, |+>) ordering") {
    const CMat h = spin_hamiltonian({1.0, 2.0, 3.0}, 0.5);
    CHECK(h(0, 0).real() == doctest::Approx(1.5));
    CHECK(h(1, 1).real() == doctest::Approx(-1.5));
    CHECK(h(0, 1) == Complex(-0.5, -1.0));
    CHECK(h(1, 0) == std::conj(h(0, 1)));
    CHECK(spin_family(0.5).dim == 2);
    // sigma_3 |+> = +|+>, so -mu sigma.B along +B3 lowers |+>
    CVec plus(2);
    plus << 0.0, 1.0;
    CHECK((spin_hamiltonian({0.0, 0.0, 2.0}, 1.0) * plus + 2.0 * plus).norm() < 1e-15);
}

TEST_CASE("property: closed-form spin eigenpairs agree with the eigensolver") {
    gen::Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Vector3d b = rng.vector(3, 2.0);
        const double mu = rng.uniform(0.1, 3.0);
        const CMat h = spin_hamiltonian(b, mu);
        const auto levels = spin_eigensystem(b, mu);
        const Eigensystem es = hermitian_eigensystem(h);
        for (int k = 0; k < 2; ++k) {
            const SpinLevel& lv = levels[static_cast<std::size_t>(k)];
            CHECK(lv.energy == doctest::Approx(es.energies(k)).epsilon(1e-12));
            CHECK((h * lv.state - lv.energy * lv.state).norm() < 1e-12 * std::max(1.0, mu * b.norm()));
            CHECK(std::abs(lv.state.norm() - 1.0) < 1e-14);
            CHECK(std::abs(std::abs(es.vectors.col(k).dot(lv.state)) - 1.0) < 1e-12);
        }
        CHECK(levels[0].energy == doctest::Approx(-mu * b.norm()));
        const double bb = b.norm();
        CHECK(levels[0].state(1).real() == doctest::Approx(std::sqrt((bb + b(2)) / (2 * bb))).epsilon(1e-12));
        CHECK(std::abs(levels[0].state(1).imag()) < 1e-15);
        CHECK(levels[1].state(1).real() == doctest::Approx(-std::sqrt((bb - b(2)) / (2 * bb))).epsilon(1e-12));
    }
}

TEST_CASE("spin eigenstates on the field axis") {
    const auto north = spin_eigensystem({0.0, 0.0, 2.0}, 1.0);
    CHECK(std::abs(north[0].state(1) - 1.0) < 1e-15);
    CHECK(std::abs(north[1].state(0) - 1.0) < 1e-15);
    const auto south = spin_eigensystem({0.0, 0.0, -2.0}, 1.0);
    CHECK(std::abs(south[0].state(0) - 1.0) < 1e-15);
    CHECK(std::abs(south[0].state(1)) < 1e-15);
    CHECK(kind_of([] { spin_eigensystem(Eigen::Vector3d::Zero(), 1.0); }) == ErrorKind::ZeroField);
}

TEST_CASE("spin field model validation") {
    SpinFieldModel ok{1.0, circle_loop(1.0, 0.0, 1.0, 32)};
    CHECK_NOTHROW(validate(ok));
    SpinFieldModel through_zero{1.0, circle_loop(1.0, 0.0, 1.0, 32)};
    through_zero.b_loop = make_loop(
        [](double t) {
            const double s = std::sin(2.0 * std::numbers::pi * t);
            return Vec{{s, 0.0, 0.0}};
        },
        1.0, 32);
    CHECK(kind_of([&] { validate(through_zero); }) == ErrorKind::ZeroField);
    SpinFieldModel flat{1.0, make_loop([](double) { return Vec{{1.0, 0.0}}; }, 1.0, 32)};
    CHECK(kind_of([&] { validate(flat); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("spin-oscillator effective field") {
    const SpinOscillatorEffective e = spin_oscillator_effective(3.0, 2.0, 2.0, 0.5);
    CHECK(e.b_total == doctest::Approx(5.0));
    CHECK(std::cos(e.theta) == doctest::Approx(0.8));
    CHECK(e.e_plus == doctest::Approx(2.5));
    CHECK(e.e_minus == doctest::Approx(-2.5));
    CHECK(spin_oscillator_effective(1.0, 0.0, 5.0, 1.0).theta == doctest::Approx(std::numbers::pi / 2));
    CHECK(kind_of([] { spin_oscillator_effective(0.0, 1.0, 1.0, 1.0); }) == ErrorKind::ZeroField);
}

TEST_CASE("weak-coupling field is the second-order expansion") {
    gen::Rng rng(22);
    for (int trial = 0; trial < 30; ++trial) {
        const double b = rng.uniform(0.5, 3.0);
        const double lq = rng.uniform(-0.3, 0.3) * b;
        const double exact = spin_oscillator_effective(b, lq, 1.0, 1.0).b_total;
        const double approx = spin_oscillator_weak_coupling_field(b, lq, 1.0);
        // next term of the expansion is -(lambda Q)^4 / (8 B^3)
        CHECK(std::abs(approx - exact) <= std::pow(lq, 4) / (8 * b * b * b) * 1.01 + 1e-15);
        CHECK(approx >= exact);
    }
}

TEST_CASE("spin-oscillator frequency and coupling ratio") {
    const double period = 2.0 * std::numbers::pi;
    SpinOscillatorHybrid m{2.0,
                           0.1,
                           4.0,
                           make_loop([](double) { return Vec{{0.0}}; }, period, 64),
                           gho_triple_loop(1.0, 1.0, 0.0, 1.0, period, 64, 1),
                           0.75,
                           0.25,
                           2.0};
    const GHOTriple x{1.0, 0.0, 1.0};
    CHECK(spin_oscillator_omega_squared(m, x) == doctest::Approx((1.0 + 2.0 * 0.01 * 0.5 / 4.0)));
    const double w = std::sqrt(spin_oscillator_omega_squared(m, x));
    CHECK(spin_oscillator_coupling_ratio(m) == doctest::Approx(0.1 * std::sqrt(2.0 * 2.0 / w) / 4.0));
    m.lambda = 0.0;
    CHECK(spin_oscillator_coupling_ratio(m) == 0.0);
}

TEST_CASE("property: GHO effective energy is linear in n and quadratic in K q") {
    gen::Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        const GHOTriple x = random_triple(rng);
        const double hbar = rng.uniform(0.1, 2.0);
        const double k = rng.uniform(0.0, 1.0);
        const double q = rng.uniform(-2.0, 2.0);
        const double w = std::sqrt(x.omega_squared());
        for (int n = 0; n < 5; ++n) {
            const double step = gho_effective_energy(x, k, q, n + 1, hbar) - gho_effective_energy(x, k, q, n, hbar);
            CHECK(step == doctest::Approx(hbar * w).epsilon(1e-12));
        }
        const double e0 = gho_effective_energy(x, 0.0, q, 2, hbar);
        CHECK(e0 == doctest::Approx(2.5 * hbar * w).epsilon(1e-14));
        const double shift = gho_effective_energy(x, k, q, 2, hbar) - e0;
        const double shift2 = gho_effective_energy(x, 2.0 * k, q, 2, hbar) - e0;
        CHECK(shift <= 0.0);
        CHECK(shift2 == doctest::Approx(4.0 * shift).epsilon(1e-10));
        CHECK(gho_effective_energy(x, k, -q, 2, hbar) == doctest::Approx(gho_effective_energy(x, k, q, 2, hbar)));
    }
    CHECK(kind_of([] { gho_effective_energy({1.0, 2.0, 1.0}, 0.1, 1.0, 0, 1.0); }) == ErrorKind::EllipticViolation);
}

TEST_CASE("normal modes at K = 0 are the oscillators") {
    const NormalModeSplit s = normal_mode_split({4.0, 0.0, 1.0}, {1.0, 0.0, 1.0}, 0.0);
    CHECK(s.omega1 == doctest::Approx(2.0));
    CHECK(s.omega2 == doctest::Approx(1.0));
    CHECK(s.beta == doctest::Approx(0.0));
    const NormalModeSplit swapped = normal_mode_split({1.0, 0.0, 1.0}, {4.0, 0.0, 1.0}, 0.0);
    CHECK(swapped.beta == doctest::Approx(std::numbers::pi / 2));
    CHECK(swapped.omega1 == doctest::Approx(2.0));
}

TEST_CASE("property: normal-mode trace and determinant identities") {
    gen::Rng rng(24);
    for (int trial = 0; trial < 100; ++trial) {
        const GHOTriple x1 = random_triple(rng);
        const GHOTriple x2 = random_triple(rng);
        const double w1 = x1.omega_squared();
        const double w2 = x2.omega_squared();
        const double k_limit = std::sqrt(w1 * w2 / (x1.z * x2.z));
        const double k = rng.uniform(0.0, 0.9) * k_limit;
        const NormalModeSplit s = normal_mode_split(x1, x2, k);
        const double o1 = s.omega1 * s.omega1;
        const double o2 = s.omega2 * s.omega2;
        CHECK(o1 + o2 == doctest::Approx(w1 + w2).epsilon(1e-12));
        CHECK(o1 * o2 == doctest::Approx(w1 * w2 - k * k * x1.z * x2.z).epsilon(1e-10));
        CHECK(s.omega1 >= s.omega2);
        CHECK(s.sin_beta * s.sin_beta + s.cos_beta * s.cos_beta == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(std::sin(s.beta) == doctest::Approx(s.sin_beta).epsilon(1e-12));
        // tan 2 beta = 2 K sqrt(Z1 Z2) / (w1^2 - w2^2)
        CHECK(std::sin(2 * s.beta) * (w1 - w2) ==
              doctest::Approx(std::cos(2 * s.beta) * 2.0 * k * std::sqrt(x1.z * x2.z)).epsilon(1e-9));
    }
}

TEST_CASE("normal-mode error paths") {
    CHECK(kind_of([] { normal_mode_split({1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}, 1.5); }) == ErrorKind::ModeCollapse);
    CHECK(kind_of([] { normal_mode_split({1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}, 1.0); }) == ErrorKind::ModeCollapse);
    CHECK(kind_of([] { normal_mode_split({1.0, 0.0, -1.0}, {1.0, 0.0, 1.0}, 0.0); }) ==
          ErrorKind::EllipticViolation);
    CHECK(kind_of([] { normal_mode_split({1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}, 0.0); }) ==
          ErrorKind::EllipticViolation);
    const NormalModeSplit degenerate = normal_mode_split({1.0, 0.0, 1.0}, {1.0, 0.0, 1.0}, 0.0);
    CHECK(degenerate.beta == 0.0);
}

TEST_CASE("GHOTriple ellipticity") {
    CHECK(GHOTriple{2.0, 1.0, 1.0}.elliptic());
    CHECK(GHOTriple{2.0, 1.0, 1.0}.omega_squared() == doctest::Approx(1.0));
    CHECK_FALSE(GHOTriple{1.0, 1.0, 1.0}.elliptic());
    CHECK_FALSE(GHOTriple{-1.0, 0.0, -1.0}.elliptic());
}
