#include "doctest.h"

#include "holonomy/dynamics_oracle.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/models.hpp"

#include <cmath>
#include <numbers>

using namespace holonomy;

namespace {

constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a holonomy::Error");
    return ErrorKind::InvalidArgument;
}

double quantum_gamma(const LoopSpec& loop, std::size_t level, double slowness, std::size_t steps = 32) {
    const QuantumPropagation prop = propagate_quantum(spin_family(1.0), loop, level, slowness, steps);
    return extract_geometric_phase(prop, prop.psi_initial);
}

// Initial point of the classical orbit with action j and angle phi on triple x.
std::pair<double, double> orbit_start(const Vec& x, double j, double phi) {
    const double omega = std::sqrt(x(0) * x(2) - x(1) * x(1));
    const double r = std::sqrt(2.0 * x(2) * j / omega);
    return {r * std::cos(phi), -r * (x(1) / x(2) * std::cos(phi) + omega / x(2) * std::sin(phi))};
}

double classical_angle(const LoopSpec& loop, double j, double phi, double slowness, std::size_t steps = 32) {
    const auto [q, p] = orbit_start(loop.point(0), j, phi);
    return extract_hannay_angle(propagate_classical(loop, q, p, slowness, steps));
}

}  // namespace

TEST_CASE("constant loop has no geometric phase") {
    const LoopSpec fixed = make_loop([](double) { return Vec{{0.3, -0.4, 1.2}}; }, 1.0, 4096);
    for (std::size_t level : {0u, 1u}) {
        const QuantumPropagation prop = propagate_quantum(spin_family(1.0), fixed, level, 10.0);
        CHECK(std::abs(extract_geometric_phase(prop, prop.psi_initial)) < 1e-10);
        CHECK(prop.final_fidelity == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(prop.norm_drift < 1e-10);
        CHECK(prop.dynamical_phase == doctest::Approx((level == 0 ? -1.0 : 1.0) * 1.3 * 10.0).epsilon(1e-12));
    }
}

TEST_CASE("equator loop reproduces the Berry phase") {
    const LoopSpec loop = circle_loop(1.0, 0.0, 1.0, 1024);
    const double gamma = quantum_gamma(loop, 0, 300.0);
    CHECK(std::abs(gamma + kPi) < 2e-2);
}

TEST_CASE("two traversals add") {
    const LoopSpec once = circle_loop(std::sin(1.0), std::cos(1.0), 1.0, 1024);
    const LoopSpec twice = circle_loop(std::sin(1.0), std::cos(1.0), 2.0, 2048, 2);
    const double g1 = quantum_gamma(once, 0, 300.0);
    const double g2 = quantum_gamma(twice, 0, 300.0);
    CHECK(std::abs(g2 - 2.0 * g1) < 2e-2);
    CHECK(std::abs(g1 + kPi * (1.0 - std::cos(1.0))) < 2e-2);
}

TEST_CASE("time reversal negates the geometric phase") {
    const LoopSpec loop = circle_loop(std::sin(0.8), std::cos(0.8), 1.0, 1024);
    const double fwd = quantum_gamma(loop, 1, 300.0);
    const double bwd = quantum_gamma(reversed(loop), 1, 300.0);
    CHECK(std::abs(fwd + bwd) < 2e-2);
}

TEST_CASE("slower traversal is more adiabatic") {
    const LoopSpec loop = circle_loop(1.0, 0.0, 1.0, 512);
    const double fast = std::abs(quantum_gamma(loop, 0, 50.0) + kPi);
    const double slow = std::abs(quantum_gamma(loop, 0, 400.0, 64) + kPi);
    CHECK(slow < fast);
}

TEST_CASE("quantum propagation error paths") {
    const LoopSpec loop = circle_loop(1.0, 0.0, 1.0, 64);
    const HamiltonianFamily family = spin_family(1.0);
    CHECK(kind_of([&] { propagate_quantum(family, loop, 0, 0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_quantum(family, loop, 0, 10.0, 0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_quantum(family, loop, 0, 10.0, 32, 0.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_quantum(family, loop, 2, 10.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_quantum(family, loop, 0, 2.0); }) == ErrorKind::NonAdiabatic);
    const HamiltonianFamily flat{2, [](const Vec&) { return CMat::Identity(2, 2); }};
    CHECK(kind_of([&] { propagate_quantum(flat, loop, 0, 10.0); }) == ErrorKind::GapTooSmall);
}

TEST_CASE("extract_geometric_phase needs a large overlap") {
    QuantumPropagation prop;
    prop.psi_initial = CVec::Zero(2);
    prop.psi_initial(0) = 1.0;
    prop.psi_final = CVec::Zero(2);
    prop.psi_final(1) = 1.0;
    CHECK(kind_of([&] { extract_geometric_phase(prop, prop.psi_initial); }) == ErrorKind::OverlapTooSmall);
    prop.psi_final = prop.psi_initial * std::polar(1.0, 0.25);
    prop.dynamical_phase = 0.5;
    prop.tracked_geometric_phase = 2.0 * kPi;
    CHECK(extract_geometric_phase(prop, prop.psi_initial) == doctest::Approx(0.75 + 2.0 * kPi));
}

TEST_CASE("constant oscillator has no Hannay angle") {
    const LoopSpec fixed = gho_triple_loop(1.5, 0.8, 0.0, 1.0, 2.0 * kPi, 4096, 1);
    const auto [q, p] = orbit_start(fixed.point(0), 1.0, 0.3);
    const ClassicalTrajectory traj = propagate_classical(fixed, q, p, 10.0);
    CHECK(std::abs(extract_hannay_angle(traj)) < 1e-9);
    CHECK(traj.action_drift() < 1e-10);
    CHECK(traj.samples.size() == 4097);
    CHECK(traj.samples.front().action == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(traj.samples.front().angle == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(traj.dynamical_angle == doctest::Approx(1.5 * 10.0 * 2.0 * kPi).epsilon(1e-12));
}

TEST_CASE("classical oracle approaches the closed form") {
    const double eps = 0.5;
    const LoopSpec loop = gho_triple_loop(1.0, 1.0, eps, 1.0, 2.0 * kPi, 4096, 1);
    const double s = std::sqrt(1.0 - eps * eps);
    const double closed = -kPi * (1.0 - s) / s;
    CHECK(std::abs(classical_angle(loop, 1.0, 0.0, 1000.0) / closed - 1.0) < 1e-2);
}

TEST_CASE("Hannay angle does not depend on the starting angle or the action") {
    const LoopSpec loop = gho_triple_loop(1.0, 1.2, 0.5, 1.0, 2.0 * kPi, 2048, 1);
    const double ref = classical_angle(loop, 1.0, 0.0, 300.0);
    for (double phi : {0.7, 2.0, -2.5}) CHECK(std::abs(classical_angle(loop, 1.0, phi, 300.0) - ref) < 5e-3);
    // the flow is linear, so rescaling the orbit leaves every angle unchanged
    CHECK(std::abs(classical_angle(loop, 7.5, 0.0, 300.0) - ref) < 1e-10);
}

TEST_CASE("classical time reversal") {
    const LoopSpec loop = gho_triple_loop(1.0, 1.0, 0.5, 1.0, 2.0 * kPi, 2048, 1);
    const double fwd = classical_angle(loop, 1.0, 0.0, 300.0);
    const double bwd = classical_angle(reversed(loop), 1.0, 0.0, 300.0);
    CHECK(std::abs(fwd + bwd) < 5e-3);
    CHECK(std::abs(fwd) > 0.1);
}

TEST_CASE("classical propagation error paths") {
    const LoopSpec loop = gho_triple_loop(1.0, 1.0, 0.5, 1.0, 2.0 * kPi, 64, 1);
    CHECK(kind_of([&] { propagate_classical(loop, 1.0, 0.0, -1.0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_classical(loop, 1.0, 0.0, 10.0, 0); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { propagate_classical(circle_loop(1.0, 0.0, 1.0, 64), 1.0, 0.0, 10.0); }) ==
          ErrorKind::EllipticViolation);
    const LoopSpec plane = make_loop([](double) { return Vec{{1.0, 1.0}}; }, 1.0, 64);
    CHECK(kind_of([&] { propagate_classical(plane, 1.0, 0.0, 10.0); }) == ErrorKind::LengthMismatch);
    CHECK(ClassicalTrajectory{}.action_drift() == 0.0);
    CHECK(extract_hannay_angle(ClassicalTrajectory{}) == 0.0);
}
