#include "doctest.h"
#include "generators.hpp"

#include "holonomy/errors.hpp"
#include "holonomy/hybrid_pipeline.hpp"

#include <cmath>
#include <numbers>

using namespace holonomy;

namespace {

constexpr double kPi = std::numbers::pi;
const double kEps = std::sqrt(3.0) / 2.0;

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected a holonomy::Error");
    return ErrorKind::InvalidArgument;
}

SpinOscillatorHybrid spin_osc(double lambda, double epsilon, std::size_t n = 1024) {
    const double period = 2.0 * kPi;
    return {1.0,
            lambda,
            1.0,
            azimuth_loop(period, n),
            gho_triple_loop(1.0, 1.0, epsilon, 1.0, period, n, 1),
            0.5,
            0.5,
            1.0};
}

// Hannay angle of one standard oscillator over `cycles` turns.
double hannay_closed_form(double epsilon, double t_omega) {
    const double s = std::sqrt(1.0 - epsilon * epsilon);
    return -(t_omega / 2.0) * (1.0 - s) / s;
}

StandardLoopParams params(int n1, int n2, double epsilon, double k_fraction) {
    StandardLoopParams p;
    p.a1 = 2.5;
    p.a2 = 1.0;
    p.mu1 = 1.3;
    p.mu2 = 0.7;
    p.n1 = n1;
    p.n2 = n2;
    p.epsilon = epsilon;
    p.j_action = 2.0;
    p.n_level = 1;
    p.k = k_fraction * elliptic_bound(p).k_max;
    return p;
}

}  // namespace

TEST_CASE("period branch names") {
    CHECK(to_string(PeriodBranch::CommonPeriod) == "common-period");
    CHECK(to_string(PeriodBranch::PerSubsystemPeriod) == "per-subsystem-period");
}

TEST_CASE("azimuth loop winds with constant rate") {
    const LoopSpec loop = azimuth_loop(2.0, 64, 3);
    CHECK(loop.dim() == 1);
    for (std::size_t j = 0; j < loop.size(); ++j) {
        CHECK(std::abs(loop.point(j)(0)) <= kPi + 1e-12);
        CHECK(loop.velocity(j)(0) == doctest::Approx(3.0 * kPi));
    }
    const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 65);
    CHECK(closed_line_integral(one, loop).value == doctest::Approx(6.0 * kPi));
    CHECK(kind_of([] { azimuth_loop(0.0, 64); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("spin-oscillator one-form at lambda = 0 gives gamma = -pi per spin level") {
    const LinearOneForm form = spin_oscillator_one_form(spin_osc(0.0, 0.5));
    const OneFormPhases ph = phases_from_one_form(form, spin_oscillator_loop(spin_osc(0.0, 0.5)));
    REQUIRE(ph.gamma.size() == 2);
    CHECK(ph.gamma[0] == doctest::Approx(-kPi).epsilon(1e-12));
    CHECK(ph.gamma[1] == doctest::Approx(-kPi).epsilon(1e-12));
    CHECK(ph.delta_phi == doctest::Approx(hannay_closed_form(0.5, 2.0 * kPi)).epsilon(1e-10));
    CHECK(std::abs(ph.constant_part) < 1e-15);
    CHECK(ph.quadrature_error < 1e-10);
}

TEST_CASE("constant triple gives zero Hannay angle") {
    const SpinOscillatorHybrid m = spin_osc(0.02, 0.0);
    const OneFormPhases ph = phases_from_one_form(spin_oscillator_one_form(m), spin_oscillator_loop(m));
    CHECK(std::abs(ph.delta_phi) < 1e-15);
    CHECK(ph.gamma[0] == doctest::Approx(-kPi).epsilon(1e-12));
}

TEST_CASE("spin-oscillator coupling splits the two spin levels symmetrically") {
    const SpinOscillatorHybrid m = spin_osc(0.05, 0.6);
    const LinearOneForm form = spin_oscillator_one_form(m);
    CHECK(form.operating_actions(0) == 0.5);
    CHECK(form.operating_j == 1.0);
    const OneFormPhases ph = phases_from_one_form(form, spin_oscillator_loop(m));
    CHECK(ph.gamma[0] + ph.gamma[1] == doctest::Approx(-2.0 * kPi).epsilon(1e-12));
    CHECK(std::abs(ph.gamma[0] + kPi) > 1e-8);
}

TEST_CASE("spin-oscillator one-form error paths") {
    SpinOscillatorHybrid zero_field = spin_osc(0.01, 0.3);
    zero_field.b = 0.0;
    CHECK(kind_of([&] { spin_oscillator_one_form(zero_field); }) == ErrorKind::ZeroField);
    SpinOscillatorHybrid negative = spin_osc(0.01, 0.3);
    negative.j_action = -1.0;
    CHECK(kind_of([&] { spin_oscillator_one_form(negative); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([] { spin_oscillator_one_form(spin_osc(1.0, 0.3)); }) == ErrorKind::WeakCouplingViolated);
    SpinOscillatorHybrid imaginary = spin_osc(1.0, 0.3);
    imaginary.i_plus = 0.0;
    imaginary.i_minus = 100.0;
    CHECK(kind_of([&] { spin_oscillator_one_form(imaginary); }) == ErrorKind::OmegaImaginary);
    SpinOscillatorHybrid flat = spin_osc(0.01, 0.3);
    flat.phi_loop = circle_loop(1.0, 0.0, 2.0 * kPi, 1024);
    CHECK(kind_of([&] { spin_oscillator_one_form(flat); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("phases_from_one_form rejects mismatched shapes") {
    const SpinOscillatorHybrid m = spin_osc(0.0, 0.3, 64);
    const LinearOneForm form = spin_oscillator_one_form(m);
    CHECK(kind_of([&] { phases_from_one_form(form, circle_loop(1.0, 0.0, 1.0, 64)); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("uncoupled GHO closed form") {
    CHECK(gho_uncoupled_berry_phase(0.0, 2.0 * kPi, 3) == 0.0);
    CHECK(gho_uncoupled_berry_phase(kEps, 2.0 * kPi, 0) == doctest::Approx(kPi / 2));
    CHECK(gho_uncoupled_berry_phase(kEps, 2.0 * kPi, 2) == doctest::Approx(5.0 * kPi / 2));
    CHECK(gho_uncoupled_berry_phase(0.4, 4.0 * kPi, 1) == doctest::Approx(2.0 * gho_uncoupled_berry_phase(0.4, 2.0 * kPi, 1)));
}

TEST_CASE("elliptic bound") {
    StandardLoopParams p;
    p.epsilon = kEps;
    const EllipticBound b = elliptic_bound(p);
    CHECK(b.d_max == doctest::Approx(0.18946869).epsilon(1e-8));
    p.k = b.k_max;
    CHECK(p.coupling_d() == doctest::Approx(b.d_max).epsilon(1e-14));
    CHECK(std::abs(p.elliptic_margin()) < 1e-14);
    p.epsilon = 1.0;
    CHECK(kind_of([&] { elliptic_bound(p); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("Omega identity at half the elliptic bound") {
    const StandardLoopParams p = params(2, 1, kEps, 0.5);
    const LoopSpec loop = coupled_gho_loop(CoupledGHOHybrid{p}, 256);
    const double d2 = p.coupling_d() * p.coupling_d();
    for (std::size_t j = 0; j < loop.size(); ++j) {
        const auto x = loop.point(j);
        const double w2 = x(0) * x(2) - x(1) * x(1);
        const double big_sq = x(3) * x(5) - x(4) * x(4) - p.k * p.k * x(2) * x(5) / w2;
        const double u1 = 1.0 - p.epsilon * std::cos(p.omega1() * loop.time(j));
        const double u2 = 1.0 - p.epsilon * std::cos(p.omega2() * loop.time(j));
        const double expected = p.a2 * p.a2 * (1.0 - p.epsilon * p.epsilon - 2.0 * d2 * u1 * u2);
        CHECK(big_sq == doctest::Approx(expected).epsilon(1e-12));
        CHECK(big_sq > 0.0);
    }
}

TEST_CASE("coupled GHO one-form reduces to the uncoupled phases at K = 0") {
    for (auto [n1, n2] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
        const StandardLoopParams p = params(n1, n2, 0.7, 0.0);
        const CoupledGHOHybrid m{p};
        const LoopSpec loop = coupled_gho_loop(m, 2048);
        const OneFormPhases ph = phases_from_one_form(coupled_gho_one_form(m, loop), loop);
        REQUIRE(ph.gamma.size() == 2);
        const double t = p.common_period();
        for (int n = 0; n < 2; ++n) {
            CHECK(ph.gamma[static_cast<std::size_t>(n)] ==
                  doctest::Approx(gho_uncoupled_berry_phase(0.7, t * p.omega1(), n)).epsilon(1e-10));
        }
        CHECK(ph.delta_phi == doctest::Approx(hannay_closed_form(0.7, t * p.omega2())).epsilon(1e-10));
    }
}

TEST_CASE("property: coupled one-form matches the time-domain report") {
    gen::Rng rng(31);
    static const int pairs[][2] = {{1, 1}, {2, 1}, {1, 2}, {3, 2}};
    for (int trial = 0; trial < 12; ++trial) {
        const int pick = rng.integer(0, 3);
        const StandardLoopParams p = params(pairs[pick][0], pairs[pick][1], rng.uniform(0.1, 0.9), rng.uniform(0.0, 0.9));
        const CoupledGHOHybrid m{p};
        const LoopSpec loop = coupled_gho_loop(m, 2048);
        const OneFormPhases ph = phases_from_one_form(coupled_gho_one_form(m, loop), loop);
        const HybridPhaseReport r = standard_loop_report(p, 2048, PeriodBranch::CommonPeriod);
        for (int n = 0; n <= p.n_level; ++n) {
            const double want = r.gamma.at(n);
            CHECK(std::abs(ph.gamma[static_cast<std::size_t>(n)] - want) < 1e-9 * std::max(1.0, std::abs(want)));
        }
        CHECK(std::abs(ph.delta_phi - r.delta_phi) < 1e-9 * std::max(1.0, std::abs(r.delta_phi)));
    }
}

TEST_CASE("coupled one-form error paths") {
    StandardLoopParams p = params(1, 1, 0.5, 0.0);
    const LoopSpec loop = coupled_gho_loop(CoupledGHOHybrid{p}, 64);
    p.k = 1.01 * elliptic_bound(p).k_max;
    CHECK(kind_of([&] { coupled_gho_one_form(CoupledGHOHybrid{p}, loop); }) == ErrorKind::EllipticViolation);
    p.k = 0.0;
    CHECK(kind_of([&] { coupled_gho_one_form(CoupledGHOHybrid{p}, circle_loop(1.0, 0.0, 1.0, 64)); }) ==
          ErrorKind::LengthMismatch);
}

TEST_CASE("standard loop report branches") {
    const StandardLoopParams free = params(2, 1, kEps, 0.0);
    const HybridPhaseReport r0 = standard_loop_report(free, 1024);
    CHECK(r0.branch == PeriodBranch::PerSubsystemPeriod);
    CHECK(r0.gamma_I_part == 0.0);
    CHECK(r0.delta_phi_I_part == 0.0);
    CHECK_FALSE(std::signbit(r0.delta_phi_I_part));
    // one cycle of oscillator 2 at eps = sqrt(3)/2
    CHECK(r0.delta_phi_0_part == doctest::Approx(-kPi).epsilon(1e-10));
    CHECK(r0.gamma_0_part == doctest::Approx(3.0 * kPi / 2).epsilon(1e-12));
    CHECK(r0.gamma_0_quadrature == doctest::Approx(r0.gamma_0_part).epsilon(1e-10));
    CHECK(r0.gamma.size() == 2);

    const HybridPhaseReport common = standard_loop_report(free, 1024, PeriodBranch::CommonPeriod);
    CHECK(common.branch == PeriodBranch::CommonPeriod);
    CHECK(common.gamma_0_part == doctest::Approx(2.0 * r0.gamma_0_part));

    const StandardLoopParams coupled = params(2, 1, kEps, 0.3);
    CHECK(standard_loop_report(coupled, 1024).branch == PeriodBranch::CommonPeriod);
    CHECK(kind_of([&] { standard_loop_report(coupled, 1024, PeriodBranch::PerSubsystemPeriod); }) ==
          ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { standard_loop_report(coupled, 8); }) == ErrorKind::TooFewSamples);
    CHECK(kind_of([&] { standard_loop_report(params(2, 1, kEps, 1.2), 1024); }) == ErrorKind::EllipticViolation);
}

TEST_CASE("coupling corrections share one integral") {
    const StandardLoopParams p = params(2, 1, 0.5, 0.4);
    const HybridPhaseReport r = standard_loop_report(p, 2048);
    CHECK(r.gamma_I_part == doctest::Approx(-r.delta_phi_I_part * p.j_action / p.hbar).epsilon(1e-14));
    CHECK(r.gamma.at(1) == doctest::Approx(r.gamma_0_part + r.gamma_I_part));
    CHECK(r.delta_phi == doctest::Approx(r.delta_phi_0_part + r.delta_phi_I_part));
    CHECK(r.gamma_I_part > 0.0);
    CHECK(r.delta_phi_I_part < 0.0);
}

TEST_CASE("weak-coupling approximation converges at ratio 2/1") {
    double previous = 1.0;
    for (double fraction : {0.1, 0.01}) {
        const StandardLoopParams p = params(2, 1, kEps, fraction);
        const HybridPhaseReport r = standard_loop_report(p, 4096);
        const double rel = std::abs(r.gamma_I_approx / r.gamma_I_part - 1.0);
        CHECK(rel < previous);
        previous = rel;
    }
    CHECK(previous < 1e-3);
}

TEST_CASE("full quantum phase at K = 0 splits into the two oscillators") {
    const StandardLoopParams p = params(2, 1, 0.6, 0.0);
    const auto [l1, l2] = standard_parameter_loops(p, 2048);
    const double t = p.common_period();
    for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
            const double want = gho_uncoupled_berry_phase(0.6, t * p.omega1(), m) +
                                gho_uncoupled_berry_phase(0.6, t * p.omega2(), n);
            CHECK(full_quantum_phase(l1, l2, 0.0, m, n).value == doctest::Approx(want).epsilon(1e-10));
            CHECK(bo_full_quantum_phase(l1, l2, 0.0, n, m, 1.0).gamma == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("property: full quantum phase is symmetric under exchanging the loops") {
    gen::Rng rng(32);
    for (int trial = 0; trial < 10; ++trial) {
        const StandardLoopParams p = params(rng.integer(1, 2), 1, rng.uniform(0.1, 0.8), rng.uniform(0.0, 0.8));
        const auto [l1, l2] = standard_parameter_loops(p, 512);
        const int m = rng.integer(0, 3);
        const int n = rng.integer(0, 3);
        const double a = full_quantum_phase(l1, l2, p.k, m, n).value;
        const double b = full_quantum_phase(l2, l1, p.k, m, n).value;
        CHECK(std::abs(a - b) < 1e-10 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("Born-Oppenheimer parts add up") {
    const StandardLoopParams p = params(2, 1, 0.5, 0.3);
    const auto [l1, l2] = standard_parameter_loops(p, 1024);
    const BornOppenheimerPhase bo = bo_full_quantum_phase(l1, l2, p.k, 1, 0, 1.0);
    CHECK(bo.gamma == doctest::Approx(bo.light_part + bo.heavy_part));
    CHECK(bo.quadrature_error < 1e-8);
    CHECK(kind_of([&] { bo_full_quantum_phase(l1, l2, p.k, 0, 0, 0.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("full quantum phase error paths") {
    const StandardLoopParams p = params(1, 1, 0.5, 0.0);
    const auto [l1, l2] = standard_parameter_loops(p, 64);
    const auto [s1, s2] = standard_parameter_loops(p, 128);
    CHECK(kind_of([&] { full_quantum_phase(l1, s2, 0.0, 0, 0); }) == ErrorKind::LengthMismatch);
    CHECK(kind_of([&] { full_quantum_phase(l1, l2, 100.0, 0, 0); }) == ErrorKind::ModeCollapse);
    CHECK(kind_of([&] { bo_full_quantum_phase(l1, l2, 100.0, 0, 0, 1.0); }) == ErrorKind::EllipticViolation);
    const LoopSpec plane = make_loop([](double) { return Vec{{1.0, 1.0}}; }, 2.0 * kPi, 64);
    CHECK(kind_of([&] { full_quantum_phase(l1, plane, 0.0, 0, 0); }) == ErrorKind::LengthMismatch);
    CHECK(kind_of([&] { full_quantum_phase(l1, circle_loop(1.0, 0.0, 2.0 * kPi, 64), 0.0, 0, 0); }) ==
          ErrorKind::EllipticViolation);
}
