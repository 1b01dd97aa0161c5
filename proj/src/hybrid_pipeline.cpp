#include "holonomy/hybrid_pipeline.hpp"

#include "holonomy/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace holonomy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GHOTriple triple_at(const LoopSpec& loop, std::size_t j, Eigen::Index offset) {
    const auto p = loop.point(j);
    return {p(offset), p(offset + 1), p(offset + 2)};
}

void check_same_grid(const LoopSpec& a, const LoopSpec& b) {
    if (a.dim() != 3 || b.dim() != 3) throw Error(ErrorKind::LengthMismatch, "GHO loops must be (X, Y, Z)");
    if (a.size() != b.size() || a.period() != b.period()) {
        throw Error(ErrorKind::LengthMismatch, "GHO loops must share their time grid");
    }
}

// d(Y/Z) as a covector on (X, Y, Z) placed at `offset` in a dim-long covector.
void add_d_y_over_z(Eigen::Ref<Eigen::VectorXd> out, Eigen::Index offset, const GHOTriple& g, double w) {
    out(offset + 1) += w / g.z;
    out(offset + 2) -= w * g.y / (g.z * g.z);
}

}  // namespace

std::string_view to_string(PeriodBranch b) noexcept {
    return b == PeriodBranch::CommonPeriod ? "common-period" : "per-subsystem-period";
}

OneFormPhases phases_from_one_form(const LinearOneForm& form, const LoopSpec& loop) {
    OneFormPhases out;
    double err = 0.0;
    auto integrate = [&](const Eigen::MatrixXd& c) {
        const QuadratureResult r = closed_line_integral(c, loop);
        err = std::max(err, r.error_estimate);
        return r.value;
    };
    out.gamma.reserve(form.action_coeffs.size());
    for (const auto& c : form.action_coeffs) out.gamma.push_back(integrate(c));
    out.delta_phi = -integrate(form.j_coeff);
    out.constant_part = integrate(form.constant);
    out.quadrature_error = err;
    return out;
}

LoopSpec azimuth_loop(double period, std::size_t n_samples, int windings) {
    if (!(period > 0.0)) throw Error(ErrorKind::InvalidArgument, "period must be positive");
    const double rate = kTwoPi * windings / period;
    return make_loop([rate](double t) { return Vec::Constant(1, std::remainder(rate * t, kTwoPi)); },
                     [rate](double) { return Vec::Constant(1, rate); }, period, n_samples, 1);
}

LoopSpec spin_oscillator_loop(const SpinOscillatorHybrid& m) {
    if (m.phi_loop.dim() != 1) throw Error(ErrorKind::LengthMismatch, "phi loop must be one dimensional");
    if (m.x_loop.dim() != 3) throw Error(ErrorKind::LengthMismatch, "oscillator loop must be (X, Y, Z)");
    return concat(m.phi_loop, m.x_loop);
}

LinearOneForm spin_oscillator_one_form(const SpinOscillatorHybrid& m) {
    if (!(m.b > 0.0)) throw Error(ErrorKind::ZeroField, "field magnitude B must be positive");
    if (m.i_plus < 0.0 || m.i_minus < 0.0 || m.j_action < 0.0) {
        throw Error(ErrorKind::InvalidArgument, "actions must be nonnegative");
    }
    const LoopSpec loop = spin_oscillator_loop(m);
    const auto samples = static_cast<Eigen::Index>(loop.size());
    const double shift = m.mu * m.lambda * m.lambda * (m.i_plus - m.i_minus) / m.b;

    LinearOneForm form;
    form.constant = Eigen::MatrixXd::Zero(4, samples);
    form.action_coeffs.assign(2, Eigen::MatrixXd::Zero(4, samples));
    form.j_coeff = Eigen::MatrixXd::Zero(4, samples);
    form.operating_actions = Vec{{m.i_plus, m.i_minus}};
    form.operating_j = m.j_action;

    for (Eigen::Index j = 0; j < samples; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const GHOTriple g = triple_at(loop, js, 1);
        const double x_eff = g.x + shift;
        const double omega_sq = x_eff * g.z - g.y * g.y;
        if (!(omega_sq > 0.0) || !(g.z > 0.0)) {
            std::ostringstream os;
            os << "Omega^2 = " << omega_sq << " at sample " << j;
            throw Error(ErrorKind::OmegaImaginary, os.str());
        }
        const double omega = std::sqrt(omega_sq);
        const double q_typ = std::sqrt(2.0 * g.z * m.j_action / omega);
        if (std::abs(m.lambda) * q_typ > kWeakCouplingLimit * m.b) {
            std::ostringstream os;
            os << "lambda Q_typ / B = " << std::abs(m.lambda) * q_typ / m.b << " at sample " << j;
            throw Error(ErrorKind::WeakCouplingViolated, os.str());
        }

        // d(Z / Omega) on (phi, X, Y, Z)
        Eigen::Vector4d grad_omega(0.0, g.z / (2.0 * omega), -g.y / omega, x_eff / (2.0 * omega));
        Eigen::Vector4d d_z_over_omega = -g.z / omega_sq * grad_omega;
        d_z_over_omega(3) += 1.0 / omega;

        Eigen::Vector4d d_y_over_z = Eigen::Vector4d::Zero();
        add_d_y_over_z(d_y_over_z, 1, g, 1.0);

        const double kappa = m.mu * m.lambda * m.lambda * g.z * g.z * m.j_action /
                             (4.0 * omega_sq * omega * m.b);
        Eigen::Vector4d dphi(1.0, 0.0, 0.0, 0.0);

        form.action_coeffs[0].col(j) = -0.5 * dphi - kappa * d_y_over_z;
        form.action_coeffs[1].col(j) = -0.5 * dphi + kappa * d_y_over_z;
        form.j_coeff.col(j) = -(g.y / (2.0 * g.z)) * d_z_over_omega;
        form.constant.col(j) = (m.i_plus - m.i_minus) * kappa * d_y_over_z;
    }
    return form;
}

LoopSpec coupled_gho_loop(const CoupledGHOHybrid& m, std::size_t n_samples) {
    const auto [l1, l2] = standard_parameter_loops(m.params, n_samples);
    return concat(l1, l2);
}

LinearOneForm coupled_gho_one_form(const CoupledGHOHybrid& m, const LoopSpec& loop) {
    const StandardLoopParams& p = m.params;
    p.require_elliptic();
    if (loop.dim() != 6) throw Error(ErrorKind::LengthMismatch, "coupled GHO loop must be six dimensional");
    const auto samples = static_cast<Eigen::Index>(loop.size());
    const int levels = p.n_level + 1;
    const double k2 = p.k * p.k;

    LinearOneForm form;
    form.constant = Eigen::MatrixXd::Zero(6, samples);
    form.action_coeffs.assign(static_cast<std::size_t>(levels), Eigen::MatrixXd::Zero(6, samples));
    form.j_coeff = Eigen::MatrixXd::Zero(6, samples);
    form.operating_actions = Vec::Zero(levels);
    form.operating_actions(p.n_level) = p.hbar;
    form.operating_j = p.j_action;
    const double occupation = form.operating_actions.sum() / p.hbar;

    for (Eigen::Index j = 0; j < samples; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const GHOTriple g1 = triple_at(loop, js, 0);
        const GHOTriple g2 = triple_at(loop, js, 3);
        const double w2 = g1.omega_squared();
        if (!(w2 > 0.0) || !(g1.z > 0.0)) throw EllipticViolationError(js, w2, "X1 Z1 - Y1^2");
        const double big_sq = g2.x * g2.z - g2.y * g2.y - k2 * g1.z * g2.z / w2;
        if (!(big_sq > 0.0) || !(g2.z > 0.0)) throw EllipticViolationError(js, big_sq, "Omega^2");
        const double w = std::sqrt(w2);
        const double w4 = w2 * w2;
        const double big = std::sqrt(big_sq);

        Eigen::VectorXd grad_sq(6);
        grad_sq << k2 * g1.z * g1.z * g2.z / w4, -2.0 * k2 * g1.z * g2.z * g1.y / w4,
            k2 * g2.z * g1.y * g1.y / w4, g2.z, -2.0 * g2.y, g2.x - k2 * g1.z / w2;
        Eigen::VectorXd d_z2_over_big = -g2.z / (2.0 * big * big_sq) * grad_sq;
        d_z2_over_big(5) += 1.0 / big;

        Eigen::VectorXd g = Eigen::VectorXd::Zero(6);
        add_d_y_over_z(g, 0, g1, 1.0);

        const double coupling = k2 * g1.z * g1.z * g2.z / (2.0 * w4 * big);
        for (int n = 0; n < levels; ++n) {
            const double coeff = (2.0 * n + 1.0) * g1.z / (4.0 * w) + coupling * p.j_action / p.hbar;
            form.action_coeffs[static_cast<std::size_t>(n)].col(j) = coeff * g;
        }
        form.j_coeff.col(j) = occupation * coupling * g - (g2.y / (2.0 * g2.z)) * d_z2_over_big;
        form.constant.col(j) = -occupation * coupling * p.j_action * g;
    }
    return form;
}

double gho_uncoupled_berry_phase(double epsilon, double t_omega1, int n) {
    const double s = std::sqrt(1.0 - epsilon * epsilon);
    return (2.0 * n + 1.0) * (1.0 - s) * t_omega1 / (4.0 * s);
}

EllipticBound elliptic_bound(const StandardLoopParams& p) {
    if (!(p.epsilon >= 0.0 && p.epsilon < 1.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must lie in [0, 1)");
    const double one_minus = 1.0 - p.epsilon * p.epsilon;
    EllipticBound b;
    b.d_max = std::sqrt(one_minus / 2.0) / (1.0 + p.epsilon);
    b.k_max = b.d_max * std::sqrt(2.0 * p.mu1 * p.mu2 * p.a1 * p.a2 * one_minus);
    return b;
}

HybridPhaseReport standard_loop_report(const StandardLoopParams& p, std::size_t n_samples,
                                       std::optional<PeriodBranch> branch) {
    p.require_elliptic();
    if (n_samples < kMinLoopSamples) throw Error(ErrorKind::TooFewSamples, "n_samples below minimum");
    const double eps = p.epsilon;
    const double one_minus = 1.0 - eps * eps;
    const double root = std::sqrt(one_minus);
    const double d = p.coupling_d();
    const double d2 = d * d;
    const double w1 = p.omega1();
    const double w2 = p.omega2();
    const int n = p.n_level;

    HybridPhaseReport r;
    r.coupling_d = d;
    r.elliptic_margin = p.elliptic_margin();
    r.branch = branch.value_or(p.k == 0.0 ? PeriodBranch::PerSubsystemPeriod : PeriodBranch::CommonPeriod);
    if (r.branch == PeriodBranch::PerSubsystemPeriod && p.k != 0.0) {
        throw Error(ErrorKind::InvalidArgument, "per-subsystem periods apply only at K = 0");
    }

    // decoupled branch: each subsystem integrates over its own period
    const double t1 = r.branch == PeriodBranch::CommonPeriod ? p.common_period() : kTwoPi / w1;
    const double t2 = r.branch == PeriodBranch::CommonPeriod ? p.common_period() : kTwoPi / w2;

    std::vector<double> berry0(n_samples + 1);
    std::vector<double> hannay0(n_samples + 1);
    std::vector<double> coupling(n_samples + 1);
    for (std::size_t j = 0; j <= n_samples; ++j) {
        const double frac = static_cast<double>(j) / static_cast<double>(n_samples);
        const double c1 = std::cos(w1 * t1 * frac);
        const double s1 = std::sin(w1 * t1 * frac);
        const double c2 = std::cos(w2 * t2 * frac);
        const double s2 = std::sin(w2 * t2 * frac);
        const double u1 = 1.0 - eps * c1;
        const double u2 = 1.0 - eps * c2;

        // (2n+1) Z1/(4 w) d(Y1/Z1)/dt
        berry0[j] = -(2.0 * n + 1.0) * eps * (c1 - eps) * w1 / (4.0 * root * u1);

        // on the decoupled branch the two oscillators are not sampled at a common time
        const double big_sq = r.branch == PeriodBranch::CommonPeriod
                                  ? one_minus - 2.0 * d2 * u1 * u2
                                  : one_minus;
        if (!(big_sq > 0.0)) throw EllipticViolationError(j, big_sq, "Omega^2 / A2^2");
        const double big = p.a2 * std::sqrt(big_sq);
        const double big_dot = r.branch == PeriodBranch::CommonPeriod
                                   ? -d2 * p.a2 * p.a2 * eps * (s1 * w1 * u2 + u1 * s2 * w2) / big
                                   : 0.0;
        // (Y2 / 2 Z2) d(Z2 / Omega)/dt
        hannay0[j] = -p.a2 * eps * eps * s2 * s2 * w2 / (2.0 * big * u2) +
                     p.a2 * eps * s2 * big_dot / (2.0 * big * big);
        // K^2 Z1^2 Z2 / (2 w^4 Omega) d(Y1/Z1)/dt
        coupling[j] = -eps * w1 * p.a2 * p.a2 * d2 * u2 * (c1 - eps) / (p.a1 * one_minus * big);
    }

    const QuadratureResult g0 = periodic_trapezoid(berry0, t1);
    const QuadratureResult h0 = periodic_trapezoid(hannay0, t2);
    QuadratureResult s{0.0, 0.0};
    if (r.branch == PeriodBranch::CommonPeriod) s = periodic_trapezoid(coupling, t1);

    r.gamma_0_part = gho_uncoupled_berry_phase(eps, t1 * w1, n);
    r.gamma_0_quadrature = g0.value;
    r.gamma_I_part = (p.j_action / p.hbar) * s.value;
    r.delta_phi_0_part = h0.value;
    r.delta_phi_I_part = 0.0 - s.value;
    r.delta_phi = r.delta_phi_0_part + r.delta_phi_I_part;
    for (int level = 0; level <= n; ++level) {
        r.gamma[level] = (level == n) ? r.gamma_0_part + r.gamma_I_part
                                      : gho_uncoupled_berry_phase(eps, t1 * w1, level) + r.gamma_I_part;
    }
    const double approx_scale = eps * eps * p.a2 * d2 * t1 * w1 / (p.a1 * one_minus * root);
    r.gamma_I_approx = (r.branch == PeriodBranch::CommonPeriod) ? approx_scale * p.j_action / p.hbar : 0.0;
    r.delta_phi_I_approx = (r.branch == PeriodBranch::CommonPeriod) ? -approx_scale : 0.0;
    r.quadrature_error = std::max({g0.error_estimate, h0.error_estimate,
                                   (p.j_action / p.hbar) * s.error_estimate});
    return r;
}

QuadratureResult full_quantum_phase(const LoopSpec& x1_loop, const LoopSpec& x2_loop, double k, int m, int n) {
    check_same_grid(x1_loop, x2_loop);
    const LoopSpec loop = concat(x1_loop, x2_loop);
    const auto samples = static_cast<Eigen::Index>(loop.size());
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(6, samples);
    for (Eigen::Index j = 0; j < samples; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const GHOTriple g1 = triple_at(loop, js, 0);
        const GHOTriple g2 = triple_at(loop, js, 3);
        NormalModeSplit modes;
        try {
            modes = normal_mode_split(g1, g2, k);
        } catch (const Error& e) {
            std::ostringstream os;
            os << "sample " << j << ": " << e.what();
            throw Error(e.kind(), os.str());
        }
        const double c2 = modes.cos_beta * modes.cos_beta;
        const double s2 = modes.sin_beta * modes.sin_beta;
        const double upper = (2.0 * m + 1.0) / modes.omega1;
        const double lower = (2.0 * n + 1.0) / modes.omega2;
        const double a1 = g1.z / 4.0 * (upper * c2 + lower * s2);
        const double a2 = g2.z / 4.0 * (upper * s2 + lower * c2);
        add_d_y_over_z(coeff.col(j), 0, g1, a1);
        add_d_y_over_z(coeff.col(j), 3, g2, a2);
    }
    return closed_line_integral(coeff, loop);
}

BornOppenheimerPhase bo_full_quantum_phase(const LoopSpec& x1_loop, const LoopSpec& x2_loop, double k,
                                           int m, int n, double hbar) {
    check_same_grid(x1_loop, x2_loop);
    if (!(hbar > 0.0)) throw Error(ErrorKind::InvalidArgument, "hbar must be positive");
    const LoopSpec loop = concat(x1_loop, x2_loop);
    const auto samples = static_cast<Eigen::Index>(loop.size());
    Eigen::MatrixXd light = Eigen::MatrixXd::Zero(6, samples);
    Eigen::MatrixXd heavy = Eigen::MatrixXd::Zero(6, samples);
    const double k2 = k * k;
    for (Eigen::Index j = 0; j < samples; ++j) {
        const auto js = static_cast<std::size_t>(j);
        const GHOTriple g1 = triple_at(loop, js, 0);
        const GHOTriple g2 = triple_at(loop, js, 3);
        const double w2 = g1.omega_squared();
        if (!(w2 > 0.0) || !(g1.z > 0.0)) throw EllipticViolationError(js, w2, "X1 Z1 - Y1^2");
        const double big_sq = g2.x * g2.z - g2.y * g2.y - k2 * g1.z * g2.z / w2;
        if (!(big_sq > 0.0) || !(g2.z > 0.0)) throw EllipticViolationError(js, big_sq, "Omega^2");
        const double w = std::sqrt(w2);
        const double big = std::sqrt(big_sq);
        const double a1 = (2.0 * n + 1.0) * g1.z / (4.0 * w) +
                          (2.0 * m + 1.0) * k2 * g1.z * g1.z * g2.z / (4.0 * w2 * w2 * big);
        const double a2 = (2.0 * m + 1.0) * g2.z / (4.0 * big);
        add_d_y_over_z(light.col(j), 0, g1, a1);
        add_d_y_over_z(heavy.col(j), 3, g2, a2);
    }
    const QuadratureResult l = closed_line_integral(light, loop);
    const QuadratureResult h = closed_line_integral(heavy, loop);
    return {l.value + h.value, l.value, h.value, std::max(l.error_estimate, h.error_estimate)};
}

}  // namespace holonomy
