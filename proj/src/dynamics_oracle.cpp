#include "holonomy/dynamics_oracle.hpp"

#include "holonomy/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace holonomy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_run(double slowness, std::size_t steps_per_sample) {
    if (!(slowness > 0.0) || !std::isfinite(slowness)) {
        throw Error(ErrorKind::InvalidArgument, "slowness must be positive and finite");
    }
    if (steps_per_sample == 0) throw Error(ErrorKind::InvalidArgument, "steps_per_sample must be positive");
}

}  // namespace

QuantumPropagation propagate_quantum(const HamiltonianFamily& family, const LoopSpec& loop, std::size_t level,
                                     double slowness, std::size_t steps_per_sample, double hbar) {
    check_run(slowness, steps_per_sample);
    if (!(hbar > 0.0)) throw Error(ErrorKind::InvalidArgument, "hbar must be positive");
    const EigenFrame frame = eigenframe_along_loop(family, loop);
    if (level >= frame.levels()) throw Error(ErrorKind::InvalidArgument, "level index out of range");
    const std::size_t gauge = reference_component(frame, level);
    const auto k = static_cast<Eigen::Index>(level);

    const std::size_t m = loop.intervals();
    const double interval = slowness * loop.spacing();
    const double h = interval / static_cast<double>(steps_per_sample);
    const Complex minus_i_over_hbar(0.0, -1.0 / hbar);

    QuantumPropagation out;
    out.slowness = slowness;
    out.level = level;
    out.psi_initial = frame.vector(0, level);
    CVec psi = out.psi_initial;

    auto hamiltonian_at = [&](double tau) { return family(loop.at(tau / slowness)); };
    auto rhs = [&](const CMat& ham, const CVec& v) -> CVec { return minus_i_over_hbar * (ham * v); };

    double dyn = 0.0;
    double tracked = 0.0;
    double prev_geo = std::arg(fix_gauge(frame.vector(0, level), gauge).dot(psi));
    CMat h_start = hamiltonian_at(0.0);
    for (std::size_t j = 0; j < m; ++j) {
        const double tau0 = interval * static_cast<double>(j);
        for (std::size_t s = 0; s < steps_per_sample; ++s) {
            const double tau = tau0 + h * static_cast<double>(s);
            const double tau_end = (s + 1 == steps_per_sample) ? interval * static_cast<double>(j + 1) : tau + h;
            const CMat h_mid = hamiltonian_at(tau + 0.5 * h);
            const CMat h_end = hamiltonian_at(tau_end);
            const CVec k1 = rhs(h_start, psi);
            const CVec k2 = rhs(h_mid, psi + 0.5 * h * k1);
            const CVec k3 = rhs(h_mid, psi + 0.5 * h * k2);
            const CVec k4 = rhs(h_end, psi + h * k3);
            psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            const double norm = psi.norm();
            out.norm_drift = std::max(out.norm_drift, std::abs(norm - 1.0));
            psi /= norm;
            h_start = h_end;
        }
        dyn += 0.5 * interval * (frame.energies(static_cast<Eigen::Index>(j), k) +
                                 frame.energies(static_cast<Eigen::Index>(j + 1), k)) / hbar;
        const double geo = std::arg(fix_gauge(frame.vector(j + 1, level), gauge).dot(psi)) + dyn;
        tracked += wrap_angle(geo - prev_geo);
        prev_geo = geo;
    }

    out.psi_final = psi;
    out.dynamical_phase = dyn;
    out.tracked_geometric_phase = tracked;
    out.final_fidelity = std::norm(frame.vector(m, level).dot(psi));
    if (out.final_fidelity < kAdiabaticFidelity) {
        std::ostringstream os;
        os << "final fidelity " << out.final_fidelity << " < " << kAdiabaticFidelity;
        throw Error(ErrorKind::NonAdiabatic, os.str());
    }
    return out;
}

double extract_geometric_phase(const QuantumPropagation& prop, const CVec& initial_state) {
    const Complex overlap = initial_state.dot(prop.psi_final);
    if (!(std::abs(overlap) > 0.9)) {
        std::ostringstream os;
        os << "|<initial|final>| = " << std::abs(overlap);
        throw Error(ErrorKind::OverlapTooSmall, os.str());
    }
    const double raw = std::arg(overlap) + prop.dynamical_phase;
    const double turns = std::round((prop.tracked_geometric_phase - raw) / kTwoPi);
    return raw + kTwoPi * turns;
}

double ClassicalTrajectory::action_drift() const {
    if (samples.empty()) return 0.0;
    const double j0 = samples.front().action;
    double worst = 0.0;
    for (const auto& s : samples) worst = std::max(worst, std::abs(s.action / j0 - 1.0));
    return worst;
}

ClassicalTrajectory propagate_classical(const LoopSpec& x_loop, double q0, double p0, double slowness,
                                        std::size_t steps_per_sample) {
    check_run(slowness, steps_per_sample);
    if (x_loop.dim() != 3) throw Error(ErrorKind::LengthMismatch, "oscillator loop must be (X, Y, Z)");
    const std::size_t m = x_loop.intervals();
    std::vector<double> omega(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        const auto x = x_loop.point(j);
        const double w2 = x(0) * x(2) - x(1) * x(1);
        if (!(w2 > 0.0) || !(x(2) > 0.0)) throw EllipticViolationError(j, w2, "X Z - Y^2");
        omega[j] = std::sqrt(w2);
    }

    const double interval = slowness * x_loop.spacing();
    const double h = interval / static_cast<double>(steps_per_sample);
    auto flow = [](const Vec& x, const Eigen::Vector2d& s) {
        return Eigen::Vector2d(x(1) * s(0) + x(2) * s(1), -x(0) * s(0) - x(1) * s(1));
    };
    auto params_at = [&](double tau) { return x_loop.at(tau / slowness); };

    auto observe = [&](std::size_t j, const Eigen::Vector2d& s, double t) {
        const auto x = x_loop.point(j);
        const double a = s(0);
        const double b = -(x(2) * s(1) + x(1) * s(0)) / omega[j];
        ClassicalSample out;
        out.t = t;
        out.q = s(0);
        out.p = s(1);
        out.action = omega[j] * (a * a + b * b) / (2.0 * x(2));
        out.angle = std::atan2(b, a);
        return out;
    };

    ClassicalTrajectory traj;
    traj.slowness = slowness;
    traj.samples.reserve(m + 1);
    Eigen::Vector2d state(q0, p0);
    traj.samples.push_back(observe(0, state, 0.0));

    Vec x_start = params_at(0.0);
    double dyn = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double tau0 = interval * static_cast<double>(j);
        for (std::size_t s = 0; s < steps_per_sample; ++s) {
            const double tau = tau0 + h * static_cast<double>(s);
            const double tau_end = (s + 1 == steps_per_sample) ? interval * static_cast<double>(j + 1) : tau + h;
            const Vec x_mid = params_at(tau + 0.5 * h);
            const Vec x_end = params_at(tau_end);
            const Eigen::Vector2d k1 = flow(x_start, state);
            const Eigen::Vector2d k2 = flow(x_mid, state + 0.5 * h * k1);
            const Eigen::Vector2d k3 = flow(x_mid, state + 0.5 * h * k2);
            const Eigen::Vector2d k4 = flow(x_end, state + h * k3);
            state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            x_start = x_end;
        }
        const double advance = 0.5 * interval * (omega[j] + omega[j + 1]);
        dyn += advance;
        ClassicalSample next = observe(j + 1, state, interval * static_cast<double>(j + 1));
        const double predicted = traj.samples.back().angle + advance;
        next.angle = predicted + wrap_angle(next.angle - predicted);
        traj.samples.push_back(next);
    }
    traj.dynamical_angle = dyn;
    return traj;
}

double extract_hannay_angle(const ClassicalTrajectory& traj) {
    if (traj.samples.size() < 2) return 0.0;
    return traj.samples.back().angle - traj.samples.front().angle - traj.dynamical_angle;
}

}  // namespace holonomy
