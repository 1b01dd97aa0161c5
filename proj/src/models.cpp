#include "holonomy/models.hpp"

#include "holonomy/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace holonomy {

CMat spin_hamiltonian(const Eigen::Vector3d& b, double mu) {
    CMat h(2, 2);
    h << Complex(mu * b(2), 0.0), Complex(-mu * b(0), -mu * b(1)),
         Complex(-mu * b(0), mu * b(1)), Complex(-mu * b(2), 0.0);
    return h;
}

HamiltonianFamily spin_family(double mu) {
    return {2, [mu](const Vec& x) { return spin_hamiltonian(Eigen::Vector3d(x(0), x(1), x(2)), mu); }, 1e-10};
}

std::array<SpinLevel, 2> spin_eigensystem(const Eigen::Vector3d& b, double mu) {
    const double mag = b.norm();
    if (!(mag > 0.0)) throw Error(ErrorKind::ZeroField, "spin eigensystem undefined at B = 0");
    const double rho = std::hypot(b(0), b(1));
    const Complex azimuth = rho > 0.0 ? Complex(b(0) / rho, b(1) / rho) : Complex(1.0, 0.0);
    // (B1 + i B2)/sqrt(2B(B -+ B3)) rewritten as e^{i phi} sqrt((B +- B3)/2B)
    const double up = std::sqrt(std::max(0.0, (mag + b(2)) / (2.0 * mag)));
    const double down = std::sqrt(std::max(0.0, (mag - b(2)) / (2.0 * mag)));
    std::array<SpinLevel, 2> out;
    out[0].energy = -mu * mag;
    out[0].state = CVec(2);
    out[0].state << azimuth * down, Complex(up, 0.0);
    out[1].energy = mu * mag;
    out[1].state = CVec(2);
    out[1].state << azimuth * up, Complex(-down, 0.0);
    return out;
}

void validate(const SpinFieldModel& model) {
    if (model.b_loop.dim() != 3) throw Error(ErrorKind::LengthMismatch, "B loop must be three dimensional");
    for (std::size_t j = 0; j < model.b_loop.size(); ++j) {
        if (!(model.b_loop.point(j).norm() > 0.0)) {
            std::ostringstream os;
            os << "|B| = 0 at sample " << j;
            throw Error(ErrorKind::ZeroField, os.str());
        }
    }
}

SpinOscillatorEffective spin_oscillator_effective(double b, double lambda, double q, double mu) {
    if (!(b > 0.0)) throw Error(ErrorKind::ZeroField, "field magnitude B must be positive");
    SpinOscillatorEffective out;
    out.b_total = std::hypot(b, lambda * q);
    out.theta = std::acos(lambda * q / out.b_total);
    out.e_plus = mu * out.b_total;
    out.e_minus = -mu * out.b_total;
    return out;
}

double spin_oscillator_weak_coupling_field(double b, double lambda, double q) {
    return b + lambda * lambda * q * q / (2.0 * b);
}

double spin_oscillator_omega_squared(const SpinOscillatorHybrid& m, const GHOTriple& x) {
    return (x.x + m.mu * m.lambda * m.lambda * (m.i_plus - m.i_minus) / m.b) * x.z - x.y * x.y;
}

double spin_oscillator_coupling_ratio(const SpinOscillatorHybrid& m) {
    double worst = 0.0;
    for (std::size_t j = 0; j < m.x_loop.size(); ++j) {
        const auto p = m.x_loop.point(j);
        const GHOTriple x{p(0), p(1), p(2)};
        const double w2 = spin_oscillator_omega_squared(m, x);
        if (!(w2 > 0.0)) return std::numeric_limits<double>::infinity();
        const double q_typ = std::sqrt(2.0 * x.z * m.j_action / std::sqrt(w2));
        worst = std::max(worst, std::abs(m.lambda) * q_typ / m.b);
    }
    return worst;
}

double gho_effective_energy(const GHOTriple& x1, double k, double q, int n, double hbar) {
    const double w2 = x1.omega_squared();
    if (!x1.elliptic()) throw EllipticViolationError(0, w2, "X1 Z1 - Y1^2");
    const double w = std::sqrt(w2);
    return (n + 0.5) * hbar * w - x1.z * k * k * q * q / (2.0 * w2);
}

NormalModeSplit normal_mode_split(const GHOTriple& x1, const GHOTriple& x2, double k) {
    if (!x1.elliptic()) throw EllipticViolationError(0, x1.omega_squared(), "X1 Z1 - Y1^2");
    if (!x2.elliptic()) throw EllipticViolationError(0, x2.omega_squared(), "X2 Z2 - Y2^2");
    const double w1 = x1.omega_squared();
    const double w2 = x2.omega_squared();
    const double split = w1 - w2;
    const double root = std::sqrt(split * split + 4.0 * k * k * x1.z * x2.z);
    const double lower_sq = 0.5 * (w1 + w2 - root);
    if (!(lower_sq > 0.0)) {
        std::ostringstream os;
        os << "lower normal frequency squared = " << lower_sq;
        throw Error(ErrorKind::ModeCollapse, os.str());
    }
    NormalModeSplit out;
    out.omega1 = std::sqrt(0.5 * (w1 + w2 + root));
    out.omega2 = std::sqrt(lower_sq);
    if (root == 0.0) {
        // decoupled and degenerate: keep the oscillators as the modes
        out.sin_beta = 0.0;
        out.cos_beta = 1.0;
    } else {
        out.sin_beta = std::sqrt(std::max(0.0, (-split + root) / (2.0 * root)));
        out.cos_beta = std::sqrt(std::max(0.0, (split + root) / (2.0 * root)));
    }
    out.beta = std::atan2(out.sin_beta, out.cos_beta);
    return out;
}

}  // namespace holonomy
