#pragma once

#include "holonomy/manifold.hpp"
#include "holonomy/models.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace holonomy {

/// One-form on a loop's coordinate space, stored as its affine expansion in
/// the actions about an operating point (I*, J*):
///   A = e + sum_k I_k c_k + J d
/// Each coefficient is a dim x samples matrix of covectors. Where the
/// underlying form is not affine (I.J products, I inside Omega) the
/// coefficients are the exact partial derivatives at the operating point.
struct LinearOneForm {
    Eigen::MatrixXd constant;
    std::vector<Eigen::MatrixXd> action_coeffs;
    Eigen::MatrixXd j_coeff;
    Vec operating_actions;
    double operating_j = 0.0;
};

struct OneFormPhases {
    std::vector<double> gamma;      ///< loop integral of c_k
    double delta_phi = 0.0;         ///< minus the loop integral of d
    double constant_part = 0.0;     ///< loop integral of e (diagnostic)
    double quadrature_error = 0.0;  ///< largest stride-2 estimate among the integrals
};

/// gamma_k = d/dI_k of the loop integral, delta_phi = -d/dJ of it; both are
/// plain coefficient integrals. Throws LengthMismatch.
OneFormPhases phases_from_one_form(const LinearOneForm& form, const LoopSpec& loop);

/// Field azimuth winding `windings` times over the period. Points hold phi
/// reduced to [-pi, pi] so the loop closes; velocities are the exact dphi/dt.
LoopSpec azimuth_loop(double period, std::size_t n_samples, int windings = 1);

/// Coordinate loop (phi, X, Y, Z) of the spin-oscillator hybrid.
LoopSpec spin_oscillator_loop(const SpinOscillatorHybrid& m);

/// Largest lambda sqrt(2 Z J / Omega) / B accepted as weak coupling.
inline constexpr double kWeakCouplingLimit = 0.3;

/// A = -(I+ + I-)/2 dphi - (Y J / 2Z) d(Z / Omega) on (phi, X, Y, Z). The I+-
/// coefficients carry -+ mu lambda^2 Z^2 J / (4 Omega^3 B) d(Y/Z) from the
/// action dependence of Omega. Action order: (I+, I-).
/// Throws OmegaImaginary, WeakCouplingViolated.
LinearOneForm spin_oscillator_one_form(const SpinOscillatorHybrid& m);

/// Coordinate loop (X1, Y1, Z1, X2, Y2, Z2) of the coupled-GHO hybrid over the
/// common period.
LoopSpec coupled_gho_loop(const CoupledGHOHybrid& m, std::size_t n_samples = kDefaultLoopSamples);

/// A = sum_n I_n [(2n+1) Z1/(4 w) + K^2 Z1^2 Z2 J / (2 hbar w^4 Omega)] d(Y1/Z1)
///     - (Y2 J / 2 Z2) d(Z2 / Omega)
/// with Omega^2 = (w^2 X2 - Z1 K^2) Z2 / w^2 - Y2^2. Quantum actions are levels
/// 0..n_level with operating point I_n = hbar for n = n_level. Throws
/// EllipticViolation naming the sample.
LinearOneForm coupled_gho_one_form(const CoupledGHOHybrid& m, const LoopSpec& loop);

enum class PeriodBranch { CommonPeriod, PerSubsystemPeriod };

std::string_view to_string(PeriodBranch b) noexcept;

struct HybridPhaseReport {
    std::map<int, double> gamma;  ///< level -> gamma_n = gamma_n0 + gamma_I
    double delta_phi = 0.0;
    double gamma_0_part = 0.0;  ///< gamma_n0 for n = n_level (closed form)
    double gamma_I_part = 0.0;
    double delta_phi_0_part = 0.0;
    double delta_phi_I_part = 0.0;
    double gamma_0_quadrature = 0.0;  ///< gamma_n0 by quadrature, same level
    double gamma_I_approx = 0.0;
    double delta_phi_I_approx = 0.0;
    double coupling_d = 0.0;
    double elliptic_margin = 0.0;
    double quadrature_error = 0.0;
    PeriodBranch branch = PeriodBranch::CommonPeriod;
};

/// Closed-form gamma_n0 = (2n+1)(1 - sqrt(1-eps^2)) T w1 / (4 sqrt(1-eps^2)).
double gho_uncoupled_berry_phase(double epsilon, double t_omega1, int n);

/// Berry phases, Hannay angle and their coupling corrections for the standard
/// parameter family, integrating the explicit time-domain integrands. By
/// default K = 0 uses each oscillator's own period and K > 0 the common
/// period; `branch` forces one (per-subsystem only at K = 0).
/// Throws EllipticViolation, InvalidArgument.
HybridPhaseReport standard_loop_report(const StandardLoopParams& p,
                                       std::size_t n_samples = kDefaultLoopSamples,
                                       std::optional<PeriodBranch> branch = std::nullopt);

struct EllipticBound {
    double d_max = 0.0;
    double k_max = 0.0;
};

/// D_max = sqrt((1 - eps^2)/2) / (1 + eps), K_max = D_max sqrt(2 mu1 mu2 A1 A2 (1 - eps^2)).
EllipticBound elliptic_bound(const StandardLoopParams& p);

/// Berry phase gamma_mn of the fully quantum coupled oscillators; m counts
/// quanta of the upper normal mode, n of the lower one. Throws ModeCollapse.
QuadratureResult full_quantum_phase(const LoopSpec& x1_loop, const LoopSpec& x2_loop, double k, int m,
                                    int n);

struct BornOppenheimerPhase {
    double gamma = 0.0;
    double light_part = 0.0;  ///< d(Y1/Z1) terms
    double heavy_part = 0.0;  ///< d(Y2/Z2) term
    double quadrature_error = 0.0;
};

/// gamma_mn with the heavy oscillator (x2, level m) treated in the
/// Born-Oppenheimer approximation around the light one (x1, level n).
/// Throws EllipticViolation.
BornOppenheimerPhase bo_full_quantum_phase(const LoopSpec& x1_loop, const LoopSpec& x2_loop, double k,
                                           int m, int n, double hbar);

}  // namespace holonomy
