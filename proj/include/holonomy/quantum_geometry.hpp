#pragma once

#include "holonomy/manifold.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace holonomy {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

/// Parameterized Hermitian matrix X -> H(X) of fixed dimension.
struct HamiltonianFamily {
    std::size_t dim = 0;
    std::function<CMat(const Vec&)> eval;
    double hermiticity_tol = 1e-10;

    /// Evaluates H(X) and enforces dimension and Hermiticity (tolerance scaled
    /// by max(1, max|H_ij|)).
    CMat operator()(const Vec& x) const;
};

/// Eigenvalues ascending; column k of `vectors` is the eigenvector of level k.
struct Eigensystem {
    Eigen::VectorXd energies;
    CMat vectors;
};

Eigensystem hermitian_eigensystem(const CMat& h);

/// Eigen-decomposition along a loop, phase-aligned sample to sample.
struct EigenFrame {
    LoopSpec loop;
    Eigen::MatrixXd energies;    // (M + 1) x N, ascending per row
    std::vector<CMat> vectors;   // M + 1 entries, columns orthonormal
    double min_gap = 0.0;

    std::size_t levels() const noexcept { return static_cast<std::size_t>(energies.cols()); }
    CVec vector(std::size_t sample, std::size_t level) const {
        return vectors[sample].col(static_cast<Eigen::Index>(level));
    }
};

/// Default gap tolerance: 1e-9 times the largest |E| seen along the loop.
inline constexpr double kRelativeGapTolerance = 1e-9;

/// Diagonalizes the family at every loop sample, sorts levels ascending and
/// removes the phase of the overlap with the previous sample. The closing sample
/// is aligned to sample M - 1, so the holonomy survives in <v(M)|v(0)>.
/// gap_tol <= 0 selects the relative default. Throws GapTooSmall, HermiticityViolation.
EigenFrame eigenframe_along_loop(const HamiltonianFamily& family, const LoopSpec& loop,
                                 double gap_tol = 0.0);

/// Basis component used to fix the phase of level k along the whole loop: the
/// one whose smallest modulus over the loop is largest (ties prefer the higher
/// index). A gauge in which that component is real and positive is single
/// valued on the loop.
std::size_t reference_component(const EigenFrame& frame, std::size_t level);

/// Multiplies v by a unit phase so that component `component` is real and >= 0.
CVec fix_gauge(const CVec& v, std::size_t component);

struct BerryHannay {
    double gamma = 0.0;          ///< accumulated Berry phase, i * loop integral of <E|dE>
    double delta_theta = 0.0;    ///< Hannay angle of the classicalized system, = -gamma
    double gamma_wrapped = 0.0;  ///< gamma reduced to (-pi, pi]
    std::size_t gauge_component = 0;
};

/// Discrete Wilson loop for level k: gamma = -Im log prod_j <u(j)|u(j+1)>, with
/// the per-step phases accumulated in the reference-component gauge so that
/// the result is unreduced (multi-cycle loops give multiples, phases beyond pi
/// survive). Independent of the phases carried by the frame's vectors.
BerryHannay berry_and_hannay(const EigenFrame& frame, std::size_t level,
                             std::optional<std::size_t> gauge_component = std::nullopt);

/// Closed-form spin Hannay angles on a loop in B-space:
///   level 1: -loop integral of (B2 dB1 - B1 dB2) / (2B (B + B3))
///   level 2: -loop integral of (B2 dB1 - B1 dB2) / (2B (B - B3))
/// Throws PoleProximity if B -/+ B3 < 1e-6 B anywhere on the loop.
QuadratureResult spin_hannay_closed_form_detail(const LoopSpec& b_loop, int level);
double spin_hannay_closed_form(const LoopSpec& b_loop, int level);

/// Real canonical pair of a state: psi_n = (q_n + i p_n) / sqrt(2 hbar).
struct CanonicalPair {
    Vec q;
    Vec p;
    double energy_check = 0.0;  ///< sum of p^2 + q^2, equal to 2 hbar |psi|^2
};

CanonicalPair classicalize(const CVec& psi, double hbar);

struct StokesVector {
    double s1 = 0.0;
    double s2 = 0.0;
    double s3 = 0.0;

    double norm_squared() const noexcept { return s1 * s1 + s2 * s2 + s3 * s3; }
};

/// Stokes vector of a normalized two-level state with components ordered
/// (|->, |+>). Throws NotNormalized.
StokesVector stokes_vector(const CVec& psi, double hbar);

/// Same, additionally checking -mu S.B against <psi|(-mu sigma.B)|psi>.
StokesVector stokes_vector(const CVec& psi, double hbar, double mu, const Eigen::Vector3d& b);

/// Action-angle coordinates in the instantaneous eigenbasis.
struct ActionAngle {
    Vec actions;  ///< I_k = hbar |<E_k|psi>|^2
    Vec angles;   ///< theta_k = -arg <E_k|psi>, in [0, 2 pi)
};

/// Columns of `eigenvectors` are |E_k>. Throws NotUnitary.
ActionAngle action_angle_transform(const CVec& psi, const CMat& eigenvectors, double hbar);

/// Inverse map (I, theta) -> (q, p) through the eigenvector coefficients.
CanonicalPair reconstruct(const ActionAngle& aa, const CMat& eigenvectors, double hbar);

/// Theta-averaged one-form <p d_X q>_theta evaluated on the direction dX at X.
/// The average uses 8 uniform points per angle; d_X q is a central difference
/// with step max(1e-6 |X|, 1e-8) along dX / |dX|. Eigenvectors at X and X +- h
/// share the reference-component gauge of each level. Throws GapTooSmall.
double theta_averaged_one_form(const HamiltonianFamily& family, const Vec& actions, const Vec& x,
                               const Vec& dx, double hbar);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a) noexcept;

}  // namespace holonomy
