#pragma once

#include "holonomy/manifold.hpp"
#include "holonomy/quantum_geometry.hpp"

#include <Eigen/Core>

#include <array>

namespace holonomy {

// Two-level conventions: component 0 is |->, component 1 is |+>, and
// sigma_3 |+> = +|+>.

/// -mu sigma.B as a 2x2 matrix in the (|->, |+>) ordering.
CMat spin_hamiltonian(const Eigen::Vector3d& b, double mu);

/// Spin in a magnetic field as a family over X = (B1, B2, B3).
HamiltonianFamily spin_family(double mu);

struct SpinLevel {
    double energy = 0.0;
    CVec state;
};

/// Closed-form eigenpairs of -mu sigma.B: level 1 has energy -mu B, level 2 +mu B.
///   |E1> = sqrt((B + B3)/2B) |+> + (B1 + i B2)/sqrt(2B(B + B3)) |->
///   |E2> = -sqrt((B - B3)/2B) |+> + (B1 + i B2)/sqrt(2B(B - B3)) |->
/// On the B3 axis e^{i phi} is taken as 1 (limit B1 -> 0+). Throws ZeroField.
std::array<SpinLevel, 2> spin_eigensystem(const Eigen::Vector3d& b, double mu);

/// Spin field model: moment and a loop in (B1, B2, B3).
struct SpinFieldModel {
    double mu = 1.0;
    LoopSpec b_loop;
};

/// Throws ZeroField if |B| vanishes anywhere on the loop.
void validate(const SpinFieldModel& model);

struct SpinOscillatorEffective {
    double b_total = 0.0;  ///< sqrt(B^2 + lambda^2 Q^2)
    double theta = 0.0;    ///< cos Theta = lambda Q / B_tot
    double e_plus = 0.0;   ///< +mu B_tot
    double e_minus = 0.0;  ///< -mu B_tot
};

/// Effective field seen by the spin when coupled to the oscillator coordinate Q.
SpinOscillatorEffective spin_oscillator_effective(double b, double lambda, double q, double mu);

/// Second-order expansion B + lambda^2 Q^2 / (2B) of B_tot.
double spin_oscillator_weak_coupling_field(double b, double lambda, double q);

/// Spin-oscillator hybrid: field B (cos phi, sin phi, 0) with azimuth loop
/// phi(t), classical triple loop (X, Y, Z), coupling lambda, and actions.
struct SpinOscillatorHybrid {
    double mu = 1.0;
    double lambda = 0.0;
    double b = 1.0;
    LoopSpec phi_loop;  // dim 1
    LoopSpec x_loop;    // dim 3
    double i_plus = 0.5;
    double i_minus = 0.5;
    double j_action = 1.0;
};

/// Omega^2 = [X + mu lambda^2 (I+ - I-)/B] Z - Y^2 at the given triple.
double spin_oscillator_omega_squared(const SpinOscillatorHybrid& m, const GHOTriple& x);

/// Largest lambda Q_typ / B over the loop, with Q_typ = sqrt(2 Z J / Omega).
double spin_oscillator_coupling_ratio(const SpinOscillatorHybrid& m);

/// Energy of level n of the quantum GHO displaced by the coupling K q Q:
/// (n + 1/2) hbar omega - Z1 K^2 Q^2 / (2 omega^2). Throws EllipticViolation.
double gho_effective_energy(const GHOTriple& x1, double k, double q, int n, double hbar);

/// Coupled quantum-classical GHO hybrid on the standard parameter family.
struct CoupledGHOHybrid {
    StandardLoopParams params;
};

struct NormalModeSplit {
    double beta = 0.0;
    double sin_beta = 0.0;
    double cos_beta = 1.0;
    double omega1 = 0.0;  ///< upper normal frequency
    double omega2 = 0.0;  ///< lower normal frequency
};

/// Normal modes of two GHOs coupled through K q Q. Throws ModeCollapse when
/// the lower frequency squared is not strictly positive, EllipticViolation if
/// either triple is not elliptic.
NormalModeSplit normal_mode_split(const GHOTriple& x1, const GHOTriple& x2, double k);

}  // namespace holonomy
