#pragma once

#include "holonomy/manifold.hpp"
#include "holonomy/quantum_geometry.hpp"

#include <vector>

namespace holonomy {

inline constexpr std::size_t kDefaultStepsPerSample = 32;
/// Smallest final-level fidelity |<E_k(X(T))|psi>|^2 accepted as adiabatic.
inline constexpr double kAdiabaticFidelity = 0.99;

struct QuantumPropagation {
    CVec psi_initial;
    CVec psi_final;
    double dynamical_phase = 0.0;  ///< integral of E_k(X(t)) / hbar over the dilated run
    double norm_drift = 0.0;       ///< largest per-step | |psi| - 1 | before renormalization
    double slowness = 1.0;
    double final_fidelity = 0.0;
    /// Geometric phase tracked sample by sample in the reference gauge; used
    /// to pick the 2 pi branch of the endpoint phase.
    double tracked_geometric_phase = 0.0;
    std::size_t level = 0;
};

/// Integrates i hbar dpsi/dt = H(X(t / slowness)) psi from |E_k(X(0))> over one
/// traversal of the loop (total time slowness * period) with classical RK4,
/// renormalizing each step. Step = loop spacing * slowness / steps_per_sample.
/// Throws GapTooSmall, NonAdiabatic.
QuantumPropagation propagate_quantum(const HamiltonianFamily& family, const LoopSpec& loop, std::size_t level,
                                     double slowness, std::size_t steps_per_sample = kDefaultStepsPerSample,
                                     double hbar = 1.0);

/// gamma = arg <initial|psi_final> + dynamical_phase, placed on the 2 pi branch
/// nearest the tracked phase. Throws OverlapTooSmall if |<initial|psi_final>| <= 0.9.
double extract_geometric_phase(const QuantumPropagation& prop, const CVec& initial_state);

struct ClassicalSample {
    double t = 0.0;
    double q = 0.0;
    double p = 0.0;
    double action = 0.0;  ///< J from the frozen-parameter elliptic transform
    double angle = 0.0;   ///< phi, unwound
};

struct ClassicalTrajectory {
    std::vector<ClassicalSample> samples;  ///< one per loop sample (dilated times)
    double dynamical_angle = 0.0;          ///< integral of Omega(t) over the run
    double slowness = 1.0;

    /// max_t |J(t)/J(0) - 1|
    double action_drift() const;
};

/// Integrates Q' = Y Q + Z P, P' = -X Q - Y P with (X, Y, Z) = x_loop(t / slowness)
/// over one traversal, with classical RK4. J and phi are read through
/// Q = sqrt(2 Z J / Omega) cos phi, P = -sqrt(2 Z J / Omega)(Y/Z cos phi + Omega/Z sin phi)
/// using the frozen parameters at each loop sample. Throws EllipticViolation.
ClassicalTrajectory propagate_classical(const LoopSpec& x_loop, double q0, double p0, double slowness,
                                        std::size_t steps_per_sample = kDefaultStepsPerSample);

/// phi(T) - phi(0) - integral of Omega dt.
double extract_hannay_angle(const ClassicalTrajectory& traj);

}  // namespace holonomy
