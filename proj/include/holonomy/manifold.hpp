#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace holonomy {

using Vec = Eigen::VectorXd;
using Curve = std::function<Vec(double)>;

/// A closed curve in parameter space sampled uniformly in time.
///
/// Samples run over j = 0..M with t_0 = 0 and t_M = period; the closing sample
/// x_M is stored equal to x_0. Each sample also carries the velocity dx/dt,
/// taken from an analytic derivative when one is supplied and otherwise from
/// spectral differentiation of the periodic samples.
class LoopSpec {
public:
    std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    double period() const noexcept { return period_; }
    std::size_t cycles() const noexcept { return cycles_; }
    /// Number of intervals M (sample count is M + 1).
    std::size_t intervals() const noexcept { return times_.size() - 1; }
    std::size_t size() const noexcept { return times_.size(); }
    double spacing() const noexcept { return period_ / static_cast<double>(intervals()); }

    double time(std::size_t j) const { return times_[j]; }
    Eigen::Ref<const Vec> point(std::size_t j) const { return points_.col(static_cast<Eigen::Index>(j)); }
    Eigen::Ref<const Vec> velocity(std::size_t j) const {
        return velocities_.col(static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& points() const noexcept { return points_; }
    const Eigen::MatrixXd& velocities() const noexcept { return velocities_; }

    /// Position at arbitrary t (wrapped into [0, period)). Exact when the loop
    /// was built from a curve, linear interpolation otherwise.
    Vec at(double t) const;
    bool has_curve() const noexcept { return static_cast<bool>(curve_); }

    friend LoopSpec make_loop(const Curve&, double, std::size_t, std::size_t);
    friend LoopSpec make_loop(const Curve&, const Curve&, double, std::size_t, std::size_t);
    friend LoopSpec reversed(const LoopSpec&);
    friend LoopSpec concat(const LoopSpec&, const LoopSpec&);

private:
    LoopSpec() = default;

    double period_ = 0.0;
    std::size_t cycles_ = 1;
    std::vector<double> times_;
    Eigen::MatrixXd points_;
    Eigen::MatrixXd velocities_;
    Curve curve_;
};

inline constexpr std::size_t kMinLoopSamples = 16;
inline constexpr std::size_t kDefaultLoopSamples = 4096;
inline constexpr double kClosureTolerance = 1e-12;

/// Samples f on t_j = j * period / n_samples for j = 0..n_samples. Velocities
/// come from spectral differentiation. Throws NotClosed / TooFewSamples.
LoopSpec make_loop(const Curve& f, double period, std::size_t n_samples, std::size_t cycles = 1);

/// Same, with the analytic time derivative df supplying the velocities.
LoopSpec make_loop(const Curve& f, const Curve& df, double period, std::size_t n_samples,
                   std::size_t cycles = 1);

/// The same curve traversed backwards: x'(t) = x(period - t).
LoopSpec reversed(const LoopSpec& loop);

/// Stacks two loops sampled on identical times into one loop of dim a + b.
LoopSpec concat(const LoopSpec& a, const LoopSpec& b);

/// Spectral derivative of uniformly sampled periodic data (columns are the M
/// distinct samples, the closing sample excluded).
Eigen::MatrixXd spectral_derivative(const Eigen::MatrixXd& samples, double period);

struct QuadratureResult {
    double value = 0.0;
    /// |full - stride-2| estimate; +inf when the interval count is odd.
    double error_estimate = 0.0;
};

/// Trapezoid value of the closed line integral of c(x) . dx, where column j of
/// `coefficients` is the covector at sample j. Accepts M or M + 1 columns.
QuadratureResult closed_line_integral(const Eigen::MatrixXd& coefficients, const LoopSpec& loop);

/// Periodic trapezoid rule for a scalar integrand sampled on a loop's grid:
/// M + 1 values including the closing one, which is ignored.
QuadratureResult periodic_trapezoid(const std::vector<double>& values, double period);

/// Parameter triple (X, Y, Z) of a generalized harmonic oscillator.
struct GHOTriple {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double omega_squared() const noexcept { return x * z - y * y; }
    bool elliptic() const noexcept { return z > 0.0 && omega_squared() > 0.0; }
};

/// Periodic parameter family shared by the two coupled oscillators:
///   X = A mu (1 + eps cos wt),  Y = -A eps sin wt,  Z = (A / mu)(1 - eps cos wt)
/// with w_i = n_i * base_rate, so the common period is 2 pi / base_rate.
struct StandardLoopParams {
    double a1 = 1.0;
    double a2 = 1.0;
    double mu1 = 1.0;
    double mu2 = 1.0;
    int n1 = 1;
    int n2 = 1;
    double base_rate = 1.0;
    double epsilon = 0.0;
    double k = 0.0;
    double j_action = 1.0;
    double hbar = 1.0;
    int n_level = 0;

    double omega1() const noexcept { return n1 * base_rate; }
    double omega2() const noexcept { return n2 * base_rate; }
    double common_period() const noexcept;
    /// D = K / sqrt(2 mu1 mu2 A1 A2 (1 - eps^2)).
    double coupling_d() const noexcept;
    /// 1 - eps^2 - 2 D^2 (1 + eps)^2; positive on the elliptic side.
    double elliptic_margin() const noexcept;

    /// Throws InvalidArgument on malformed fields (eps outside [0,1), non-coprime
    /// ratio, non-positive scales, ...). Does not test the elliptic condition.
    void validate() const;
    /// validate() plus EllipticViolation when elliptic_margin() <= 0.
    void require_elliptic() const;

    GHOTriple triple1(double t) const;
    GHOTriple triple2(double t) const;
};

/// (X, Y, Z) loop for one oscillator of the standard family.
LoopSpec gho_triple_loop(double a, double mu, double epsilon, double omega, double period,
                         std::size_t n_samples, std::size_t cycles);

/// Both standard loops over the common period; loop 1 holds n1 cycles and
/// loop 2 holds n2 cycles.
std::pair<LoopSpec, LoopSpec> standard_parameter_loops(const StandardLoopParams& p,
                                                        std::size_t n_samples = kDefaultLoopSamples);

/// Each standard loop over its own single period 2 pi / w_i (the decoupled branch).
std::pair<LoopSpec, LoopSpec> subsystem_parameter_loops(const StandardLoopParams& p,
                                                         std::size_t n_samples = kDefaultLoopSamples);

/// Horizontal circle in R^3: x(t) = (r cos wt, r sin wt, h) with w = 2 pi cycles / period.
/// A cone loop of polar angle Theta on the unit sphere is circle_loop(sin Theta, cos Theta, ...).
LoopSpec circle_loop(double radius, double height, double period, std::size_t n_samples,
                     std::size_t cycles = 1);

}  // namespace holonomy
