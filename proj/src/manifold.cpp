#include "holonomy/manifold.hpp"

#include "holonomy/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace holonomy {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_sampling(double period, std::size_t n_samples, std::size_t cycles) {
    if (n_samples < kMinLoopSamples) {
        std::ostringstream os;
        os << "n_samples = " << n_samples << " < " << kMinLoopSamples;
        throw Error(ErrorKind::TooFewSamples, os.str());
    }
    if (!(period > 0.0) || !std::isfinite(period)) {
        throw Error(ErrorKind::InvalidArgument, "loop period must be positive and finite");
    }
    if (cycles == 0) {
        throw Error(ErrorKind::InvalidArgument, "loop must contain at least one cycle");
    }
}

// Evaluates f on the uniform grid and enforces closure x_M = x_0.
Eigen::MatrixXd sample_curve(const Curve& f, double period, std::size_t n, std::vector<double>& times) {
    times.resize(n + 1);
    const Vec first = f(0.0);
    Eigen::MatrixXd pts(first.size(), static_cast<Eigen::Index>(n + 1));
    for (std::size_t j = 0; j <= n; ++j) {
        times[j] = (j == n) ? period : period * static_cast<double>(j) / static_cast<double>(n);
        const Vec x = (j == 0) ? first : f(times[j]);
        if (x.size() != first.size()) {
            throw Error(ErrorKind::LengthMismatch, "curve changes dimension along the loop");
        }
        if (!x.allFinite()) {
            throw Error(ErrorKind::InvalidArgument, "curve is not finite along the loop");
        }
        pts.col(static_cast<Eigen::Index>(j)) = x;
    }
    const double scale = std::max(pts.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    const double gap = (pts.col(0) - pts.col(static_cast<Eigen::Index>(n))).cwiseAbs().maxCoeff();
    if (gap > kClosureTolerance * scale) {
        std::ostringstream os;
        os << "f(0) and f(period) differ by " << gap << " (scale " << scale << ")";
        throw Error(ErrorKind::NotClosed, os.str());
    }
    pts.col(static_cast<Eigen::Index>(n)) = pts.col(0);
    return pts;
}

}  // namespace

Vec LoopSpec::at(double t) const {
    double tw = std::fmod(t, period_);
    if (tw < 0.0) tw += period_;
    if (curve_) return curve_(tw);
    const double h = spacing();
    auto j = static_cast<std::size_t>(std::floor(tw / h));
    if (j >= intervals()) j = intervals() - 1;
    const double w = (tw - times_[j]) / h;
    const auto c = static_cast<Eigen::Index>(j);
    return (1.0 - w) * points_.col(c) + w * points_.col(c + 1);
}

Eigen::MatrixXd spectral_derivative(const Eigen::MatrixXd& samples, double period) {
    const Eigen::Index m = samples.cols();
    Eigen::MatrixXd out(samples.rows(), m);
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> time_dom(static_cast<std::size_t>(m));
    std::vector<std::complex<double>> freq;
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        for (Eigen::Index j = 0; j < m; ++j) time_dom[static_cast<std::size_t>(j)] = samples(r, j);
        fft.fwd(freq, time_dom);
        for (Eigen::Index q = 0; q < m; ++q) {
            // signed wavenumber; the unpaired Nyquist mode of an even grid is dropped
            Eigen::Index wave = (q <= m / 2) ? q : q - m;
            if (m % 2 == 0 && q == m / 2) wave = 0;
            const double w = kTwoPi * static_cast<double>(wave) / period;
            freq[static_cast<std::size_t>(q)] *= std::complex<double>(0.0, w);
        }
        fft.inv(time_dom, freq);
        for (Eigen::Index j = 0; j < m; ++j) out(r, j) = time_dom[static_cast<std::size_t>(j)].real();
    }
    return out;
}

LoopSpec make_loop(const Curve& f, double period, std::size_t n_samples, std::size_t cycles) {
    check_sampling(period, n_samples, cycles);
    LoopSpec loop;
    loop.period_ = period;
    loop.cycles_ = cycles;
    loop.points_ = sample_curve(f, period, n_samples, loop.times_);
    const auto n = static_cast<Eigen::Index>(n_samples);
    Eigen::MatrixXd vel(loop.points_.rows(), n + 1);
    vel.leftCols(n) = spectral_derivative(loop.points_.leftCols(n), period);
    vel.col(n) = vel.col(0);
    loop.velocities_ = std::move(vel);
    loop.curve_ = f;
    return loop;
}

LoopSpec make_loop(const Curve& f, const Curve& df, double period, std::size_t n_samples,
                   std::size_t cycles) {
    check_sampling(period, n_samples, cycles);
    LoopSpec loop;
    loop.period_ = period;
    loop.cycles_ = cycles;
    loop.points_ = sample_curve(f, period, n_samples, loop.times_);
    Eigen::MatrixXd vel(loop.points_.rows(), loop.points_.cols());
    for (std::size_t j = 0; j < n_samples; ++j) {
        const Vec v = df(loop.times_[j]);
        if (v.size() != loop.points_.rows()) {
            throw Error(ErrorKind::LengthMismatch, "derivative dimension differs from curve dimension");
        }
        vel.col(static_cast<Eigen::Index>(j)) = v;
    }
    vel.col(static_cast<Eigen::Index>(n_samples)) = vel.col(0);
    loop.velocities_ = std::move(vel);
    loop.curve_ = f;
    return loop;
}

LoopSpec reversed(const LoopSpec& loop) {
    LoopSpec out;
    out.period_ = loop.period_;
    out.cycles_ = loop.cycles_;
    out.times_ = loop.times_;
    const auto m = static_cast<Eigen::Index>(loop.intervals());
    out.points_.resize(loop.points_.rows(), m + 1);
    out.velocities_.resize(loop.points_.rows(), m + 1);
    for (Eigen::Index j = 0; j <= m; ++j) {
        out.points_.col(j) = loop.points_.col(m - j);
        out.velocities_.col(j) = -loop.velocities_.col(m - j);
    }
    if (loop.curve_) {
        const double period = loop.period_;
        out.curve_ = [f = loop.curve_, period](double t) { return f(period - t); };
    }
    return out;
}

LoopSpec concat(const LoopSpec& a, const LoopSpec& b) {
    if (a.size() != b.size() || a.period_ != b.period_) {
        throw Error(ErrorKind::LengthMismatch, "concatenated loops must share their time grid");
    }
    LoopSpec out;
    out.period_ = a.period_;
    out.cycles_ = std::gcd(a.cycles_, b.cycles_);
    out.times_ = a.times_;
    out.points_.resize(a.points_.rows() + b.points_.rows(), a.points_.cols());
    out.points_ << a.points_, b.points_;
    out.velocities_.resize(out.points_.rows(), out.points_.cols());
    out.velocities_ << a.velocities_, b.velocities_;
    if (a.curve_ && b.curve_) {
        out.curve_ = [fa = a.curve_, fb = b.curve_](double t) {
            const Vec xa = fa(t);
            const Vec xb = fb(t);
            Vec x(xa.size() + xb.size());
            x << xa, xb;
            return x;
        };
    }
    return out;
}

QuadratureResult closed_line_integral(const Eigen::MatrixXd& coefficients, const LoopSpec& loop) {
    const std::size_t m = loop.intervals();
    const auto cols = static_cast<std::size_t>(coefficients.cols());
    if ((cols != m && cols != m + 1) || static_cast<std::size_t>(coefficients.rows()) != loop.dim()) {
        std::ostringstream os;
        os << "coefficients are " << coefficients.rows() << "x" << cols << ", loop has dim "
           << loop.dim() << " and " << m + 1 << " samples";
        throw Error(ErrorKind::LengthMismatch, os.str());
    }
    double full = 0.0;
    double even = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const auto c = static_cast<Eigen::Index>(j);
        const double term = coefficients.col(c).dot(loop.velocities().col(c));
        full += term;
        if (j % 2 == 0) even += term;
    }
    const double h = loop.spacing();
    QuadratureResult r;
    r.value = h * full;
    r.error_estimate = (m % 2 == 0) ? std::abs(r.value - 2.0 * h * even)
                                    : std::numeric_limits<double>::infinity();
    return r;
}

QuadratureResult periodic_trapezoid(const std::vector<double>& values, double period) {
    if (values.size() < 3) throw Error(ErrorKind::LengthMismatch, "need at least two intervals");
    // the last entry is the closing sample, which duplicates the first
    const std::size_t m = values.size() - 1;
    double full = 0.0;
    double even = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        full += values[j];
        if (j % 2 == 0) even += values[j];
    }
    const double h = period / static_cast<double>(m);
    QuadratureResult r;
    r.value = h * full;
    r.error_estimate = (m % 2 == 0) ? std::abs(r.value - 2.0 * h * even)
                                    : std::numeric_limits<double>::infinity();
    return r;
}

double StandardLoopParams::common_period() const noexcept { return kTwoPi / base_rate; }

double StandardLoopParams::coupling_d() const noexcept {
    return k / std::sqrt(2.0 * mu1 * mu2 * a1 * a2 * (1.0 - epsilon * epsilon));
}

double StandardLoopParams::elliptic_margin() const noexcept {
    const double d = coupling_d();
    return 1.0 - epsilon * epsilon - 2.0 * d * d * (1.0 + epsilon) * (1.0 + epsilon);
}

void StandardLoopParams::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); };
    if (!(epsilon >= 0.0 && epsilon < 1.0)) fail("epsilon must lie in [0, 1)");
    if (!(a1 > 0.0 && a2 > 0.0)) fail("a1 and a2 must be positive");
    if (!(mu1 > 0.0 && mu2 > 0.0)) fail("mu1 and mu2 must be positive");
    if (!(base_rate > 0.0) || !std::isfinite(base_rate)) fail("base_rate must be positive");
    if (n1 < 1 || n2 < 1) fail("frequency ratio entries must be positive integers");
    if (std::gcd(n1, n2) != 1) fail("frequency ratio must be a reduced integer pair");
    if (!(k >= 0.0) || !std::isfinite(k)) fail("coupling k must be finite and nonnegative");
    if (!(hbar > 0.0)) fail("hbar must be positive");
    if (!(j_action >= 0.0) || !std::isfinite(j_action)) fail("j_action must be finite and nonnegative");
    if (n_level < 0) fail("n_level must be nonnegative");
    if (!std::isfinite(coupling_d())) fail("derived D is not finite");
}

void StandardLoopParams::require_elliptic() const {
    validate();
    const double margin = elliptic_margin();
    if (!(margin > 0.0)) throw EllipticViolationError(0, margin, "1 - eps^2 - 2 D^2 (1 + eps)^2");
}

namespace {
GHOTriple standard_triple(double a, double mu, double eps, double phase) {
    const double c = std::cos(phase);
    return {a * mu * (1.0 + eps * c), -a * eps * std::sin(phase), (a / mu) * (1.0 - eps * c)};
}
}  // namespace

GHOTriple StandardLoopParams::triple1(double t) const {
    return standard_triple(a1, mu1, epsilon, omega1() * t);
}

GHOTriple StandardLoopParams::triple2(double t) const {
    return standard_triple(a2, mu2, epsilon, omega2() * t);
}

LoopSpec gho_triple_loop(double a, double mu, double epsilon, double omega, double period,
                         std::size_t n_samples, std::size_t cycles) {
    auto f = [=](double t) {
        const GHOTriple g = standard_triple(a, mu, epsilon, omega * t);
        return Vec{{g.x, g.y, g.z}};
    };
    auto df = [=](double t) {
        const double s = std::sin(omega * t);
        const double c = std::cos(omega * t);
        return Vec{{-a * mu * epsilon * omega * s, -a * epsilon * omega * c, (a / mu) * epsilon * omega * s}};
    };
    return make_loop(f, df, period, n_samples, cycles);
}

std::pair<LoopSpec, LoopSpec> standard_parameter_loops(const StandardLoopParams& p, std::size_t n_samples) {
    p.validate();
    const double period = p.common_period();
    return {gho_triple_loop(p.a1, p.mu1, p.epsilon, p.omega1(), period, n_samples,
                            static_cast<std::size_t>(p.n1)),
            gho_triple_loop(p.a2, p.mu2, p.epsilon, p.omega2(), period, n_samples,
                            static_cast<std::size_t>(p.n2))};
}

std::pair<LoopSpec, LoopSpec> subsystem_parameter_loops(const StandardLoopParams& p, std::size_t n_samples) {
    p.validate();
    return {gho_triple_loop(p.a1, p.mu1, p.epsilon, p.omega1(), kTwoPi / p.omega1(), n_samples, 1),
            gho_triple_loop(p.a2, p.mu2, p.epsilon, p.omega2(), kTwoPi / p.omega2(), n_samples, 1)};
}

LoopSpec circle_loop(double radius, double height, double period, std::size_t n_samples, std::size_t cycles) {
    const double w = kTwoPi * static_cast<double>(cycles) / period;
    auto f = [=](double t) { return Vec{{radius * std::cos(w * t), radius * std::sin(w * t), height}}; };
    auto df = [=](double t) {
        return Vec{{-radius * w * std::sin(w * t), radius * w * std::cos(w * t), 0.0}};
    };
    return make_loop(f, df, period, n_samples, cycles);
}

}  // namespace holonomy
