#include "holonomy/quantum_geometry.hpp"

#include "holonomy/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace holonomy {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_unitary(const CMat& c) {
    const Eigen::Index n = c.cols();
    if (c.rows() != n) throw Error(ErrorKind::NotUnitary, "eigenvector matrix is not square");
    const double dev = (c.adjoint() * c - CMat::Identity(n, n)).cwiseAbs().maxCoeff();
    if (dev > 1e-10) {
        std::ostringstream os;
        os << "eigenvector matrix deviates from unitary by " << dev;
        throw Error(ErrorKind::NotUnitary, os.str());
    }
}

double smallest_gap(const Eigen::VectorXd& e, std::size_t& at_level) {
    double gap = std::numeric_limits<double>::infinity();
    at_level = 0;
    for (Eigen::Index k = 0; k + 1 < e.size(); ++k) {
        const double g = e(k + 1) - e(k);
        if (g < gap) {
            gap = g;
            at_level = static_cast<std::size_t>(k);
        }
    }
    return gap;
}

}  // namespace

double wrap_angle(double a) noexcept {
    double r = std::remainder(a, kTwoPi);
    if (r <= -kPi) r += kTwoPi;
    return r;
}

CMat HamiltonianFamily::operator()(const Vec& x) const {
    CMat h = eval(x);
    const auto n = static_cast<Eigen::Index>(dim);
    if (h.rows() != n || h.cols() != n) {
        std::ostringstream os;
        os << "family returned " << h.rows() << "x" << h.cols() << ", expected " << dim;
        throw Error(ErrorKind::LengthMismatch, os.str());
    }
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    const double asym = (h - h.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= hermiticity_tol * scale)) {
        std::ostringstream os;
        os << "max |H - H^dagger| = " << asym;
        throw Error(ErrorKind::HermiticityViolation, os.str());
    }
    return h;
}

Eigensystem hermitian_eigensystem(const CMat& h) {
    const CMat sym = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::InvalidArgument, "Hermitian eigensolver did not converge");
    }
    // Eigen returns eigenvalues in increasing order
    return {solver.eigenvalues(), solver.eigenvectors()};
}

EigenFrame eigenframe_along_loop(const HamiltonianFamily& family, const LoopSpec& loop, double gap_tol) {
    const std::size_t samples = loop.size();
    const auto n = static_cast<Eigen::Index>(family.dim);
    EigenFrame frame{loop, Eigen::MatrixXd(static_cast<Eigen::Index>(samples), n), {}, 0.0};
    frame.vectors.reserve(samples);

    // per-sample decompositions are independent; alignment below is sequential
    std::vector<Eigensystem> systems;
    systems.reserve(samples);
    double max_abs_e = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        systems.push_back(hermitian_eigensystem(family(loop.point(j))));
        max_abs_e = std::max(max_abs_e, systems.back().energies.cwiseAbs().maxCoeff());
    }
    const double tol = gap_tol > 0.0 ? gap_tol : kRelativeGapTolerance * max_abs_e;

    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < samples; ++j) {
        Eigensystem& es = systems[j];
        if (n > 1) {
            std::size_t level = 0;
            const double gap = smallest_gap(es.energies, level);
            if (!(gap >= tol)) throw GapTooSmallError(j, level, gap);
            min_gap = std::min(min_gap, gap);
        }
        if (j > 0) {
            const CMat& prev = frame.vectors.back();
            for (Eigen::Index k = 0; k < n; ++k) {
                const Complex ov = prev.col(k).dot(es.vectors.col(k));
                const double mag = std::abs(ov);
                if (mag > 0.0) es.vectors.col(k) *= std::conj(ov) / mag;
            }
        }
        frame.energies.row(static_cast<Eigen::Index>(j)) = es.energies.transpose();
        frame.vectors.push_back(std::move(es.vectors));
    }
    frame.min_gap = (n > 1) ? min_gap : std::numeric_limits<double>::infinity();
    return frame;
}

std::size_t reference_component(const EigenFrame& frame, std::size_t level) {
    const auto n = static_cast<Eigen::Index>(frame.vectors.front().rows());
    const auto k = static_cast<Eigen::Index>(level);
    std::size_t best = 0;
    double best_min = -1.0;
    for (Eigen::Index c = 0; c < n; ++c) {
        double lowest = std::numeric_limits<double>::infinity();
        for (const CMat& v : frame.vectors) lowest = std::min(lowest, std::abs(v(c, k)));
        if (lowest >= best_min - 1e-9) {
            best_min = std::max(best_min, lowest);
            best = static_cast<std::size_t>(c);
        }
    }
    return best;
}

CVec fix_gauge(const CVec& v, std::size_t component) {
    const Complex a = v(static_cast<Eigen::Index>(component));
    const double mag = std::abs(a);
    if (mag == 0.0) return v;
    return v * (std::conj(a) / mag);
}

BerryHannay berry_and_hannay(const EigenFrame& frame, std::size_t level,
                             std::optional<std::size_t> gauge_component) {
    if (level >= frame.levels()) {
        throw Error(ErrorKind::InvalidArgument, "level index out of range");
    }
    const std::size_t r = gauge_component.value_or(reference_component(frame, level));
    if (r >= frame.levels()) throw Error(ErrorKind::InvalidArgument, "gauge component out of range");
    const std::size_t m = frame.loop.intervals();

    double phase = 0.0;
    CVec prev = fix_gauge(frame.vector(0, level), r);
    const CVec first = prev;
    for (std::size_t j = 1; j <= m; ++j) {
        CVec cur = fix_gauge(frame.vector(j, level), r);
        phase += std::arg(prev.dot(cur));
        prev = std::move(cur);
    }
    phase += std::arg(prev.dot(first));

    BerryHannay out;
    out.gamma = -phase;
    out.delta_theta = phase;
    out.gamma_wrapped = wrap_angle(out.gamma);
    out.gauge_component = r;
    return out;
}

QuadratureResult spin_hannay_closed_form_detail(const LoopSpec& b_loop, int level) {
    if (b_loop.dim() != 3) throw Error(ErrorKind::LengthMismatch, "B loop must be three dimensional");
    if (level != 1 && level != 2) throw Error(ErrorKind::InvalidArgument, "spin level must be 1 or 2");
    const double sign = (level == 1) ? 1.0 : -1.0;
    const auto samples = static_cast<Eigen::Index>(b_loop.size());
    Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(3, samples);
    for (Eigen::Index j = 0; j < samples; ++j) {
        const auto b = b_loop.point(static_cast<std::size_t>(j));
        const double mag = b.norm();
        const double denom_term = mag + sign * b(2);
        if (!(denom_term >= 1e-6 * mag) || mag == 0.0) {
            std::ostringstream os;
            os << "sample " << j << " is within 1e-6 B of the level-" << level << " pole";
            throw Error(ErrorKind::PoleProximity, os.str());
        }
        const double w = 1.0 / (2.0 * mag * denom_term);
        // (B2 dB1 - B1 dB2) w, negated for the Hannay angle
        coeff(0, j) = -b(1) * w;
        coeff(1, j) = b(0) * w;
    }
    return closed_line_integral(coeff, b_loop);
}

double spin_hannay_closed_form(const LoopSpec& b_loop, int level) {
    return spin_hannay_closed_form_detail(b_loop, level).value;
}

CanonicalPair classicalize(const CVec& psi, double hbar) {
    const double s = std::sqrt(2.0 * hbar);
    CanonicalPair out;
    out.q = s * psi.real();
    out.p = s * psi.imag();
    out.energy_check = out.q.squaredNorm() + out.p.squaredNorm();
    return out;
}

StokesVector stokes_vector(const CVec& psi, double hbar) {
    if (psi.size() != 2) throw Error(ErrorKind::LengthMismatch, "Stokes vector needs a two-level state");
    if (!(std::abs(psi.norm() - 1.0) < 1e-10)) {
        throw Error(ErrorKind::NotNormalized, "state norm differs from 1");
    }
    const CanonicalPair c = classicalize(psi, hbar);
    // component 0 is |->, component 1 is |+>
    const double q1 = c.q(0), q2 = c.q(1), p1 = c.p(0), p2 = c.p(1);
    return {(q1 * q2 + p1 * p2) / hbar, (p1 * q2 - p2 * q1) / hbar,
            (p2 * p2 + q2 * q2 - p1 * p1 - q1 * q1) / (2.0 * hbar)};
}

StokesVector stokes_vector(const CVec& psi, double hbar, double mu, const Eigen::Vector3d& b) {
    const StokesVector s = stokes_vector(psi, hbar);
    const double from_stokes = -mu * (s.s1 * b(0) + s.s2 * b(1) + s.s3 * b(2));
    // -mu sigma.B in the (|->, |+>) ordering
    CMat h(2, 2);
    h << Complex(mu * b(2), 0.0), Complex(-mu * b(0), -mu * b(1)),
         Complex(-mu * b(0), mu * b(1)), Complex(-mu * b(2), 0.0);
    const double expectation = psi.dot(h * psi).real();
    const double scale = std::max(1.0, std::abs(mu) * b.norm());
    if (std::abs(from_stokes - expectation) > 1e-10 * scale) {
        std::ostringstream os;
        os << "-mu S.B = " << from_stokes << " but <psi|H|psi> = " << expectation;
        throw Error(ErrorKind::InvalidArgument, os.str());
    }
    return s;
}

ActionAngle action_angle_transform(const CVec& psi, const CMat& eigenvectors, double hbar) {
    check_unitary(eigenvectors);
    if (psi.size() != eigenvectors.rows()) throw Error(ErrorKind::LengthMismatch, "state dimension mismatch");
    const CVec amp = eigenvectors.adjoint() * psi;
    ActionAngle aa{Vec(amp.size()), Vec(amp.size())};
    for (Eigen::Index k = 0; k < amp.size(); ++k) {
        aa.actions(k) = hbar * std::norm(amp(k));
        double theta = -std::arg(amp(k));
        if (theta < 0.0) theta += kTwoPi;
        if (theta >= kTwoPi) theta -= kTwoPi;
        aa.angles(k) = theta;
    }
    return aa;
}

CanonicalPair reconstruct(const ActionAngle& aa, const CMat& eigenvectors, double hbar) {
    check_unitary(eigenvectors);
    const Eigen::Index n = eigenvectors.rows();
    CanonicalPair out{Vec::Zero(n), Vec::Zero(n), 0.0};
    for (Eigen::Index k = 0; k < aa.actions.size(); ++k) {
        const double amp = std::sqrt(2.0 * aa.actions(k));
        const double c = std::cos(aa.angles(k));
        const double s = std::sin(aa.angles(k));
        for (Eigen::Index m = 0; m < n; ++m) {
            const Complex ckn = eigenvectors(m, k);
            out.q(m) += amp * (c * ckn.real() + s * ckn.imag());
            out.p(m) += amp * (c * ckn.imag() - s * ckn.real());
        }
    }
    out.energy_check = out.q.squaredNorm() + out.p.squaredNorm();
    (void)hbar;  // (q, p) carry the hbar scale through the actions
    return out;
}

double theta_averaged_one_form(const HamiltonianFamily& family, const Vec& actions, const Vec& x,
                               const Vec& dx, double hbar) {
    const auto n = static_cast<Eigen::Index>(family.dim);
    if (actions.size() != n) throw Error(ErrorKind::LengthMismatch, "one action per level expected");
    if (dx.size() != x.size()) throw Error(ErrorKind::LengthMismatch, "dX and X differ in dimension");
    if (n > 8) throw Error(ErrorKind::InvalidArgument, "theta grid limited to 8 levels");
    const double len = dx.norm();
    if (len == 0.0 || actions.isZero(0.0)) return 0.0;

    const double h = std::max(1e-6 * x.norm(), 1e-8);
    const Vec dir = dx / len;
    Eigensystem mid = hermitian_eigensystem(family(x));
    Eigensystem plus = hermitian_eigensystem(family(x + h * dir));
    Eigensystem minus = hermitian_eigensystem(family(x - h * dir));
    const double tol = kRelativeGapTolerance * std::max(1.0, mid.energies.cwiseAbs().maxCoeff());
    for (const Eigensystem* es : {&mid, &plus, &minus}) {
        std::size_t level = 0;
        const double gap = smallest_gap(es->energies, level);
        if (n > 1 && !(gap >= tol)) throw GapTooSmallError(0, level, gap);
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index r = 0;
        mid.vectors.col(k).cwiseAbs().maxCoeff(&r);
        const auto rc = static_cast<std::size_t>(r);
        mid.vectors.col(k) = fix_gauge(mid.vectors.col(k), rc);
        plus.vectors.col(k) = fix_gauge(plus.vectors.col(k), rc);
        minus.vectors.col(k) = fix_gauge(minus.vectors.col(k), rc);
    }

    constexpr int kPerAngle = 8;
    std::size_t total = 1;
    for (Eigen::Index k = 0; k < n; ++k) total *= kPerAngle;
    ActionAngle aa{actions, Vec::Zero(n)};
    double sum = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (Eigen::Index k = 0; k < n; ++k) {
            aa.angles(k) = kTwoPi * static_cast<double>(rest % kPerAngle) / kPerAngle;
            rest /= kPerAngle;
        }
        const CanonicalPair at = reconstruct(aa, mid.vectors, hbar);
        const CanonicalPair up = reconstruct(aa, plus.vectors, hbar);
        const CanonicalPair down = reconstruct(aa, minus.vectors, hbar);
        const Vec dq = (up.q - down.q) / (2.0 * h);
        sum += at.p.dot(dq);
    }
    return len * sum / static_cast<double>(total);
}

}  // namespace holonomy
