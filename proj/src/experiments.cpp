#include "holonomy/experiments.hpp"

#include "holonomy/dynamics_oracle.hpp"
#include "holonomy/errors.hpp"
#include "holonomy/models.hpp"
#include "holonomy/quantum_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace holonomy {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kReferenceSlowness = 1000.0;
constexpr const char* kVersion = "0.1.0";

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::ConfigInvalid, what); }

constexpr std::pair<Experiment, std::string_view> kExperimentNames[] = {
    {Experiment::SpinBerry, "spin-berry"},
    {Experiment::GhoUncoupled, "gho-uncoupled"},
    {Experiment::HybridSpinOsc, "hybrid-spin-osc"},
    {Experiment::HybridGho, "hybrid-gho"},
    {Experiment::FullQuantum, "full-quantum"},
    {Experiment::OracleQuantum, "oracle-quantum"},
    {Experiment::OracleClassical, "oracle-classical"},
    {Experiment::Fig1, "fig1"},
    {Experiment::Fig2, "fig2"},
};

bool is_figure(Experiment e) { return e == Experiment::Fig1 || e == Experiment::Fig2; }

std::string ratio_label(int a, int b) { return std::to_string(a) + "/" + std::to_string(b); }

// ---- config parsing --------------------------------------------------------

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) config_error(std::string(where) + " must be an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
            config_error("unknown key '" + item.key() + "' in " + std::string(where));
        }
    }
}

double get_number(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) config_error(std::string(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) config_error(std::string(key) + " must be finite");
    return x;
}

long long get_integer(const json& obj, const char* key, long long fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) config_error(std::string(key) + " must be an integer");
    return v.get<long long>();
}

int to_int(long long v, const char* key) {
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        config_error(std::string(key) + " out of range");
    }
    return static_cast<int>(v);
}

std::pair<int, int> parse_ratio(const json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
        config_error("a frequency ratio must be an integer pair [n1, n2]");
    }
    const int a = to_int(v[0].get<long long>(), "ratio");
    const int b = to_int(v[1].get<long long>(), "ratio");
    if (a < 1 || b < 1 || std::gcd(a, b) != 1) config_error("frequency ratio must be a reduced positive pair");
    return {a, b};
}

std::optional<PeriodBranch> parse_branch(const std::string& s) {
    if (s == "auto") return std::nullopt;
    if (s == to_string(PeriodBranch::CommonPeriod)) return PeriodBranch::CommonPeriod;
    if (s == to_string(PeriodBranch::PerSubsystemPeriod)) return PeriodBranch::PerSubsystemPeriod;
    config_error("branch must be auto, common-period or per-subsystem-period");
}

void parse_model(const json& j, ModelParams& m) {
    check_keys(j, "model",
               {"a1", "a2", "mu1", "mu2", "base_rate", "epsilon", "k", "k_fraction", "j_action", "hbar", "n_level",
                "ratio", "ratios", "branch", "spin_mu", "theta", "cycles", "lambda", "field", "i_plus", "i_minus",
                "level", "m", "n"});
    StandardLoopParams& p = m.standard;
    p.a1 = get_number(j, "a1", p.a1);
    p.a2 = get_number(j, "a2", p.a2);
    p.mu1 = get_number(j, "mu1", p.mu1);
    p.mu2 = get_number(j, "mu2", p.mu2);
    p.base_rate = get_number(j, "base_rate", p.base_rate);
    p.epsilon = get_number(j, "epsilon", p.epsilon);
    p.k = get_number(j, "k", p.k);
    p.j_action = get_number(j, "j_action", p.j_action);
    p.hbar = get_number(j, "hbar", p.hbar);
    p.n_level = to_int(get_integer(j, "n_level", p.n_level), "n_level");
    if (j.contains("ratio")) std::tie(p.n1, p.n2) = parse_ratio(j.at("ratio"));
    if (j.contains("ratios")) {
        const json& r = j.at("ratios");
        if (!r.is_array() || r.empty()) config_error("ratios must be a non-empty array of integer pairs");
        m.ratios.clear();
        for (const auto& item : r) m.ratios.push_back(parse_ratio(item));
    }
    if (j.contains("k_fraction")) {
        if (j.contains("k")) config_error("give either k or k_fraction, not both");
        m.k_fraction = get_number(j, "k_fraction", 0.0);
    }
    if (j.contains("branch")) {
        if (!j.at("branch").is_string()) config_error("branch must be a string");
        m.branch = parse_branch(j.at("branch").get<std::string>());
    }
    m.spin_mu = get_number(j, "spin_mu", m.spin_mu);
    m.theta = get_number(j, "theta", m.theta);
    m.cycles = to_int(get_integer(j, "cycles", m.cycles), "cycles");
    m.lambda = get_number(j, "lambda", m.lambda);
    m.field = get_number(j, "field", m.field);
    m.i_plus = get_number(j, "i_plus", m.i_plus);
    m.i_minus = get_number(j, "i_minus", m.i_minus);
    m.level = to_int(get_integer(j, "level", m.level), "level");
    m.m = to_int(get_integer(j, "m", m.m), "m");
    m.n = to_int(get_integer(j, "n", m.n), "n");
}

void validate_config(const ExperimentConfig& cfg) {
    const ModelParams& m = cfg.model;
    try {
        m.standard.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
    if (m.k_fraction && !(*m.k_fraction >= 0.0 && *m.k_fraction < 1.0)) config_error("k_fraction must lie in [0, 1)");
    if (m.cycles < 1) config_error("cycles must be positive");
    if (m.level != 1 && m.level != 2) config_error("level must be 1 or 2");
    if (m.m < 0 || m.n < 0) config_error("m and n must be nonnegative");
    if (!(m.field > 0.0)) config_error("field must be positive");
    if (!(m.i_plus >= 0.0 && m.i_minus >= 0.0)) config_error("i_plus and i_minus must be nonnegative");
    if (cfg.numerics.n_samples < kMinLoopSamples) config_error("n_samples must be at least 16");
    if (!(cfg.numerics.slowness > 0.0)) config_error("slowness must be positive");
    if (cfg.numerics.steps_per_sample < 1) config_error("steps_per_sample must be positive");
    if (cfg.sweep) {
        const SweepSpec& s = *cfg.sweep;
        if (is_figure(cfg.experiment)) config_error("figure experiments use their own K grid; remove sweep");
        if (s.count < 2) config_error("sweep count must be at least 2");
        if (s.log_scale && !(s.start > 0.0 && s.stop > 0.0)) config_error("log sweeps need positive bounds");
        ExperimentConfig probe = cfg;
        probe.sweep.reset();
        for (double v : sweep_values(s)) set_parameter(probe, s.parameter, v);
    }
}

// ---- table helpers ---------------------------------------------------------

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string cell_text(const Cell& c) {
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(double v) const { return format_number(v); }
        std::string operator()(long long v) const { return std::to_string(v); }
        std::string operator()(const std::string& s) const { return s; }
    };
    return std::visit(Visitor{}, c);
}

class RowBuilder {
public:
    explicit RowBuilder(const std::vector<std::string>& header) : header_(header), row_(header.size()) {}
    RowBuilder& set(std::string_view name, Cell value) {
        const auto it = std::find(header_.begin(), header_.end(), name);
        if (it == header_.end()) throw Error(ErrorKind::InvalidArgument, "no column " + std::string(name));
        row_[static_cast<std::size_t>(it - header_.begin())] = std::move(value);
        return *this;
    }
    std::vector<Cell> take() { return std::move(row_); }

private:
    const std::vector<std::string>& header_;
    std::vector<Cell> row_;
};

std::string error_text(const std::exception& e) {
    if (dynamic_cast<const Error*>(&e) != nullptr) return e.what();
    return std::string("InternalError: ") + e.what();
}

// ---- model assembly --------------------------------------------------------

StandardLoopParams effective_standard(const ModelParams& m) {
    StandardLoopParams p = m.standard;
    if (m.k_fraction) p.k = *m.k_fraction * elliptic_bound(p).k_max;
    return p;
}

LoopSpec spin_cone(const ExperimentConfig& cfg) {
    const ModelParams& m = cfg.model;
    return circle_loop(m.field * std::sin(m.theta), m.field * std::cos(m.theta), 1.0, cfg.numerics.n_samples,
                       static_cast<std::size_t>(m.cycles));
}

// ---- experiments -----------------------------------------------------------

void spin_berry(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                std::vector<std::vector<Cell>>& out) {
    const ModelParams& m = cfg.model;
    const LoopSpec loop = spin_cone(cfg);
    validate(SpinFieldModel{m.spin_mu, loop});
    const EigenFrame frame = eigenframe_along_loop(spin_family(m.spin_mu), loop);
    for (int level = 1; level <= 2; ++level) {
        RowBuilder row(header);
        row.set("theta", m.theta).set("cycles", static_cast<long long>(m.cycles)).set("level", static_cast<long long>(level));
        std::optional<double> closed;
        try {
            closed = spin_hannay_closed_form(loop, level);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PoleProximity) throw;
        }
        // the closed forms are written in the gauge where the |+> amplitude is real
        const auto bh = closed ? berry_and_hannay(frame, static_cast<std::size_t>(level - 1), std::size_t{1})
                               : berry_and_hannay(frame, static_cast<std::size_t>(level - 1));
        row.set("energy", frame.energies(0, level - 1))
            .set("gamma", bh.gamma)
            .set("delta_theta", bh.delta_theta)
            .set("gamma_wrapped", bh.gamma_wrapped)
            .set("gauge_component", static_cast<long long>(bh.gauge_component));
        if (closed) row.set("closed_form", *closed).set("abs_error", std::abs(*closed - bh.delta_theta));
        out.push_back(row.take());
    }
}

void gho_uncoupled(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                   std::vector<std::vector<Cell>>& out) {
    StandardLoopParams p = cfg.model.standard;
    p.k = 0.0;
    const int top = p.n_level;
    for (int n = 0; n <= top; ++n) {
        p.n_level = n;
        const HybridPhaseReport r = standard_loop_report(p, cfg.numerics.n_samples, cfg.model.branch);
        const double factor = r.branch == PeriodBranch::CommonPeriod ? p.omega1() / p.omega2() : 1.0;
        RowBuilder row(header);
        row.set("epsilon", p.epsilon)
            .set("ratio", ratio_label(p.n1, p.n2))
            .set("n", static_cast<long long>(n))
            .set("branch", std::string(to_string(r.branch)))
            .set("gamma_n0", r.gamma_0_part)
            .set("gamma_n0_quadrature", r.gamma_0_quadrature)
            .set("delta_phi_0", r.delta_phi_0_part)
            .set("correspondence_residual", r.gamma_0_part + (n + 0.5) * factor * r.delta_phi_0_part)
            .set("quadrature_error", r.quadrature_error);
        out.push_back(row.take());
    }
}

void hybrid_spin_osc(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                     std::vector<std::vector<Cell>>& out) {
    const ModelParams& mp = cfg.model;
    const StandardLoopParams& p = mp.standard;
    const double period = p.common_period();
    const SpinOscillatorHybrid m{mp.spin_mu,
                                 mp.lambda,
                                 mp.field,
                                 azimuth_loop(period, cfg.numerics.n_samples, mp.cycles),
                                 gho_triple_loop(p.a2, p.mu2, p.epsilon, p.omega2(), period, cfg.numerics.n_samples,
                                                 static_cast<std::size_t>(p.n2)),
                                 mp.i_plus,
                                 mp.i_minus,
                                 p.j_action};
    const LinearOneForm form = spin_oscillator_one_form(m);
    const OneFormPhases ph = phases_from_one_form(form, spin_oscillator_loop(m));
    RowBuilder row(header);
    row.set("lambda", mp.lambda)
        .set("epsilon", p.epsilon)
        .set("j_action", p.j_action)
        .set("gamma_plus", ph.gamma[0])
        .set("gamma_minus", ph.gamma[1])
        .set("delta_phi", ph.delta_phi)
        .set("coupling_ratio", spin_oscillator_coupling_ratio(m))
        .set("quadrature_error", ph.quadrature_error);
    out.push_back(row.take());
}

void hybrid_gho(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                std::vector<std::vector<Cell>>& out) {
    const StandardLoopParams p = effective_standard(cfg.model);
    const HybridPhaseReport r = standard_loop_report(p, cfg.numerics.n_samples, cfg.model.branch);
    RowBuilder row(header);
    row.set("K", p.k)
        .set("D", r.coupling_d)
        .set("epsilon", p.epsilon)
        .set("ratio", ratio_label(p.n1, p.n2))
        .set("n", static_cast<long long>(p.n_level))
        .set("branch", std::string(to_string(r.branch)))
        .set("gamma_n", r.gamma.at(p.n_level))
        .set("gamma_n0", r.gamma_0_part)
        .set("gamma_I", r.gamma_I_part)
        .set("gamma_I_approx", r.gamma_I_approx)
        .set("delta_phi", r.delta_phi)
        .set("delta_phi_0", r.delta_phi_0_part)
        .set("delta_phi_I", r.delta_phi_I_part)
        .set("delta_phi_I_approx", r.delta_phi_I_approx)
        .set("quadrature_error", r.quadrature_error)
        .set("elliptic_margin", r.elliptic_margin);
    if (r.branch == PeriodBranch::CommonPeriod) {
        const CoupledGHOHybrid model{p};
        const LoopSpec loop = coupled_gho_loop(model, cfg.numerics.n_samples);
        const OneFormPhases ph = phases_from_one_form(coupled_gho_one_form(model, loop), loop);
        row.set("one_form_gamma_n", ph.gamma.back()).set("one_form_delta_phi", ph.delta_phi);
    }
    out.push_back(row.take());
}

void full_quantum(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                  std::vector<std::vector<Cell>>& out) {
    const StandardLoopParams p = effective_standard(cfg.model);
    p.validate();
    const auto [l1, l2] = standard_parameter_loops(p, cfg.numerics.n_samples);
    const QuadratureResult full = full_quantum_phase(l1, l2, p.k, cfg.model.m, cfg.model.n);
    const BornOppenheimerPhase bo = bo_full_quantum_phase(l1, l2, p.k, cfg.model.m, cfg.model.n, p.hbar);
    RowBuilder row(header);
    row.set("K", p.k)
        .set("D", p.coupling_d())
        .set("m", static_cast<long long>(cfg.model.m))
        .set("n", static_cast<long long>(cfg.model.n))
        .set("gamma_mn", full.value)
        .set("gamma_bo", bo.gamma)
        .set("bo_light_part", bo.light_part)
        .set("bo_heavy_part", bo.heavy_part)
        .set("quadrature_error", std::max(full.error_estimate, bo.quadrature_error));
    out.push_back(row.take());
}

void oracle_quantum(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                    std::vector<std::vector<Cell>>& out) {
    const ModelParams& m = cfg.model;
    const LoopSpec loop = spin_cone(cfg);
    const HamiltonianFamily family = spin_family(m.spin_mu);
    const auto level = static_cast<std::size_t>(m.level - 1);
    const std::size_t steps = cfg.numerics.effective_steps();
    const QuantumPropagation prop = propagate_quantum(family, loop, level, cfg.numerics.slowness, steps);
    const double numeric = extract_geometric_phase(prop, prop.psi_initial);
    const double wilson = berry_and_hannay(eigenframe_along_loop(family, loop), level).gamma;
    RowBuilder row(header);
    row.set("slowness", cfg.numerics.slowness)
        .set("theta", m.theta)
        .set("level", static_cast<long long>(m.level))
        .set("steps_per_sample", static_cast<long long>(steps))
        .set("gamma_numeric", numeric)
        .set("gamma_wilson", wilson)
        .set("abs_error", std::abs(numeric - wilson))
        .set("norm_drift", prop.norm_drift)
        .set("final_fidelity", prop.final_fidelity);
    out.push_back(row.take());
}

void oracle_classical(const ExperimentConfig& cfg, const std::vector<std::string>& header,
                      std::vector<std::vector<Cell>>& out) {
    StandardLoopParams p = cfg.model.standard;
    p.k = 0.0;
    const auto loops = subsystem_parameter_loops(p, cfg.numerics.n_samples);
    const LoopSpec& x2 = loops.second;
    const auto x0 = x2.point(0);
    const double omega = std::sqrt(x0(0) * x0(2) - x0(1) * x0(1));
    const double q0 = std::sqrt(2.0 * x0(2) * p.j_action / omega);
    const double p0 = -x0(1) / x0(2) * q0;
    const std::size_t steps = cfg.numerics.effective_steps();
    const ClassicalTrajectory traj = propagate_classical(x2, q0, p0, cfg.numerics.slowness, steps);
    const double numeric = extract_hannay_angle(traj);
    const double quad = standard_loop_report(p, cfg.numerics.n_samples).delta_phi_0_part;
    RowBuilder row(header);
    row.set("slowness", cfg.numerics.slowness)
        .set("epsilon", p.epsilon)
        .set("steps_per_sample", static_cast<long long>(steps))
        .set("delta_phi_numeric", numeric)
        .set("delta_phi_quadrature", quad)
        .set("abs_error", std::abs(numeric - quad));
    if (quad != 0.0) row.set("relative_error", std::abs(numeric / quad - 1.0));
    row.set("action_drift", traj.action_drift());
    out.push_back(row.take());
}

const std::vector<std::string>& header_for(Experiment e) {
    static const std::map<Experiment, std::vector<std::string>> headers = {
        {Experiment::SpinBerry,
         {"theta", "cycles", "level", "energy", "gamma", "delta_theta", "gamma_wrapped", "closed_form", "abs_error",
          "gauge_component", "error"}},
        {Experiment::GhoUncoupled,
         {"epsilon", "ratio", "n", "branch", "gamma_n0", "gamma_n0_quadrature", "delta_phi_0",
          "correspondence_residual", "quadrature_error", "error"}},
        {Experiment::HybridSpinOsc,
         {"lambda", "epsilon", "j_action", "gamma_plus", "gamma_minus", "delta_phi", "coupling_ratio",
          "quadrature_error", "error"}},
        {Experiment::HybridGho,
         {"K", "D", "epsilon", "ratio", "n", "branch", "gamma_n", "gamma_n0", "gamma_I", "gamma_I_approx", "delta_phi",
          "delta_phi_0", "delta_phi_I", "delta_phi_I_approx", "one_form_gamma_n", "one_form_delta_phi",
          "quadrature_error", "elliptic_margin", "error"}},
        {Experiment::FullQuantum,
         {"K", "D", "m", "n", "gamma_mn", "gamma_bo", "bo_light_part", "bo_heavy_part", "quadrature_error", "error"}},
        {Experiment::OracleQuantum,
         {"slowness", "theta", "level", "steps_per_sample", "gamma_numeric", "gamma_wilson", "abs_error", "norm_drift",
          "final_fidelity", "error"}},
        {Experiment::OracleClassical,
         {"slowness", "epsilon", "steps_per_sample", "delta_phi_numeric", "delta_phi_quadrature", "abs_error",
          "relative_error", "action_drift", "error"}},
        {Experiment::Fig1,
         {"ratio", "K", "k_fraction", "D", "branch", "gamma_0", "gamma_00", "gamma_I", "gamma_I_approx",
          "quadrature_error", "elliptic_margin", "error"}},
        {Experiment::Fig2,
         {"ratio", "K", "k_fraction", "D", "branch", "delta_phi", "delta_phi_0", "delta_phi_I", "delta_phi_I_approx",
          "gamma_I", "quadrature_error", "elliptic_margin", "error"}},
    };
    return headers.at(e);
}

using PointFn = void (*)(const ExperimentConfig&, const std::vector<std::string>&, std::vector<std::vector<Cell>>&);

PointFn point_function(Experiment e) {
    switch (e) {
        case Experiment::SpinBerry: return spin_berry;
        case Experiment::GhoUncoupled: return gho_uncoupled;
        case Experiment::HybridSpinOsc: return hybrid_spin_osc;
        case Experiment::HybridGho: return hybrid_gho;
        case Experiment::FullQuantum: return full_quantum;
        case Experiment::OracleQuantum: return oracle_quantum;
        case Experiment::OracleClassical: return oracle_classical;
        default: return nullptr;
    }
}

void figure_rows(const ExperimentConfig& cfg, ResultTable& t, const RowCallback& on_row) {
    const bool fig1 = cfg.experiment == Experiment::Fig1;
    for (const auto& [a, b] : cfg.model.ratios) {
        StandardLoopParams p = cfg.model.standard;
        p.n1 = a;
        p.n2 = b;
        const double k_max = elliptic_bound(p).k_max;
        for (double frac : figure_k_fractions()) {
            p.k = frac * k_max;
            RowBuilder row(t.header);
            row.set("ratio", ratio_label(a, b)).set("K", p.k).set("k_fraction", frac).set("D", p.coupling_d());
            try {
                const HybridPhaseReport r = standard_loop_report(p, cfg.numerics.n_samples);
                row.set("branch", std::string(to_string(r.branch)))
                    .set("gamma_I", r.gamma_I_part)
                    .set("quadrature_error", r.quadrature_error)
                    .set("elliptic_margin", r.elliptic_margin);
                if (fig1) {
                    row.set("gamma_0", r.gamma.at(p.n_level))
                        .set("gamma_00", r.gamma_0_part)
                        .set("gamma_I_approx", r.gamma_I_approx);
                } else {
                    row.set("delta_phi", r.delta_phi)
                        .set("delta_phi_0", r.delta_phi_0_part)
                        .set("delta_phi_I", r.delta_phi_I_part)
                        .set("delta_phi_I_approx", r.delta_phi_I_approx);
                }
            } catch (const std::exception& e) {
                row.set("error", error_text(e));
            }
            t.rows.push_back(row.take());
            if (on_row) on_row(t, t.rows.size() - 1);
        }
    }
}

// ---- svg -------------------------------------------------------------------

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string x;
    std::string y;
    std::string series;  // empty: one series
    bool log_x = false;
    bool log_y = false;
};

ChartSpec chart_for(Experiment e, const ResultTable& t) {
    switch (e) {
        case Experiment::Fig1: return {"K", "gamma_0", "ratio", true, true};
        case Experiment::Fig2: return {"K", "delta_phi_I", "ratio", true, false};
        case Experiment::SpinBerry: return {t.header.front(), "delta_theta", "level", false, false};
        case Experiment::GhoUncoupled: return {t.header.front(), "gamma_n0", "n", false, false};
        case Experiment::HybridSpinOsc: return {t.header.front(), "gamma_plus", "", false, false};
        case Experiment::HybridGho: return {t.header.front(), "gamma_n", "", false, false};
        case Experiment::FullQuantum: return {t.header.front(), "gamma_mn", "", false, false};
        case Experiment::OracleQuantum: return {t.header.front(), "abs_error", "", true, true};
        case Experiment::OracleClassical: return {t.header.front(), "abs_error", "", true, true};
    }
    return {t.header.front(), t.header.back(), "", false, false};
}

std::string svg_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string_view to_string(Experiment e) noexcept {
    for (const auto& [k, name] : kExperimentNames) {
        if (k == e) return name;
    }
    return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) noexcept {
    for (const auto& [k, n] : kExperimentNames) {
        if (n == name) return k;
    }
    return std::nullopt;
}

std::size_t Numerics::effective_steps() const {
    const double scale = std::max(1.0, slowness / kReferenceSlowness);
    return static_cast<std::size_t>(std::ceil(static_cast<double>(steps_per_sample) * scale));
}

ExperimentConfig parse_config(const json& j) {
    check_keys(j, "config", {"experiment", "model", "sweep", "numerics", "output", "seed"});
    if (!j.contains("experiment") || !j.at("experiment").is_string()) config_error("experiment name is required");
    ExperimentConfig cfg;
    const auto name = j.at("experiment").get<std::string>();
    const auto e = parse_experiment(name);
    if (!e) config_error("unknown experiment '" + name + "'");
    cfg.experiment = *e;
    if (is_figure(cfg.experiment)) cfg = figure_config(cfg.experiment);
    if (j.contains("model")) parse_model(j.at("model"), cfg.model);
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        check_keys(s, "sweep", {"parameter", "start", "stop", "count", "scale"});
        if (!s.contains("parameter") || !s.at("parameter").is_string()) config_error("sweep.parameter is required");
        SweepSpec spec;
        spec.parameter = s.at("parameter").get<std::string>();
        if (!s.contains("start") || !s.contains("stop") || !s.contains("count")) {
            config_error("sweep needs start, stop and count");
        }
        spec.start = get_number(s, "start", 0.0);
        spec.stop = get_number(s, "stop", 0.0);
        const long long count = get_integer(s, "count", 0);
        if (count < 2) config_error("sweep count must be at least 2");
        spec.count = static_cast<std::size_t>(count);
        if (s.contains("scale")) {
            if (!s.at("scale").is_string()) config_error("sweep.scale must be linear or log");
            const auto scale = s.at("scale").get<std::string>();
            if (scale == "log") spec.log_scale = true;
            else if (scale != "linear") config_error("sweep.scale must be linear or log");
        }
        cfg.sweep = spec;
    }
    if (j.contains("numerics")) {
        const json& n = j.at("numerics");
        check_keys(n, "numerics", {"n_samples", "slowness", "steps_per_sample"});
        const long long samples = get_integer(n, "n_samples", static_cast<long long>(cfg.numerics.n_samples));
        const long long steps = get_integer(n, "steps_per_sample", static_cast<long long>(cfg.numerics.steps_per_sample));
        if (samples < static_cast<long long>(kMinLoopSamples)) config_error("n_samples must be at least 16");
        if (steps < 1) config_error("steps_per_sample must be positive");
        cfg.numerics.n_samples = static_cast<std::size_t>(samples);
        cfg.numerics.steps_per_sample = static_cast<std::size_t>(steps);
        cfg.numerics.slowness = get_number(n, "slowness", cfg.numerics.slowness);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        check_keys(o, "output", {"directory", "emit_svg"});
        if (o.contains("directory")) {
            if (!o.at("directory").is_string()) config_error("output.directory must be a string");
            cfg.output_dir = o.at("directory").get<std::string>();
        }
        if (o.contains("emit_svg")) {
            if (!o.at("emit_svg").is_boolean()) config_error("output.emit_svg must be a boolean");
            cfg.emit_svg = o.at("emit_svg").get<bool>();
        }
    }
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer()) config_error("seed must be an integer");
        const long long seed = j.at("seed").get<long long>();
        if (seed < 0) config_error("seed must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(seed);
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        config_error(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg) {
    const ModelParams& m = cfg.model;
    const StandardLoopParams& p = m.standard;
    json model = {
        {"a1", p.a1},         {"a2", p.a2},           {"mu1", p.mu1},         {"mu2", p.mu2},
        {"base_rate", p.base_rate}, {"epsilon", p.epsilon}, {"j_action", p.j_action}, {"hbar", p.hbar},
        {"n_level", p.n_level}, {"ratio", {p.n1, p.n2}}, {"spin_mu", m.spin_mu}, {"theta", m.theta},
        {"cycles", m.cycles}, {"lambda", m.lambda},   {"field", m.field},     {"i_plus", m.i_plus},
        {"i_minus", m.i_minus}, {"level", m.level},   {"m", m.m},             {"n", m.n},
    };
    if (m.k_fraction) model["k_fraction"] = *m.k_fraction;
    else model["k"] = p.k;
    json ratios = json::array();
    for (const auto& [a, b] : m.ratios) ratios.push_back({a, b});
    model["ratios"] = ratios;
    model["branch"] = m.branch ? std::string(to_string(*m.branch)) : std::string("auto");
    json out = {
        {"experiment", std::string(to_string(cfg.experiment))},
        {"model", model},
        {"numerics",
         {{"n_samples", cfg.numerics.n_samples},
          {"slowness", cfg.numerics.slowness},
          {"steps_per_sample", cfg.numerics.steps_per_sample}}},
        {"output", {{"directory", cfg.output_dir}, {"emit_svg", cfg.emit_svg}}},
        {"seed", cfg.seed},
    };
    if (cfg.sweep) {
        out["sweep"] = {{"parameter", cfg.sweep->parameter},
                        {"start", cfg.sweep->start},
                        {"stop", cfg.sweep->stop},
                        {"count", cfg.sweep->count},
                        {"scale", cfg.sweep->log_scale ? "log" : "linear"}};
    }
    return out;
}

ExperimentConfig figure_config(Experiment fig) {
    if (!is_figure(fig)) throw Error(ErrorKind::InvalidArgument, "not a figure experiment");
    ExperimentConfig cfg;
    cfg.experiment = fig;
    StandardLoopParams& p = cfg.model.standard;
    p.a1 = 1e8;
    p.a2 = 1.0;
    p.mu1 = 1.0;
    p.mu2 = 1.0;
    p.base_rate = 1.0;
    p.epsilon = std::sqrt(3.0) / 2.0;
    p.j_action = 1e13;
    p.hbar = 1.0;
    p.n_level = 0;
    cfg.model.ratios = {{1, 1}, {2, 1}, {1, 2}};
    return cfg;
}

std::vector<double> figure_k_fractions() {
    std::vector<double> out{0.0};
    const double lo = std::log(kFigureSmallestFraction);
    const double hi = std::log(kFigureLargestFraction);
    for (std::size_t i = 0; i < kFigurePoints; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(kFigurePoints - 1);
        out.push_back(i + 1 == kFigurePoints ? kFigureLargestFraction : std::exp(lo + f * (hi - lo)));
    }
    return out;
}

std::vector<double> sweep_values(const SweepSpec& s) {
    std::vector<double> out;
    out.reserve(s.count);
    for (std::size_t i = 0; i < s.count; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(s.count - 1);
        if (i == 0) out.push_back(s.start);
        else if (i + 1 == s.count) out.push_back(s.stop);
        else if (s.log_scale) out.push_back(std::exp(std::log(s.start) + f * (std::log(s.stop) - std::log(s.start))));
        else out.push_back(s.start + f * (s.stop - s.start));
    }
    return out;
}

void set_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
    ModelParams& m = cfg.model;
    StandardLoopParams& p = m.standard;
    auto integral = [&]() {
        if (value != std::round(value)) config_error("parameter " + name + " must be an integer");
        return static_cast<int>(value);
    };
    if (name == "k") {
        p.k = value;
        m.k_fraction.reset();
    } else if (name == "k_fraction") {
        if (!(value >= 0.0 && value < 1.0)) config_error("k_fraction must lie in [0, 1)");
        m.k_fraction = value;
    } else if (name == "epsilon") p.epsilon = value;
    else if (name == "a1") p.a1 = value;
    else if (name == "a2") p.a2 = value;
    else if (name == "mu1") p.mu1 = value;
    else if (name == "mu2") p.mu2 = value;
    else if (name == "base_rate") p.base_rate = value;
    else if (name == "j_action") p.j_action = value;
    else if (name == "hbar") p.hbar = value;
    else if (name == "n_level") p.n_level = integral();
    else if (name == "theta") m.theta = value;
    else if (name == "lambda") m.lambda = value;
    else if (name == "field") m.field = value;
    else if (name == "spin_mu") m.spin_mu = value;
    else if (name == "i_plus") m.i_plus = value;
    else if (name == "i_minus") m.i_minus = value;
    else if (name == "cycles") m.cycles = integral();
    else if (name == "level") m.level = integral();
    else if (name == "m") m.m = integral();
    else if (name == "n") m.n = integral();
    else if (name == "slowness") {
        if (!(value > 0.0)) config_error("slowness must be positive");
        cfg.numerics.slowness = value;
    } else config_error("unknown sweep parameter '" + name + "'");
}

std::size_t ResultTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::InvalidArgument, "no column " + std::string(name));
    return static_cast<std::size_t>(it - header.begin());
}

double ResultTable::number(std::size_t row, std::string_view name) const {
    const Cell& c = rows.at(row).at(column(name));
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* i = std::get_if<long long>(&c)) return static_cast<double>(*i);
    return kNaN;
}

std::string ResultTable::text(std::size_t row, std::string_view name) const {
    return cell_text(rows.at(row).at(column(name)));
}

ResultTable run_experiment(const ExperimentConfig& cfg, const RowCallback& on_row) {
    ResultTable t;
    t.header = header_for(cfg.experiment);
    if (is_figure(cfg.experiment)) {
        figure_rows(cfg, t, on_row);
        return t;
    }
    const PointFn fn = point_function(cfg.experiment);
    if (!cfg.sweep) {
        fn(cfg, t.header, t.rows);
        if (on_row) {
            for (std::size_t i = 0; i < t.rows.size(); ++i) on_row(t, i);
        }
        return t;
    }
    const SweepSpec& s = *cfg.sweep;
    // the coupling parameter is named k in configs and K in tables
    const std::string column = s.parameter == "k" ? "K" : s.parameter;
    const bool own_column = std::find(t.header.begin(), t.header.end(), column) != t.header.end();
    if (!own_column) t.header.insert(t.header.begin(), column);
    for (double v : sweep_values(s)) {
        ExperimentConfig point = cfg;
        point.sweep.reset();
        set_parameter(point, s.parameter, v);
        const std::size_t first = t.rows.size();
        try {
            fn(point, t.header, t.rows);
        } catch (const std::exception& e) {
            t.rows.resize(first);
            RowBuilder row(t.header);
            row.set(column, v).set("error", error_text(e));
            t.rows.push_back(row.take());
        }
        for (std::size_t i = first; i < t.rows.size(); ++i) {
            if (!own_column) t.rows[i][0] = v;
            if (on_row) on_row(t, i);
        }
    }
    return t;
}

std::string to_csv(const ResultTable& t) {
    std::string out;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(t.header[i]);
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cell_text(row[i]));
        }
        out += '\n';
    }
    return out;
}

std::string to_svg(const ResultTable& t, Experiment e) {
    const ChartSpec spec = chart_for(e, t);
    std::vector<Series> series;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const double x = t.number(r, spec.x);
        const double y = t.number(r, spec.y);
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        if ((spec.log_x && !(x > 0.0)) || (spec.log_y && !(y > 0.0))) continue;
        const std::string name = spec.series.empty() ? spec.y : spec.series + "=" + t.text(r, spec.series);
        auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == name; });
        if (it == series.end()) {
            series.push_back({name, {}, {}});
            it = series.end() - 1;
        }
        it->x.push_back(spec.log_x ? std::log10(x) : x);
        it->y.push_back(spec.log_y ? std::log10(y) : y);
    }

    constexpr double kW = 640.0, kH = 420.0, kLeft = 80.0, kRight = 160.0, kTop = 30.0, kBottom = 50.0;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series) {
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (series.empty()) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    auto px = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * (kW - kLeft - kRight); };
    auto py = [&](double v) { return kH - kBottom - (v - y0) / (y1 - y0) * (kH - kTop - kBottom); };

    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    char buf[256];
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                  kTop, kW - kLeft - kRight, kH - kTop - kBottom);
    os << buf;
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"middle\">%.3g</text>\n",
                      px(xv), kH - kBottom + 14.0, xv);
        os << buf;
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" text-anchor=\"end\">%.3g</text>\n",
                      kLeft - 4.0, py(yv) + 3.0, yv);
        os << buf;
    }
    const std::string xlabel = spec.log_x ? "log10 " + spec.x : spec.x;
    const std::string ylabel = spec.log_y ? "log10 " + spec.y : spec.y;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\">%s</text>\n",
                  kLeft + (kW - kLeft - kRight) / 2.0, kH - 12.0, svg_escape(xlabel).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf,
                  "<text x=\"16\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 %.1f)\">%s</text>\n",
                  kTop + (kH - kTop - kBottom) / 2.0, kTop + (kH - kTop - kBottom) / 2.0, svg_escape(ylabel).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n",
                  kLeft + (kW - kLeft - kRight) / 2.0, std::string(to_string(e)).c_str());
    os << buf;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = colors[i % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[i].x.size(); ++k) {
            std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", k ? " " : "", px(series[i].x[k]), py(series[i].y[k]));
            os << buf;
        }
        os << "\"/>\n";
        std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"%s\">%s</text>\n",
                      kW - kRight + 10.0, kTop + 16.0 * static_cast<double>(i + 1), color,
                      svg_escape(series[i].name).c_str());
        os << buf;
    }
    os << "</svg>\n";
    return os.str();
}

RunFiles write_outputs(const ExperimentConfig& cfg, const ResultTable& t, double elapsed_seconds) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::ConfigInvalid, "cannot create output directory " + cfg.output_dir);
    auto write = [](const fs::path& path, const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorKind::ConfigInvalid, "cannot write " + path.string());
        out << text;
    };
    const std::string stem(to_string(cfg.experiment));
    RunFiles files;
    files.csv = (dir / (stem + ".csv")).string();
    write(files.csv, to_csv(t));
    if (cfg.emit_svg) {
        files.svg = (dir / (stem + ".svg")).string();
        write(files.svg, to_svg(t, cfg.experiment));
    }
    std::size_t errors = 0;
    const std::size_t ec_col = t.column("error");
    for (const auto& row : t.rows) {
        if (!std::holds_alternative<std::monostate>(row[ec_col])) ++errors;
    }
    json meta = {
        {"config", to_json(cfg)},
        {"version", kVersion},
        {"timings", {{"elapsed_seconds", elapsed_seconds}}},
        {"rows", t.rows.size()},
        {"error_rows", errors},
        {"files", json::array({files.csv})},
    };
    if (!files.svg.empty()) meta["files"].push_back(files.svg);
    files.meta = (dir / "run_meta.json").string();
    write(files.meta, meta.dump(2) + "\n");
    return files;
}

}  // namespace holonomy
