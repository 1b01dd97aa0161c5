#pragma once

#include "holonomy/hybrid_pipeline.hpp"
#include "holonomy/manifold.hpp"

#include "json.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace holonomy {

enum class Experiment {
    SpinBerry,
    GhoUncoupled,
    HybridSpinOsc,
    HybridGho,
    FullQuantum,
    OracleQuantum,
    OracleClassical,
    Fig1,
    Fig2,
};

std::string_view to_string(Experiment e) noexcept;
std::optional<Experiment> parse_experiment(std::string_view name) noexcept;

struct SweepSpec {
    std::string parameter;
    double start = 0.0;
    double stop = 0.0;
    std::size_t count = 2;
    bool log_scale = false;
};

/// Model parameters shared by all experiments; each experiment reads the
/// subset it needs.
struct ModelParams {
    StandardLoopParams standard;
    std::vector<std::pair<int, int>> ratios{{1, 1}, {2, 1}, {1, 2}};
    std::optional<double> k_fraction;   ///< K / K_max, overrides standard.k when set
    std::optional<PeriodBranch> branch;  ///< forced period branch for the GHO reports
    double spin_mu = 1.0;
    double theta = 1.5707963267948966;  ///< polar angle of the spin cone loop
    int cycles = 1;
    double lambda = 0.05;
    double field = 1.0;
    double i_plus = 0.5;
    double i_minus = 0.5;
    int level = 1;  ///< spin level for the quantum oracle (1 or 2)
    int m = 0;
    int n = 0;
};

struct Numerics {
    std::size_t n_samples = kDefaultLoopSamples;
    double slowness = 1000.0;
    /// RK4 steps per loop sample at slowness <= 1000; above that the count
    /// grows in proportion so the time step stays fixed.
    std::size_t steps_per_sample = 32;

    std::size_t effective_steps() const;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::HybridGho;
    ModelParams model;
    std::optional<SweepSpec> sweep;
    Numerics numerics;
    std::string output_dir = ".";
    bool emit_svg = false;
    std::uint64_t seed = 0;
};

/// Strict parse: unknown keys, wrong types and invalid values throw ConfigInvalid.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Figure parameters: eps = sqrt(3)/2, A1/A2 = 1e8, J/hbar = 1e13, ratios
/// 1/1, 2/1, 1/2, K from 0 then 50 log-spaced points up to 0.95 K_max.
ExperimentConfig figure_config(Experiment fig);

inline constexpr std::size_t kFigurePoints = 50;
inline constexpr double kFigureSmallestFraction = 1e-6;
inline constexpr double kFigureLargestFraction = 0.95;

/// Grid of the figure sweeps as fractions of K_max, K = 0 first.
std::vector<double> figure_k_fractions();

std::vector<double> sweep_values(const SweepSpec& s);

/// Sets a named scalar parameter (k, k_fraction, epsilon, theta, lambda,
/// slowness, j_action, ...). Throws ConfigInvalid for unknown names.
void set_parameter(ExperimentConfig& cfg, const std::string& name, double value);

using Cell = std::variant<std::monostate, double, long long, std::string>;

struct ResultTable {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;

    std::size_t column(std::string_view name) const;
    /// Numeric cell as double; NaN when empty.
    double number(std::size_t row, std::string_view name) const;
    std::string text(std::size_t row, std::string_view name) const;
};

using RowCallback = std::function<void(const ResultTable&, std::size_t row)>;

/// Evaluates the configured experiment over its sweep (or single point). Sweep
/// points that fail record the error in the `error` column and the run goes
/// on; a failing single-point run throws.
ResultTable run_experiment(const ExperimentConfig& cfg, const RowCallback& on_row = {});

/// Header plus rows, 17 significant digits, empty cells for missing values.
std::string to_csv(const ResultTable& t);

/// Polyline chart of the experiment's headline column against its sweep axis.
std::string to_svg(const ResultTable& t, Experiment e);

struct RunFiles {
    std::string csv;
    std::string svg;
    std::string meta;
};

/// Writes <experiment>.csv, optionally <experiment>.svg, and run_meta.json.
RunFiles write_outputs(const ExperimentConfig& cfg, const ResultTable& t, double elapsed_seconds);

}  // namespace holonomy
