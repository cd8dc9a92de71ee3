#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ellopt/convex.hpp"
#include "ellopt/grid.hpp"
#include "ellopt/opt_coefficient.hpp"

namespace ellopt {

enum class Problem {
  coefficient_power,
  coefficient_two_phase,
  potential_compliance,
  potential_bangbang,
  source_compliance,
  source_eigen,
  gclosure_scan,
};

std::string to_string(Problem p);
std::optional<Problem> problem_from_string(const std::string& s);

// --- Source descriptors ---------------------------------------------------

struct ConstantSource {
  double value = 1.0;
  friend bool operator==(const ConstantSource&, const ConstantSource&) = default;
};

struct PointSource {
  Point2 x0{};
  double weight = 1.0;
  friend bool operator==(const PointSource&, const PointSource&) = default;
};

/// Closed ball |x - center| <= r.
struct BallShape {
  Point2 center{};
  double r = 0.1;
  friend bool operator==(const BallShape&, const BallShape&) = default;
};

/// Closed box lo <= x <= hi.
struct RectShape {
  Point2 lo{};
  Point2 hi{};
  friend bool operator==(const RectShape&, const RectShape&) = default;
};

using Shape = std::variant<BallShape, RectShape>;

/// `value` on the union of the shapes, zero elsewhere.
struct IndicatorUnion {
  std::vector<Shape> shapes;
  double value = 1.0;
  friend bool operator==(const IndicatorUnion&, const IndicatorUnion&) = default;
};

/// See Expression for the grammar.
struct ExpressionSource {
  std::string text;
  friend bool operator==(const ExpressionSource&, const ExpressionSource&) = default;
};

using SourceSpec = std::variant<ConstantSource, PointSource, IndicatorUnion, ExpressionSource>;

// --- Experiment -----------------------------------------------------------

struct ExperimentConfig {
  std::string name = "custom";
  Problem problem = Problem::coefficient_power;
  DomainSpec domain = Disk{};
  double h = 1.0 / 32.0;
  ConvexFunctionSpec psi = Quadratic{};
  SourceSpec source = ConstantSource{};
  double m = 0.5;
  double alpha = 0.0;
  double beta = 1.0;
  double k = 0.0;
  double p = 2.0;
  double tol = 1e-9;
  std::size_t samples = 10000;
  std::uint64_t seed = 20240101;
  /// Empty: $ELLOPT_OUT_DIR/<name> or ./ellopt_out/<name>.
  std::string output_dir;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// A problem with one configuration field; `field` uses dotted TOML paths.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::invalid_argument("config error: field '" + field + "': " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Parses TOML text. Throws ConfigError on unknown keys, missing or mistyped
/// fields, and anything validate() rejects.
ExperimentConfig parse_config(const std::string& toml_text);
ExperimentConfig load_config(const std::string& path);

/// TOML text that parse_config maps back to an equal config.
std::string serialize_config(const ExperimentConfig& cfg);

/// Checks that the fields needed by cfg.problem are present and consistent.
void validate(const ExperimentConfig& cfg);

/// Source evaluated on the grid: a nodal field, or a point mass.
RhsDescriptor make_source(const ExperimentConfig& cfg, const GridPtr& grid);

// --- Presets --------------------------------------------------------------

struct Preset {
  std::string name;
  std::string anchor;  ///< where the configuration comes from
  ExperimentConfig config;
};

const std::vector<Preset>& presets();
/// nullptr when unknown.
const Preset* find_preset(const std::string& name);
/// One line per preset: "<name>  <anchor>".
std::string list_presets();

}  // namespace ellopt
