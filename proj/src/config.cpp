#include "ellopt/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "ellopt/expression.hpp"

namespace ellopt {

namespace {

constexpr std::pair<Problem, const char*> kProblems[] = {
    {Problem::coefficient_power, "coefficient_power"},
    {Problem::coefficient_two_phase, "coefficient_two_phase"},
    {Problem::potential_compliance, "potential_compliance"},
    {Problem::potential_bangbang, "potential_bangbang"},
    {Problem::source_compliance, "source_compliance"},
    {Problem::source_eigen, "source_eigen"},
    {Problem::gclosure_scan, "gclosure_scan"},
};

// --- reading helpers --------------------------------------------------------

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

void reject_unknown(const toml::table& t, const std::string& prefix, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, node] : t) {
    (void)node;
    const std::string k(key.str());
    if (!ok.contains(k)) throw ConfigError(join(prefix, k), "unknown key");
  }
}

const toml::table& require_table(const toml::table& t, const std::string& prefix, const char* key) {
  const toml::node* n = t.get(key);
  if (!n) throw ConfigError(join(prefix, key), "missing table");
  if (!n->is_table()) throw ConfigError(join(prefix, key), "must be a table");
  return *n->as_table();
}

double get_double(const toml::table& t, const std::string& prefix, const char* key, std::optional<double> fallback) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    throw ConfigError(join(prefix, key), "missing");
  }
  if (auto v = n->value<double>(); v && (n->is_floating_point() || n->is_integer())) return *v;
  throw ConfigError(join(prefix, key), "must be a number");
}

std::string get_string(const toml::table& t, const std::string& prefix, const char* key,
                       std::optional<std::string> fallback) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    throw ConfigError(join(prefix, key), "missing");
  }
  if (auto v = n->value_exact<std::string>()) return *v;
  throw ConfigError(join(prefix, key), "must be a string");
}

bool get_bool(const toml::table& t, const std::string& prefix, const char* key, bool fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (auto v = n->value_exact<bool>()) return *v;
  throw ConfigError(join(prefix, key), "must be a boolean");
}

std::int64_t get_int(const toml::table& t, const std::string& prefix, const char* key, std::int64_t fallback) {
  const toml::node* n = t.get(key);
  if (!n) return fallback;
  if (auto v = n->value_exact<std::int64_t>()) return *v;
  throw ConfigError(join(prefix, key), "must be an integer");
}

Point2 get_point(const toml::table& t, const std::string& prefix, const char* key, std::optional<Point2> fallback) {
  const toml::node* n = t.get(key);
  if (!n) {
    if (fallback) return *fallback;
    throw ConfigError(join(prefix, key), "missing");
  }
  const toml::array* a = n->as_array();
  if (!a || a->size() != 2) throw ConfigError(join(prefix, key), "must be an array of two numbers");
  auto x = (*a)[0].value<double>();
  auto y = (*a)[1].value<double>();
  if (!x || !y) throw ConfigError(join(prefix, key), "must be an array of two numbers");
  return {*x, *y};
}

DomainSpec read_domain(const toml::table& t) {
  const std::string pre = "domain";
  const std::string kind = get_string(t, pre, "kind", std::nullopt);
  if (kind == "unit_square") {
    reject_unknown(t, pre, {"kind"});
    return UnitSquare{};
  }
  if (kind == "rectangle") {
    reject_unknown(t, pre, {"kind", "lx", "ly", "centered"});
    return Rectangle{get_double(t, pre, "lx", std::nullopt), get_double(t, pre, "ly", std::nullopt),
                     get_bool(t, pre, "centered", false)};
  }
  if (kind == "disk") {
    reject_unknown(t, pre, {"kind", "r", "center"});
    return Disk{get_double(t, pre, "r", 1.0), get_point(t, pre, "center", Point2{})};
  }
  if (kind == "ellipse") {
    reject_unknown(t, pre, {"kind", "a", "b"});
    return Ellipse{get_double(t, pre, "a", std::nullopt), get_double(t, pre, "b", std::nullopt)};
  }
  throw ConfigError("domain.kind", "unknown domain '" + kind + "' (unit_square, rectangle, disk, ellipse)");
}

ConvexFunctionSpec read_psi(const toml::table& t) {
  const std::string pre = "psi";
  const std::string kind = get_string(t, pre, "kind", std::nullopt);
  if (kind == "power") {
    reject_unknown(t, pre, {"kind", "p"});
    return PowerOverP{get_double(t, pre, "p", std::nullopt)};
  }
  if (kind == "quadratic") {
    reject_unknown(t, pre, {"kind", "whole_line"});
    return Quadratic{get_bool(t, pre, "whole_line", false)};
  }
  if (kind == "linear_interval") {
    reject_unknown(t, pre, {"kind", "alpha", "beta", "k"});
    return LinearOnInterval{get_double(t, pre, "alpha", std::nullopt), get_double(t, pre, "beta", std::nullopt),
                            get_double(t, pre, "k", std::nullopt)};
  }
  if (kind == "indicator_interval") {
    reject_unknown(t, pre, {"kind", "alpha", "beta"});
    return IndicatorInterval{get_double(t, pre, "alpha", std::nullopt), get_double(t, pre, "beta", std::nullopt)};
  }
  if (kind == "absolute") {
    reject_unknown(t, pre, {"kind"});
    return AbsoluteValue{};
  }
  throw ConfigError("psi.kind",
                    "unknown function '" + kind + "' (power, quadratic, linear_interval, indicator_interval, absolute)");
}

Shape read_shape(const toml::table& t, const std::string& pre) {
  const std::string kind = get_string(t, pre, "kind", std::nullopt);
  if (kind == "ball") {
    reject_unknown(t, pre, {"kind", "center", "r"});
    return BallShape{get_point(t, pre, "center", std::nullopt), get_double(t, pre, "r", std::nullopt)};
  }
  if (kind == "rect") {
    reject_unknown(t, pre, {"kind", "lo", "hi"});
    return RectShape{get_point(t, pre, "lo", std::nullopt), get_point(t, pre, "hi", std::nullopt)};
  }
  throw ConfigError(pre + ".kind", "unknown shape '" + kind + "' (ball, rect)");
}

SourceSpec read_source(const toml::table& t) {
  const std::string pre = "source";
  const std::string kind = get_string(t, pre, "kind", std::nullopt);
  if (kind == "constant") {
    reject_unknown(t, pre, {"kind", "value"});
    return ConstantSource{get_double(t, pre, "value", std::nullopt)};
  }
  if (kind == "point_mass") {
    reject_unknown(t, pre, {"kind", "x0", "weight"});
    return PointSource{get_point(t, pre, "x0", Point2{}), get_double(t, pre, "weight", 1.0)};
  }
  if (kind == "indicator_union") {
    reject_unknown(t, pre, {"kind", "value", "shapes"});
    IndicatorUnion u;
    u.value = get_double(t, pre, "value", 1.0);
    const toml::node* n = t.get("shapes");
    if (!n || !n->is_array_of_tables()) throw ConfigError("source.shapes", "must be an array of tables");
    std::size_t i = 0;
    for (const toml::node& s : *n->as_array()) {
      u.shapes.push_back(read_shape(*s.as_table(), "source.shapes[" + std::to_string(i++) + "]"));
    }
    return u;
  }
  if (kind == "expression") {
    reject_unknown(t, pre, {"kind", "expr"});
    return ExpressionSource{get_string(t, pre, "expr", std::nullopt)};
  }
  throw ConfigError("source.kind", "unknown source '" + kind + "' (constant, point_mass, indicator_union, expression)");
}

// --- writing helpers --------------------------------------------------------

toml::array point(Point2 p) { return toml::array{p.x, p.y}; }

toml::table write_domain(const DomainSpec& d) {
  return std::visit(
      [](const auto& v) -> toml::table {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, UnitSquare>) {
          return toml::table{{"kind", "unit_square"}};
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          return toml::table{{"kind", "rectangle"}, {"lx", v.lx}, {"ly", v.ly}, {"centered", v.centered}};
        } else if constexpr (std::is_same_v<T, Disk>) {
          return toml::table{{"kind", "disk"}, {"r", v.r}, {"center", point(v.center)}};
        } else {
          return toml::table{{"kind", "ellipse"}, {"a", v.a}, {"b", v.b}};
        }
      },
      d);
}

toml::table write_psi(const ConvexFunctionSpec& psi) {
  return std::visit(
      [](const auto& v) -> toml::table {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, PowerOverP>) {
          return toml::table{{"kind", "power"}, {"p", v.p}};
        } else if constexpr (std::is_same_v<T, Quadratic>) {
          return toml::table{{"kind", "quadratic"}, {"whole_line", v.whole_line}};
        } else if constexpr (std::is_same_v<T, LinearOnInterval>) {
          return toml::table{{"kind", "linear_interval"}, {"alpha", v.alpha}, {"beta", v.beta}, {"k", v.k}};
        } else if constexpr (std::is_same_v<T, IndicatorInterval>) {
          return toml::table{{"kind", "indicator_interval"}, {"alpha", v.alpha}, {"beta", v.beta}};
        } else {
          return toml::table{{"kind", "absolute"}};
        }
      },
      psi);
}

toml::table write_source(const SourceSpec& s) {
  return std::visit(
      [](const auto& v) -> toml::table {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantSource>) {
          return toml::table{{"kind", "constant"}, {"value", v.value}};
        } else if constexpr (std::is_same_v<T, PointSource>) {
          return toml::table{{"kind", "point_mass"}, {"x0", point(v.x0)}, {"weight", v.weight}};
        } else if constexpr (std::is_same_v<T, IndicatorUnion>) {
          toml::array shapes;
          for (const Shape& sh : v.shapes) {
            if (const auto* b = std::get_if<BallShape>(&sh)) {
              shapes.push_back(toml::table{{"kind", "ball"}, {"center", point(b->center)}, {"r", b->r}});
            } else {
              const auto& r = std::get<RectShape>(sh);
              shapes.push_back(toml::table{{"kind", "rect"}, {"lo", point(r.lo)}, {"hi", point(r.hi)}});
            }
          }
          return toml::table{{"kind", "indicator_union"}, {"value", v.value}, {"shapes", std::move(shapes)}};
        } else {
          return toml::table{{"kind", "expression"}, {"expr", v.text}};
        }
      },
      s);
}

bool source_nonnegative(const SourceSpec& s) {
  if (const auto* c = std::get_if<ConstantSource>(&s)) return c->value >= 0.0;
  if (const auto* u = std::get_if<IndicatorUnion>(&s)) return u->value >= 0.0;
  if (const auto* p = std::get_if<PointSource>(&s)) return p->weight >= 0.0;
  return true;
}

void require(bool ok, const char* field, const std::string& message) {
  if (!ok) throw ConfigError(field, message);
}

}  // namespace

std::string to_string(Problem p) {
  for (const auto& [v, s] : kProblems) {
    if (v == p) return s;
  }
  return "unknown";
}

std::optional<Problem> problem_from_string(const std::string& s) {
  for (const auto& [v, name] : kProblems) {
    if (s == name) return v;
  }
  return std::nullopt;
}

void validate(const ExperimentConfig& cfg) {
  require(!cfg.name.empty(), "name", "must not be empty");
  require(std::isfinite(cfg.h) && cfg.h > 0.0, "h", "must be a positive number");
  require(std::isfinite(cfg.tol) && cfg.tol > 0.0 && cfg.tol < 1.0, "tol", "must lie in (0, 1)");
  try {
    validate(cfg.domain);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("domain", e.what());
  }
  const BoundingBox bb = bounding_box(cfg.domain);
  require(cfg.h < std::min(bb.hi.x - bb.lo.x, bb.hi.y - bb.lo.y), "h", "must be smaller than the domain");
  if (cfg.problem != Problem::gclosure_scan) {
    const std::size_t nodes = static_cast<std::size_t>((bb.hi.x - bb.lo.x) / cfg.h + 3) *
                              static_cast<std::size_t>((bb.hi.y - bb.lo.y) / cfg.h + 3);
    require(nodes <= 20'000'000, "h", "grid too fine (more than 2e7 nodes)");
  }

  if (const auto* e = std::get_if<ExpressionSource>(&cfg.source)) {
    try {
      Expression::parse(e->text);
    } catch (const ExpressionError& err) {
      throw ConfigError("source.expr", err.what());
    }
  }
  if (const auto* u = std::get_if<IndicatorUnion>(&cfg.source)) {
    require(!u->shapes.empty(), "source.shapes", "must list at least one shape");
    for (const Shape& s : u->shapes) {
      if (const auto* b = std::get_if<BallShape>(&s)) require(b->r > 0.0, "source.shapes", "ball radius must be positive");
      if (const auto* r = std::get_if<RectShape>(&s)) {
        require(r->lo.x < r->hi.x && r->lo.y < r->hi.y, "source.shapes", "rect needs lo < hi componentwise");
      }
    }
  }
  const bool field_source = !std::holds_alternative<PointSource>(cfg.source);

  switch (cfg.problem) {
    case Problem::coefficient_power:
      require(std::isfinite(cfg.p) && cfg.p > 1.0, "p", "must be > 1");
      break;
    case Problem::coefficient_two_phase:
      require(cfg.alpha > 0.0, "alpha", "must be > 0");
      require(cfg.alpha < cfg.beta, "alpha", "must be < beta");
      require(field_source, "source.kind", "two-phase problem needs a function source, not a point mass");
      break;
    case Problem::potential_compliance:
      try {
        validate(cfg.psi);
      } catch (const std::invalid_argument& e) {
        throw ConfigError("psi", e.what());
      }
      require(is_superlinear(cfg.psi), "psi.kind", "must be power or quadratic");
      require(field_source, "source.kind", "potential problem needs a function source, not a point mass");
      break;
    case Problem::potential_bangbang:
      require(cfg.alpha >= 0.0, "alpha", "must be >= 0");
      require(cfg.alpha < cfg.beta, "alpha", "must be < beta");
      require(cfg.k >= 0.0, "k", "must be >= 0");
      require(field_source, "source.kind", "potential problem needs a function source, not a point mass");
      require(source_nonnegative(cfg.source), "source", "must be nonnegative");
      break;
    case Problem::source_compliance: {
      require(cfg.alpha >= 0.0, "alpha", "must be >= 0");
      require(cfg.alpha < cfg.beta, "alpha", "must be < beta");
      const double omega = area(cfg.domain);
      require(cfg.m > cfg.alpha * omega && cfg.m < cfg.beta * omega, "m",
              "must satisfy alpha*|Omega| < m < beta*|Omega| (|Omega| = " + std::to_string(omega) + ")");
      break;
    }
    case Problem::source_eigen:
      require(std::isfinite(cfg.m) && cfg.m > 0.0, "m", "must be > 0");
      break;
    case Problem::gclosure_scan:
      require(cfg.alpha > 0.0, "alpha", "must be > 0");
      require(cfg.alpha < cfg.beta, "alpha", "must be < beta");
      require(cfg.samples > 0, "samples", "must be positive");
      break;
  }
}

ExperimentConfig parse_config(const std::string& text) {
  toml::table t;
  try {
    t = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "TOML syntax error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError("<document>", os.str());
  }
  reject_unknown(t, "", {"name", "problem", "h", "tol", "output_dir", "m", "alpha", "beta", "k", "p", "samples",
                         "seed", "domain", "psi", "source"});
  ExperimentConfig cfg;
  cfg.name = get_string(t, "", "name", "custom");
  const std::string prob = get_string(t, "", "problem", std::nullopt);
  const auto pr = problem_from_string(prob);
  if (!pr) throw ConfigError("problem", "unknown problem '" + prob + "'");
  cfg.problem = *pr;
  cfg.h = get_double(t, "", "h", std::nullopt);
  cfg.tol = get_double(t, "", "tol", cfg.tol);
  cfg.output_dir = get_string(t, "", "output_dir", "");
  cfg.m = get_double(t, "", "m", cfg.m);
  cfg.alpha = get_double(t, "", "alpha", cfg.alpha);
  cfg.beta = get_double(t, "", "beta", cfg.beta);
  cfg.k = get_double(t, "", "k", cfg.k);
  cfg.p = get_double(t, "", "p", cfg.p);
  const std::int64_t samples = get_int(t, "", "samples", static_cast<std::int64_t>(cfg.samples));
  if (samples <= 0) throw ConfigError("samples", "must be positive");
  cfg.samples = static_cast<std::size_t>(samples);
  cfg.seed = static_cast<std::uint64_t>(get_int(t, "", "seed", static_cast<std::int64_t>(cfg.seed)));
  cfg.domain = read_domain(require_table(t, "", "domain"));
  if (t.contains("psi")) cfg.psi = read_psi(require_table(t, "", "psi"));
  if (t.contains("source")) cfg.source = read_source(require_table(t, "", "source"));
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  toml::table t{
      {"name", cfg.name},
      {"problem", to_string(cfg.problem)},
      {"h", cfg.h},
      {"tol", cfg.tol},
      {"output_dir", cfg.output_dir},
      {"m", cfg.m},
      {"alpha", cfg.alpha},
      {"beta", cfg.beta},
      {"k", cfg.k},
      {"p", cfg.p},
      {"samples", static_cast<std::int64_t>(cfg.samples)},
      {"seed", static_cast<std::int64_t>(cfg.seed)},
      {"domain", write_domain(cfg.domain)},
      {"psi", write_psi(cfg.psi)},
      {"source", write_source(cfg.source)},
  };
  std::ostringstream os;
  os << t << '\n';
  return os.str();
}

RhsDescriptor make_source(const ExperimentConfig& cfg, const GridPtr& grid) {
  return std::visit(
      [&](const auto& v) -> RhsDescriptor {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantSource>) {
          return ScalarField::constant(grid, v.value);
        } else if constexpr (std::is_same_v<T, PointSource>) {
          return PointMass{v.x0, v.weight};
        } else if constexpr (std::is_same_v<T, IndicatorUnion>) {
          return ScalarField::from_function(grid, [&](Point2 x) {
            for (const Shape& s : v.shapes) {
              if (const auto* b = std::get_if<BallShape>(&s)) {
                if (std::hypot(x.x - b->center.x, x.y - b->center.y) <= b->r) return v.value;
              } else {
                const auto& r = std::get<RectShape>(s);
                if (x.x >= r.lo.x && x.x <= r.hi.x && x.y >= r.lo.y && x.y <= r.hi.y) return v.value;
              }
            }
            return 0.0;
          });
        } else {
          const Expression e = Expression::parse(v.text);
          return ScalarField::from_function(grid, [&](Point2 x) { return e(x); });
        }
      },
      cfg.source);
}

// --- presets ----------------------------------------------------------------

namespace {

std::vector<Preset> build_presets() {
  std::vector<Preset> out;
  auto add = [&](std::string name, std::string anchor, ExperimentConfig c) {
    c.name = name;
    out.push_back({std::move(name), std::move(anchor), std::move(c)});
  };
  const double h = 1.0 / 64.0;

  ExperimentConfig c;
  c.problem = Problem::coefficient_power;
  c.domain = Disk{1.0, {}};
  c.h = h;
  c.p = 2.0;
  c.source = ConstantSource{1.0};
  c.tol = 1e-9;
  add("ex1-disk-f1-p2", "power-law coefficient, unit disk, f = 1, p = 2; radial closed form", c);

  c.source = PointSource{{0.0, 0.0}, 1.0};
  add("ex1-disk-dirac-p2", "power-law coefficient, unit disk, Dirac source at 0, p = 2; closed form A_p, B_p", c);

  c = ExperimentConfig{};
  c.problem = Problem::coefficient_two_phase;
  c.domain = Disk{1.0, {}};
  c.h = h;
  c.alpha = 1.0;
  c.beta = 2.0;
  c.source = ConstantSource{4.0};
  c.tol = 1e-9;
  add("ex2-two-phase-disk", "two-phase coefficient in [1, 2], unit disk, f = 4", c);

  c = ExperimentConfig{};
  c.problem = Problem::potential_compliance;
  c.domain = Disk{1.0, {}};
  c.h = h;
  c.psi = Quadratic{};
  c.source = ConstantSource{1.0};
  c.tol = 1e-10;
  add("potential-compliance-disk", "compliance potential, psi = s^2/2, unit disk, f = 1", c);

  c = ExperimentConfig{};
  c.problem = Problem::potential_bangbang;
  c.domain = Disk{1.0, {}};
  c.h = h;
  c.alpha = 0.0;
  c.beta = 1.0;
  c.k = 0.00225;
  c.source = IndicatorUnion{{BallShape{{0.35, 0.45}, 0.2}, BallShape{{-0.35, 0.45}, 0.2},
                             RectShape{{-0.5, -0.5}, {0.5, -0.25}}},
                            1.0};
  c.tol = 1e-11;
  add("ex31-bangbang-potential", "bang-bang potential, two balls and a bar, alpha = 0, beta = 1, k = 0.00225", c);

  c = ExperimentConfig{};
  c.problem = Problem::source_compliance;
  c.domain = Disk{1.0, {}};
  c.h = h;
  c.alpha = 0.0;
  c.beta = 1.0;
  c.m = std::numbers::pi / 2.0;
  c.tol = 1e-10;
  add("complper-disk", "compliance source in [0, 1] with int f >= pi/2, unit disk", c);

  c = ExperimentConfig{};
  c.problem = Problem::source_eigen;
  c.domain = Ellipse{2.0, 1.0};
  c.h = h;
  c.m = 0.5;
  c.tol = 1e-10;
  add("eig-ellipse", "eigen source, ellipse x^2 + 4y^2 < 4, m = 1/2; lambda = 0.0785912", c);

  c.domain = UnitSquare{};
  add("eig-square", "eigen source, unit square, m = 1/2; mu1 = 2 pi^2", c);

  c = ExperimentConfig{};
  c.problem = Problem::gclosure_scan;
  c.domain = UnitSquare{};
  c.h = 0.25;
  c.alpha = 1.0;
  c.beta = 2.0;
  c.samples = 10000;
  c.seed = 20240101;
  add("gclosure-lens", "two-phase G-closure, alpha = 1, beta = 2: lamination search vs lens formula", c);
  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build_presets();
  return all;
}

const Preset* find_preset(const std::string& name) {
  for (const Preset& p : presets()) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::string list_presets() {
  std::ostringstream os;
  for (const Preset& p : presets()) {
    os << p.name;
    for (std::size_t i = p.name.size(); i < 28; ++i) os << ' ';
    os << p.anchor << '\n';
  }
  return os.str();
}

}  // namespace ellopt
