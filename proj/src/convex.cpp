#include "ellopt/convex.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ellopt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double pos(double t) { return t > 0.0 ? t : 0.0; }

// Conjugate exponent p' = p / (p - 1).
double dual_exponent(double p) { return p / (p - 1.0); }

}  // namespace

void validate(const ConvexFunctionSpec& psi) {
  std::visit(overloaded{
                 [](const PowerOverP& f) {
                   if (!(f.p > 1.0) || !std::isfinite(f.p)) throw std::invalid_argument("psi: power requires p > 1");
                 },
                 [](const Quadratic&) {},
                 [](const LinearOnInterval& f) {
                   if (!(f.alpha >= 0.0)) throw std::invalid_argument("psi: alpha must be >= 0");
                   if (!(f.alpha < f.beta)) throw std::invalid_argument("psi: alpha must be < beta");
                   if (!(f.k >= 0.0)) throw std::invalid_argument("psi: k must be >= 0");
                 },
                 [](const IndicatorInterval& f) {
                   if (!(f.alpha < f.beta)) throw std::invalid_argument("psi: alpha must be < beta");
                 },
                 [](const AbsoluteValue&) {},
             },
             psi);
}

std::string describe(const ConvexFunctionSpec& psi) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const PowerOverP& f) { os << "power(p=" << f.p << ")"; },
                 [&](const Quadratic& f) { os << (f.whole_line ? "quadratic(whole line)" : "quadratic"); },
                 [&](const LinearOnInterval& f) {
                   os << "linear_on_interval(alpha=" << f.alpha << ", beta=" << f.beta << ", k=" << f.k << ")";
                 },
                 [&](const IndicatorInterval& f) {
                   os << "indicator_interval(alpha=" << f.alpha << ", beta=" << f.beta << ")";
                 },
                 [&](const AbsoluteValue&) { os << "abs"; },
             },
             psi);
  return os.str();
}

Interval domain_of(const ConvexFunctionSpec& psi) {
  return std::visit(overloaded{
                        [](const PowerOverP&) { return Interval{0.0, kInf}; },
                        [](const Quadratic& f) { return Interval{f.whole_line ? -kInf : 0.0, kInf}; },
                        [](const LinearOnInterval& f) { return Interval{f.alpha, f.beta}; },
                        [](const IndicatorInterval& f) { return Interval{f.alpha, f.beta}; },
                        [](const AbsoluteValue&) { return Interval{-kInf, kInf}; },
                    },
                    psi);
}

double evaluate(const ConvexFunctionSpec& psi, double s) {
  const Interval dom = domain_of(psi);
  if (s < dom.lo || s > dom.hi) return kInf;
  return std::visit(overloaded{
                        [&](const PowerOverP& f) { return std::pow(s, f.p) / f.p; },
                        [&](const Quadratic&) { return 0.5 * s * s; },
                        [&](const LinearOnInterval& f) { return f.k * s; },
                        [&](const IndicatorInterval&) { return 0.0; },
                        [&](const AbsoluteValue&) { return std::abs(s); },
                    },
                    psi);
}

double conjugate(const ConvexFunctionSpec& psi, double t) {
  return std::visit(overloaded{
                        [&](const PowerOverP& f) {
                          const double q = dual_exponent(f.p);
                          return std::pow(pos(t), q) / q;
                        },
                        [&](const Quadratic& f) {
                          const double r = f.whole_line ? t : pos(t);
                          return 0.5 * r * r;
                        },
                        [&](const LinearOnInterval& f) { return (t >= f.k ? f.beta : f.alpha) * (t - f.k); },
                        [&](const IndicatorInterval& f) { return (t >= 0.0 ? f.beta : f.alpha) * t; },
                        [&](const AbsoluteValue&) { return std::abs(t) <= 1.0 ? 0.0 : kInf; },
                    },
                    psi);
}

double conjugate_derivative(const ConvexFunctionSpec& psi, double t) { return h_minus_of(psi, t); }

double conjugate_second_derivative(const ConvexFunctionSpec& psi, double t) {
  return std::visit(overloaded{
                        [&](const PowerOverP& f) {
                          if (t <= 0.0) return 0.0;
                          const double e = 1.0 / (f.p - 1.0);
                          return e * std::pow(t, e - 1.0);
                        },
                        [&](const Quadratic& f) { return (f.whole_line || t > 0.0) ? 1.0 : 0.0; },
                        [&](const LinearOnInterval&) { return 0.0; },
                        [&](const IndicatorInterval&) { return 0.0; },
                        [&](const AbsoluteValue&) { return 0.0; },
                    },
                    psi);
}

double h_of(const ConvexFunctionSpec& psi, double t) {
  return std::visit(overloaded{
                        [&](const PowerOverP& f) { return t > 0.0 ? std::pow(t, 1.0 / (f.p - 1.0)) : 0.0; },
                        [&](const Quadratic& f) { return (f.whole_line || t > 0.0) ? t : 0.0; },
                        [&](const LinearOnInterval& f) { return t >= f.k ? f.beta : f.alpha; },
                        [&](const IndicatorInterval& f) { return t >= 0.0 ? f.beta : f.alpha; },
                        [&](const AbsoluteValue&) {
                          if (std::abs(t) < 1.0 || t == -1.0) return 0.0;
                          return t == 1.0 ? kInf : kNaN;
                        },
                    },
                    psi);
}

double h_minus_of(const ConvexFunctionSpec& psi, double t) {
  return std::visit(overloaded{
                        [&](const PowerOverP& f) { return t > 0.0 ? std::pow(t, 1.0 / (f.p - 1.0)) : 0.0; },
                        [&](const Quadratic& f) { return (f.whole_line || t > 0.0) ? t : 0.0; },
                        [&](const LinearOnInterval& f) { return t > f.k ? f.beta : f.alpha; },
                        [&](const IndicatorInterval& f) { return t > 0.0 ? f.beta : f.alpha; },
                        [&](const AbsoluteValue&) {
                          if (std::abs(t) < 1.0 || t == 1.0) return 0.0;
                          return t == -1.0 ? -kInf : kNaN;
                        },
                    },
                    psi);
}

RecessionPair recession(const ConvexFunctionSpec& psi) {
  if (std::holds_alternative<AbsoluteValue>(psi)) return {-1.0, 1.0};
  // Every other variant is either +inf for large |s| (psi(s)/s -> -inf as
  // s -> -inf) or quadratic, which is superlinear on both sides.
  return {-kInf, kInf};
}

double fenchel_residual(const ConvexFunctionSpec& psi, double s, double t) {
  const double a = evaluate(psi, s);
  const double b = conjugate(psi, t);
  if (a == kInf || b == kInf) return kInf;
  return a + b - s * t;
}

bool is_superlinear(const ConvexFunctionSpec& psi) {
  return std::holds_alternative<PowerOverP>(psi) || std::holds_alternative<Quadratic>(psi);
}

}  // namespace ellopt
