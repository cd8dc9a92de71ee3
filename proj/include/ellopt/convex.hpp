#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <variant>

namespace ellopt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// psi(s) = s^p / p on s >= 0, +inf for s < 0.
struct PowerOverP {
  double p = 2.0;
  friend bool operator==(const PowerOverP&, const PowerOverP&) = default;
};

/// psi(s) = s^2 / 2 on s >= 0 (+inf below), or on the whole line when
/// `whole_line` is set (needed by the source regime).
struct Quadratic {
  bool whole_line = false;
  friend bool operator==(const Quadratic&, const Quadratic&) = default;
};

/// psi(s) = k s on [alpha, beta], +inf outside.
struct LinearOnInterval {
  double alpha = 0.0;
  double beta = 1.0;
  double k = 1.0;
  friend bool operator==(const LinearOnInterval&, const LinearOnInterval&) = default;
};

/// psi(s) = 0 on [alpha, beta], +inf outside.
struct IndicatorInterval {
  double alpha = 0.0;
  double beta = 1.0;
  friend bool operator==(const IndicatorInterval&, const IndicatorInterval&) = default;
};

/// psi(s) = |s|. Linear growth on both sides; used for recession tests.
struct AbsoluteValue {
  friend bool operator==(const AbsoluteValue&, const AbsoluteValue&) = default;
};

using ConvexFunctionSpec = std::variant<PowerOverP, Quadratic, LinearOnInterval, IndicatorInterval, AbsoluteValue>;

/// Throws std::invalid_argument if the parameters break convexity / ordering.
void validate(const ConvexFunctionSpec& psi);
std::string describe(const ConvexFunctionSpec& psi);

struct Interval {
  double lo;
  double hi;
};

/// Effective domain {psi < inf}.
Interval domain_of(const ConvexFunctionSpec& psi);

/// psi(s), possibly +inf.
double evaluate(const ConvexFunctionSpec& psi, double s);

/// Legendre-Fenchel conjugate psi*(t) = sup_s { s t - psi(s) }.
double conjugate(const ConvexFunctionSpec& psi, double t);

/// Minimal element of d psi*(t); equals h_minus_of(psi, t).
double conjugate_derivative(const ConvexFunctionSpec& psi, double t);

/// Derivative of conjugate_derivative where it exists (0 on flat pieces and at
/// kinks by convention). Used for Newton Hessians.
double conjugate_second_derivative(const ConvexFunctionSpec& psi, double t);

/// h(t) = max{ s in dom psi : t in d psi(s) }. NaN if no such s.
double h_of(const ConvexFunctionSpec& psi, double t);
/// h_-(t) = min{ s in dom psi : t in d psi(s) }. NaN if no such s.
double h_minus_of(const ConvexFunctionSpec& psi, double t);

struct RecessionPair {
  double c_minus;  ///< lim_{s -> -inf} psi(s)/s
  double c_plus;   ///< lim_{s -> +inf} psi(s)/s
};

RecessionPair recession(const ConvexFunctionSpec& psi);

/// psi(s) + psi*(t) - s t; >= 0, zero iff t in d psi(s). +inf if s is outside dom.
double fenchel_residual(const ConvexFunctionSpec& psi, double s, double t);

bool is_superlinear(const ConvexFunctionSpec& psi);

}  // namespace ellopt
