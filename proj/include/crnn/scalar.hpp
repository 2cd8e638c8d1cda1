// Copyright 2026 The crnn-sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace crnn {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kPi = std::numbers::pi;

/// Raised when an exact value cannot be expressed in the formal unit system.
class UnitError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// n/d with the sign moved to the numerator (boost rejects negative denominators).
inline Rational frac(BigInt n, BigInt d) {
  if (d < 0) {
    n = -n;
    d = -d;
  }
  return Rational(n, d);
}

inline BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

inline BigInt rfloor(const Rational& x) {
  return floor_div(numerator(x), denominator(x));
}

inline BigInt rround(const Rational& x) {
  return rfloor(x + Rational(1, 2));
}

/// x reduced into [0, m).
inline Rational rmod(const Rational& x, const Rational& m) {
  return x - m * Rational(rfloor(x / m));
}

inline bool is_integer(const Rational& x) { return denominator(x) == 1; }

inline double to_double(const Rational& x) { return x.convert_to<double>(); }

/// Best rational approximation of x with denominator <= max_den, accepted only
/// if it lies within tol of x.
inline bool rational_approx(double x, Rational& out, double tol = 1e-9,
                            std::int64_t max_den = 1000000) {
  if (!std::isfinite(x)) return false;
  double sign = x < 0 ? -1.0 : 1.0;
  double y = std::fabs(x);
  // Continued fraction convergents.
  BigInt h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = y;
  for (int it = 0; it < 64; ++it) {
    double a = std::floor(r);
    if (a > 9.0e15) break;
    BigInt ai = static_cast<std::int64_t>(a);
    BigInt h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    double approx = h1.convert_to<double>() / k1.convert_to<double>();
    if (std::fabs(approx - y) <= tol * std::max(1.0, y)) {
      out = Rational(h1, k1) * (sign < 0 ? -1 : 1);
      return true;
    }
    double frac = r - a;
    if (frac < 1e-300) break;
    r = 1.0 / frac;
  }
  if (k1 != 0) {
    double approx = h1.convert_to<double>() / k1.convert_to<double>();
    if (std::fabs(approx - y) <= tol * std::max(1.0, y)) {
      out = Rational(h1, k1) * (sign < 0 ? -1 : 1);
      return true;
    }
  }
  return false;
}

// Backends. Phases, symplectic forms and centers are stored in half-turns
// (multiples of pi) in both backends.

struct Exact {
  using value_type = Rational;
  static constexpr const char* name = "exact";
  static value_type zero() { return Rational(0); }
  static value_type from_int(long long v) { return Rational(v); }
  static value_type from_rational(const Rational& r) { return r; }
  static bool is_zero(const value_type& x) { return x == 0; }
  static bool equal(const value_type& x, const value_type& y) { return x == y; }
  static bool is_int(const value_type& x) { return is_integer(x); }
  static value_type mod(const value_type& x, long long m) { return rmod(x, Rational(m)); }
  static double to_double(const value_type& x) { return crnn::to_double(x); }
  static bool to_rational(const value_type& x, Rational& out) {
    out = x;
    return true;
  }
};

struct Float {
  using value_type = double;
  static constexpr const char* name = "float";
  /// Comparison tolerance, in radians for phases and absolute otherwise.
  static inline double tol = 1e-9;
  static value_type zero() { return 0.0; }
  static value_type from_int(long long v) { return static_cast<double>(v); }
  static value_type from_rational(const Rational& r) { return crnn::to_double(r); }
  static bool is_zero(double x) { return std::fabs(x) <= tol; }
  static bool equal(double x, double y) { return std::fabs(x - y) <= tol; }
  static bool is_int(double x) { return std::fabs(x - std::round(x)) * kPi <= tol; }
  static double mod(double x, long long m) {
    double md = static_cast<double>(m);
    double r = std::fmod(x, md);
    if (r < 0) r += md;
    if (std::fabs(r - md) * kPi <= tol || std::fabs(r) * kPi <= tol) r = 0.0;
    return r;
  }
  static double to_double(double x) { return x; }
  static bool to_rational(double x, Rational& out) { return rational_approx(x, out, tol); }
};

/// Declared formal units for the exact backend: q-coefficients are multiples
/// of g_q, p-coefficients multiples of g_p, and g_q * g_p = kappa * pi.
struct UnitSystem {
  Rational kappa{1};
  /// Numeric value of g_q used when substituting into the float backend.
  double g_q_value{kPi};

  double g_p_value() const { return to_double(kappa) * kPi / g_q_value; }
  bool operator==(const UnitSystem& o) const { return kappa == o.kappa; }
};

enum class Unit { One, Gq, Gp, Pi };

inline const char* unit_name(Unit u) {
  switch (u) {
    case Unit::One: return "1";
    case Unit::Gq: return "g_q";
    case Unit::Gp: return "g_p";
    case Unit::Pi: return "pi";
  }
  return "?";
}

inline Unit unit_from_name(const std::string& s) {
  if (s == "1") return Unit::One;
  if (s == "g_q") return Unit::Gq;
  if (s == "g_p") return Unit::Gp;
  if (s == "pi") return Unit::Pi;
  throw UnitError("unknown unit '" + s + "'");
}

/// A tagged scalar: exact (rational times formal unit) or float.
class Scalar {
 public:
  enum class Backend { EXACT, FLOAT };

  Scalar() = default;
  static Scalar exact(Rational r, Unit u = Unit::One) {
    Scalar s;
    s.backend_ = Backend::EXACT;
    s.coeff_ = std::move(r);
    s.unit_ = s.coeff_ == 0 ? Unit::One : u;
    return s;
  }
  static Scalar real(double x) {
    Scalar s;
    s.backend_ = Backend::FLOAT;
    s.value_ = x;
    return s;
  }

  Backend backend() const { return backend_; }
  bool is_exact() const { return backend_ == Backend::EXACT; }
  const Rational& coeff() const { return coeff_; }
  Unit unit() const { return unit_; }
  double value() const { return value_; }
  bool is_zero() const { return is_exact() ? coeff_ == 0 : value_ == 0.0; }

  /// Numeric value under the given unit system.
  double to_double(const UnitSystem& us = {}) const {
    if (!is_exact()) return value_;
    double c = crnn::to_double(coeff_);
    switch (unit_) {
      case Unit::One: return c;
      case Unit::Gq: return c * us.g_q_value;
      case Unit::Gp: return c * us.g_p_value();
      case Unit::Pi: return c * kPi;
    }
    return c;
  }

  friend Scalar operator+(const Scalar& x, const Scalar& y) {
    check_same_backend(x, y);
    if (!x.is_exact()) return real(x.value_ + y.value_);
    if (x.is_zero()) return y;
    if (y.is_zero()) return x;
    if (x.unit_ != y.unit_) throw UnitError("cannot add scalars with different formal units");
    return exact(x.coeff_ + y.coeff_, x.unit_);
  }
  friend Scalar operator-(const Scalar& x) {
    return x.is_exact() ? exact(-x.coeff_, x.unit_) : real(-x.value_);
  }
  friend Scalar operator-(const Scalar& x, const Scalar& y) { return x + (-y); }

  /// Product; exact mode only pairs g_q with g_p, or a unit with a pure rational.
  static Scalar mul(const Scalar& x, const Scalar& y, const UnitSystem& us = {}) {
    check_same_backend(x, y);
    if (!x.is_exact()) return real(x.value_ * y.value_);
    if (x.is_zero() || y.is_zero()) return exact(0);
    if (x.unit_ == Unit::One) return exact(x.coeff_ * y.coeff_, y.unit_);
    if (y.unit_ == Unit::One) return exact(x.coeff_ * y.coeff_, x.unit_);
    if ((x.unit_ == Unit::Gq && y.unit_ == Unit::Gp) || (x.unit_ == Unit::Gp && y.unit_ == Unit::Gq))
      return exact(x.coeff_ * y.coeff_ * us.kappa, Unit::Pi);
    throw UnitError(std::string("invalid operand pairing ") + unit_name(x.unit_) + " * " +
                    unit_name(y.unit_));
  }

  bool operator==(const Scalar& o) const {
    if (backend_ != o.backend_) return false;
    if (is_exact()) return coeff_ == o.coeff_ && (coeff_ == 0 || unit_ == o.unit_);
    return value_ == o.value_;
  }

 private:
  static void check_same_backend(const Scalar& x, const Scalar& y) {
    if (x.backend_ != y.backend_) throw UnitError("scalar backend mismatch");
  }

  Backend backend_{Backend::EXACT};
  Rational coeff_{0};
  Unit unit_{Unit::One};
  double value_{0.0};
};

inline nlohmann::json rational_json(const Rational& r, Unit u) {
  return {{"num", numerator(r).str()}, {"den", denominator(r).str()}, {"unit", unit_name(u)}};
}

inline Rational rational_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return Rational(j.get<long long>());
  return Rational(BigInt(j.at("num").get<std::string>()), BigInt(j.at("den").get<std::string>()));
}

inline nlohmann::json to_json(const Scalar& s) {
  if (s.is_exact()) return rational_json(s.coeff(), s.unit());
  return s.value();
}

inline Scalar scalar_from_json(const nlohmann::json& j) {
  if (j.is_number_float()) return Scalar::real(j.get<double>());
  if (j.is_number_integer()) return Scalar::exact(Rational(j.get<long long>()));
  return Scalar::exact(rational_from_json(j), unit_from_name(j.value("unit", "1")));
}

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace crnn
