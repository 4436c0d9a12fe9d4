#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lorentzflow {

/// Vector in R^{n+1}_1 with signature (+,...,+,-). The temporal component is
/// stored last; n is 1 or 2.
class SpacetimeVector {
 public:
  static constexpr std::size_t kMaxDim = 3;

  SpacetimeVector() = default;
  /// 1+1 dimensional vector (x, t).
  SpacetimeVector(double x, double t) : dim_(2), c_{x, t, 0.0} {}
  /// 2+1 dimensional vector (x, y, t).
  SpacetimeVector(double x, double y, double t) : dim_(3), c_{x, y, t} {}

  static SpacetimeVector zero(std::size_t dim);
  /// Unit temporal vector e_t of the given total dimension.
  static SpacetimeVector time_axis(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t spatial_dim() const { return dim_ - 1; }
  double operator[](std::size_t i) const { return c_[i]; }
  double& operator[](std::size_t i) { return c_[i]; }
  double temporal() const { return c_[dim_ - 1]; }
  double& temporal() { return c_[dim_ - 1]; }

  SpacetimeVector& operator+=(const SpacetimeVector& o);
  SpacetimeVector& operator-=(const SpacetimeVector& o);
  SpacetimeVector& operator*=(double s);

  bool is_finite() const;
  std::string str() const;

 private:
  std::size_t dim_ = 0;
  std::array<double, kMaxDim> c_{};
};

SpacetimeVector operator+(SpacetimeVector a, const SpacetimeVector& b);
SpacetimeVector operator-(SpacetimeVector a, const SpacetimeVector& b);
SpacetimeVector operator*(double s, SpacetimeVector a);
SpacetimeVector operator*(SpacetimeVector a, double s);
SpacetimeVector operator/(SpacetimeVector a, double s);

class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotTimelike : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class CausalClass { Spacelike, Timelike, Lightlike };

const char* to_string(CausalClass c);

inline constexpr double kCausalTolerance = 1e-12;

/// <a,b> = sum a_i b_i - a_t b_t. Throws DimensionMismatch.
double minkowski_inner(const SpacetimeVector& a, const SpacetimeVector& b);

inline double minkowski_square(const SpacetimeVector& a) { return minkowski_inner(a, a); }

CausalClass causal_class(const SpacetimeVector& a, double tol = kCausalTolerance);

/// a / sqrt(-<a,a>); keeps the sign of the temporal component.
/// Throws NotTimelike unless <a,a> < 0.
SpacetimeVector unit_timelike(const SpacetimeVector& a);

/// a / sqrt(<a,a>) for spacelike a.
SpacetimeVector unit_spacelike(const SpacetimeVector& a);

}  // namespace lorentzflow
