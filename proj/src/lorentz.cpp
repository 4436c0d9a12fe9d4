#include "lorentzflow/lorentz.hpp"

#include <cmath>
#include <sstream>

namespace lorentzflow {

SpacetimeVector SpacetimeVector::zero(std::size_t dim) {
  if (dim == 2) return {0.0, 0.0};
  if (dim == 3) return {0.0, 0.0, 0.0};
  throw DimensionMismatch("spacetime dimension must be 2 or 3");
}

SpacetimeVector SpacetimeVector::time_axis(std::size_t dim) {
  auto e = zero(dim);
  e.temporal() = 1.0;
  return e;
}

SpacetimeVector& SpacetimeVector::operator+=(const SpacetimeVector& o) {
  if (dim_ != o.dim_) throw DimensionMismatch("vector addition across dimensions");
  for (std::size_t i = 0; i < dim_; ++i) c_[i] += o.c_[i];
  return *this;
}

SpacetimeVector& SpacetimeVector::operator-=(const SpacetimeVector& o) {
  if (dim_ != o.dim_) throw DimensionMismatch("vector subtraction across dimensions");
  for (std::size_t i = 0; i < dim_; ++i) c_[i] -= o.c_[i];
  return *this;
}

SpacetimeVector& SpacetimeVector::operator*=(double s) {
  for (std::size_t i = 0; i < dim_; ++i) c_[i] *= s;
  return *this;
}

bool SpacetimeVector::is_finite() const {
  for (std::size_t i = 0; i < dim_; ++i)
    if (!std::isfinite(c_[i])) return false;
  return true;
}

std::string SpacetimeVector::str() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dim_; ++i) os << (i ? ", " : "") << c_[i];
  os << ')';
  return os.str();
}

SpacetimeVector operator+(SpacetimeVector a, const SpacetimeVector& b) { return a += b; }
SpacetimeVector operator-(SpacetimeVector a, const SpacetimeVector& b) { return a -= b; }
SpacetimeVector operator*(double s, SpacetimeVector a) { return a *= s; }
SpacetimeVector operator*(SpacetimeVector a, double s) { return a *= s; }
SpacetimeVector operator/(SpacetimeVector a, double s) { return a *= 1.0 / s; }

const char* to_string(CausalClass c) {
  switch (c) {
    case CausalClass::Spacelike: return "spacelike";
    case CausalClass::Timelike: return "timelike";
    case CausalClass::Lightlike: return "lightlike";
  }
  return "?";
}

double minkowski_inner(const SpacetimeVector& a, const SpacetimeVector& b) {
  if (a.dim() != b.dim() || a.dim() < 2)
    throw DimensionMismatch("minkowski_inner: dimensions " + std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < a.dim(); ++i) s += a[i] * b[i];
  return s - a.temporal() * b.temporal();
}

CausalClass causal_class(const SpacetimeVector& a, double tol) {
  const double q = minkowski_square(a);
  if (q > tol) return CausalClass::Spacelike;
  if (q < -tol) return CausalClass::Timelike;
  return CausalClass::Lightlike;
}

SpacetimeVector unit_timelike(const SpacetimeVector& a) {
  const double q = minkowski_square(a);
  if (!(q < 0.0)) throw NotTimelike("unit_timelike: vector " + a.str() + " is not timelike");
  return a / std::sqrt(-q);
}

SpacetimeVector unit_spacelike(const SpacetimeVector& a) {
  const double q = minkowski_square(a);
  if (!(q > 0.0)) throw std::domain_error("unit_spacelike: vector " + a.str() + " is not spacelike");
  return a / std::sqrt(q);
}

}  // namespace lorentzflow
