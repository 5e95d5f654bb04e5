#include "memobs/spectral.hpp"

#include <fmt/format.h>

namespace memobs {

namespace {

void check_point(double length, double x) {
  if (!(x >= 0.0 && x <= length)) {
    throw ValidationError(fmt::format("point x = {} lies outside [0, {}]", x, length));
  }
}

}  // namespace

SpectralBasis::SpectralBasis(double length, int truncation) : length_(length) {
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ValidationError(fmt::format("interval length must be positive, got {}", length));
  }
  if (truncation < 1) {
    throw ValidationError(fmt::format("truncation must be at least 1, got {}", truncation));
  }
  eigenvalues_.resize(truncation);
  for (int k = 1; k <= truncation; ++k) {
    const double root = k * std::numbers::pi / length;
    eigenvalues_[k - 1] = root * root;
  }
}

void SpectralBasis::check_index(int k) const {
  if (k < 1 || k > size()) {
    throw ValidationError(fmt::format("mode index {} outside 1..{}", k, size()));
  }
}

double SpectralBasis::eigenvalue(int k) const {
  check_index(k);
  return eigenvalues_[k - 1];
}

double SpectralBasis::eigenfunction(int k, double x) const {
  check_index(k);
  return Eigenfunction(length_, k)(x);
}

double Eigenfunction::operator()(double x) const {
  check_point(length_, x);
  return std::sqrt(2.0 / length_) * std::sin(k_ * std::numbers::pi * x / length_);
}

Eigenpair eigenpair(const SpectralBasis& basis, int k) {
  return {basis.eigenvalue(k), Eigenfunction(basis.length(), k)};
}

SpectralField::SpectralField(SpectralBasis basis, Eigen::VectorXd coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  if (coeffs_.size() != basis_.size()) {
    throw ValidationError(
        fmt::format("field has {} coefficients but the basis has {} modes", coeffs_.size(), basis_.size()));
  }
  if (!coeffs_.allFinite()) throw ValidationError("field coefficients must be finite");
}

SpectralField SpectralField::zero(const SpectralBasis& basis) {
  return {basis, Eigen::VectorXd::Zero(basis.size())};
}

SpectralField SpectralField::mode(const SpectralBasis& basis, int k) {
  basis.eigenvalue(k);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(basis.size());
  a[k - 1] = 1.0;
  return {basis, std::move(a)};
}

double SpectralField::hs_norm(double s) const {
  double total = 0.0;
  for (int k = 0; k < size(); ++k) {
    total += coeffs_[k] * coeffs_[k] * std::pow(basis_.eigenvalues()[k], s);
  }
  return std::sqrt(total);
}

double SpectralField::operator()(double x) const {
  check_point(basis_.length(), x);
  const double scale = std::sqrt(2.0 / basis_.length());
  const double theta = std::numbers::pi * x / basis_.length();
  double total = 0.0;
  for (int k = 1; k <= size(); ++k) total += coeffs_[k - 1] * std::sin(k * theta);
  return scale * total;
}

SpectralField SpectralField::apply_power(double p) const {
  Eigen::VectorXd a = coeffs_;
  for (int k = 0; k < size(); ++k) a[k] *= std::pow(basis_.eigenvalues()[k], p);
  return {basis_, std::move(a)};
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
  if (!(basis_ == other.basis_)) throw ValidationError("fields live on different bases");
  coeffs_ += other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
  if (!(basis_ == other.basis_)) throw ValidationError("fields live on different bases");
  coeffs_ -= other.coeffs_;
  return *this;
}

SpectralField& SpectralField::operator*=(double factor) {
  coeffs_ *= factor;
  return *this;
}

SpectralField operator+(SpectralField lhs, const SpectralField& rhs) { return lhs += rhs; }
SpectralField operator-(SpectralField lhs, const SpectralField& rhs) { return lhs -= rhs; }
SpectralField operator*(double factor, SpectralField field) { return field *= factor; }

double hs_norm(const SpectralField& field, double s) { return field.hs_norm(s); }
double eval_field(const SpectralField& field, double x) { return field(x); }

Eigen::MatrixXd overlap_matrix(const SpectralBasis& basis, const ObservationRegion& region) {
  region.check_within(basis.length());
  return detail::overlap_matrix_generic<double>(basis.length(), basis.size(), region, std::numbers::pi);
}

Eigen::VectorXd indicator_coefficients(const SpectralBasis& basis, double lo, double hi) {
  if (!(lo < hi)) throw ValidationError(fmt::format("malformed interval [{}, {}]", lo, hi));
  const double L = basis.length();
  const double scale = std::sqrt(2.0 / L);
  Eigen::VectorXd b(basis.size());
  for (int k = 1; k <= basis.size(); ++k) {
    const double w = k * std::numbers::pi / L;
    // cos(w lo) - cos(w hi) in product form, free of cancellation for short intervals
    b[k - 1] = scale * 2.0 * std::sin(0.5 * w * (lo + hi)) * std::sin(0.5 * w * (hi - lo)) / w;
  }
  return b;
}

}  // namespace memobs
