#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "memobs/errors.hpp"
#include "memobs/region.hpp"

namespace memobs {

/// Dirichlet Laplacian on (0, L): eigenvalues (k pi / L)^2 and orthonormal
/// eigenfunctions sqrt(2/L) sin(k pi x / L), truncated at K modes.
/// Mode indices are 1-based throughout the public API.
class SpectralBasis {
 public:
  SpectralBasis(double length, int truncation);

  double length() const { return length_; }
  int size() const { return static_cast<int>(eigenvalues_.size()); }

  double eigenvalue(int k) const;
  /// e_k(x); x must lie in [0, L].
  double eigenfunction(int k, double x) const;
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

  /// Same interval, different truncation level.
  SpectralBasis truncated(int truncation) const { return {length_, truncation}; }

  bool operator==(const SpectralBasis& other) const {
    return length_ == other.length_ && size() == other.size();
  }

 private:
  void check_index(int k) const;

  double length_;
  Eigen::VectorXd eigenvalues_;
};

/// Evaluates one eigenfunction; returned by eigenpair().
class Eigenfunction {
 public:
  Eigenfunction(double length, int k) : length_(length), k_(k) {}
  double operator()(double x) const;

 private:
  double length_;
  int k_;
};

struct Eigenpair {
  double eigenvalue;
  Eigenfunction eigenfunction;
};

Eigenpair eigenpair(const SpectralBasis& basis, int k);

/// Coefficient vector of a function in the eigenbasis.
class SpectralField {
 public:
  SpectralField(SpectralBasis basis, Eigen::VectorXd coeffs);

  static SpectralField zero(const SpectralBasis& basis);
  /// The eigenfunction e_k as a field.
  static SpectralField mode(const SpectralBasis& basis, int k);

  const SpectralBasis& basis() const { return basis_; }
  const Eigen::VectorXd& coeffs() const { return coeffs_; }
  int size() const { return static_cast<int>(coeffs_.size()); }

  /// sqrt(sum a_k^2 lambda_k^s).
  double hs_norm(double s) const;
  /// sum a_k e_k(x); x must lie in [0, L].
  double operator()(double x) const;

  /// Coefficients a_k lambda_k^p, i.e. the action of A^p.
  SpectralField apply_power(double p) const;

  SpectralField& operator+=(const SpectralField& other);
  SpectralField& operator-=(const SpectralField& other);
  SpectralField& operator*=(double factor);

 private:
  SpectralBasis basis_;
  Eigen::VectorXd coeffs_;
};

SpectralField operator+(SpectralField lhs, const SpectralField& rhs);
SpectralField operator-(SpectralField lhs, const SpectralField& rhs);
SpectralField operator*(double factor, SpectralField field);

double hs_norm(const SpectralField& field, double s);
double eval_field(const SpectralField& field, double x);

/// G_kl = integral over region of e_k e_l, from closed-form antiderivatives.
Eigen::MatrixXd overlap_matrix(const SpectralBasis& basis, const ObservationRegion& region);

/// Sine transform of an interval indicator: entries <chi_[lo,hi], e_k>, k = 1..K.
Eigen::VectorXd indicator_coefficients(const SpectralBasis& basis, double lo, double hi);

namespace detail {

/// Scalar-generic overlap assembly, used with extended precision by the
/// observability constants. Frequencies n = 0..2K share one table of sines
/// per endpoint.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> overlap_matrix_generic(
    double length, int truncation, const ObservationRegion& region, const Scalar& pi) {
  using std::sin;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const int K = truncation;
  Matrix G = Matrix::Zero(K, K);
  const Scalar L(length);
  std::vector<Scalar> sin_hi(2 * K + 1), sin_lo(2 * K + 1);
  for (const Interval& piece : region.intervals()) {
    const Scalar theta_lo = pi * Scalar(piece.lo) / L;
    const Scalar theta_hi = pi * Scalar(piece.hi) / L;
    for (int n = 0; n <= 2 * K; ++n) {
      sin_lo[n] = sin(Scalar(n) * theta_lo);
      sin_hi[n] = sin(Scalar(n) * theta_hi);
    }
    const Scalar width = (Scalar(piece.hi) - Scalar(piece.lo)) / L;
    // Each (k, l >= k) pair is owned by row k, so rows can run concurrently.
#pragma omp parallel for schedule(dynamic, 8)
    for (int k = 1; k <= K; ++k) {
      // (1/L) int sin^2 = x/L - sin(2k theta) / (2 k pi)
      G(k - 1, k - 1) += width - (sin_hi[2 * k] - sin_lo[2 * k]) / (Scalar(2 * k) * pi);
      for (int l = k + 1; l <= K; ++l) {
        const int d = l - k;
        const int s = l + k;
        // sin((k-l)t)/(k-l) = sin(d t)/d, an even function of the sign of d
        const Scalar v = ((sin_hi[d] - sin_lo[d]) / Scalar(d) - (sin_hi[s] - sin_lo[s]) / Scalar(s)) / pi;
        G(k - 1, l - 1) += v;
        G(l - 1, k - 1) += v;
      }
    }
  }
  return G;
}

}  // namespace detail

}  // namespace memobs
