#ifndef TVTOPO_MATCALC_HPP
#define TVTOPO_MATCALC_HPP

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

namespace tvtopo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default spectral floor used to turn the open SPD cone into a closed set.
inline constexpr double kDefaultSpdFloor = 1e-8;

/**
 * Dense real symmetric N x N matrix.
 *
 * Construction from an arbitrary matrix checks exact symmetry; use
 * `SymMat::symmetrized` when the input carries round-off asymmetry
 * (e.g. products like A * B * A).
 */
class SymMat {
 public:
  SymMat() = default;

  /// Throws DimensionError if `m` is empty, not square, or not exactly
  /// symmetric.
  explicit SymMat(Matrix m);

  /// Returns (m + m^T) / 2.
  static SymMat symmetrized(const Matrix& m);
  static SymMat identity(int n);
  static SymMat zero(int n);
  /// Diagonal matrix with the given entries.
  static SymMat diagonal(const Vector& d);

  int n() const { return static_cast<int>(m_.rows()); }
  const Matrix& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  friend bool operator==(const SymMat& a, const SymMat& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  struct Unchecked {};
  SymMat(Matrix m, Unchecked) : m_(std::move(m)) {}

  Matrix m_;
};

/// Half-vectorized symmetric matrix: the N(N+1)/2 lower-triangular entries,
/// stacked column by column (column j contributes rows j..N-1).
class VechVec {
 public:
  VechVec() = default;
  /// Throws DimensionError if `values.size() != n(n+1)/2`.
  VechVec(int n, Vector values);
  static VechVec zero(int n);

  int n() const { return n_; }
  const Vector& values() const { return v_; }
  Vector& values() { return v_; }
  Eigen::Index size() const { return v_.size(); }
  double operator[](Eigen::Index k) const { return v_[k]; }

  friend bool operator==(const VechVec& a, const VechVec& b) {
    return a.n_ == b.n_ && a.v_ == b.v_;
  }

 private:
  int n_ = 0;
  Vector v_;
};

/// N(N+1)/2.
inline Eigen::Index vech_size(int n) {
  return static_cast<Eigen::Index>(n) * (n + 1) / 2;
}

/// Position in vech order of matrix entry (i, j) with i >= j.
inline Eigen::Index vech_index(int n, int i, int j) {
  return static_cast<Eigen::Index>(j) * n - static_cast<Eigen::Index>(j) * (j - 1) / 2 + (i - j);
}

/// Inverse of vech_size; throws DimensionError when `len` is not triangular.
int vech_dimension(Eigen::Index len);

VechVec vech(const SymMat& s);
SymMat unvech(const VechVec& v);

/// D^T vec(M) for the duplication matrix D, without forming D: diagonal
/// entries are copied, off-diagonal pairs (i,j),(j,i) are summed.
VechVec dup_transpose_apply(const Matrix& m);

/// D^T (S kron S)^{-1} D dir, evaluated as D^T vec(S^{-1} unvech(dir) S^{-1}).
VechVec hessian_apply(const SymMat& s_inv, const VechVec& dir);

/// Frobenius-nearest point of {S : lambda_min(S) >= eps}: eigenvalues below
/// `eps` are raised to `eps`.  Matrices already in the set are returned
/// unchanged.
SymMat project_spd(const SymMat& s, double eps = kDefaultSpdFloor);

/// Smallest eigenvalue.
double min_eigenvalue(const SymMat& s);

/// log det via Cholesky; throws NotPositiveDefiniteError if S is not SPD.
double logdet_spd(const SymMat& s);

/// Inverse via Cholesky; throws NotPositiveDefiniteError if S is not SPD.
SymMat spd_inverse(const SymMat& s);

/// True when a Cholesky factorization of S succeeds.
bool is_spd(const SymMat& s);

/// Matrix text dump: first line "n", then n rows of n numbers.  Values are
/// written with 17 significant digits so a read returns the same doubles.
void write_matrix(std::ostream& os, const Matrix& m);
Matrix read_matrix(std::istream& is);

}  // namespace tvtopo

#endif  // TVTOPO_MATCALC_HPP
