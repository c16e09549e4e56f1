#include "tvtopo/matcalc.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "tvtopo/errors.hpp"

namespace tvtopo {

SymMat::SymMat(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    std::ostringstream msg;
    msg << "SymMat requires a non-empty square matrix, got " << m_.rows() << "x" << m_.cols();
    throw DimensionError(msg.str());
  }
  if (m_ != m_.transpose()) throw DimensionError("SymMat requires an exactly symmetric matrix");
}

SymMat SymMat::symmetrized(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw DimensionError("symmetrized requires a non-empty square matrix");
  Matrix s = 0.5 * (m + m.transpose());
  return SymMat(std::move(s), Unchecked{});
}

SymMat SymMat::identity(int n) { return SymMat(Matrix::Identity(n, n), Unchecked{}); }

SymMat SymMat::zero(int n) { return SymMat(Matrix::Zero(n, n), Unchecked{}); }

SymMat SymMat::diagonal(const Vector& d) {
  return SymMat(Matrix(d.asDiagonal()), Unchecked{});
}

VechVec::VechVec(int n, Vector values) : n_(n), v_(std::move(values)) {
  if (n < 1 || v_.size() != vech_size(n)) {
    std::ostringstream msg;
    msg << "vech vector of length " << v_.size() << " does not match n=" << n;
    throw DimensionError(msg.str());
  }
}

VechVec VechVec::zero(int n) { return VechVec(n, Vector::Zero(vech_size(n))); }

int vech_dimension(Eigen::Index len) {
  // n = (sqrt(8 len + 1) - 1) / 2
  const auto n = static_cast<int>(std::lround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  if (n < 1 || vech_size(n) != len) {
    std::ostringstream msg;
    msg << "length " << len << " is not a triangular number";
    throw DimensionError(msg.str());
  }
  return n;
}

VechVec vech(const SymMat& s) {
  const int n = s.n();
  Vector v(vech_size(n));
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v[k++] = s(i, j);
  return VechVec(n, std::move(v));
}

SymMat unvech(const VechVec& v) {
  const int n = v.n();
  Matrix m(n, n);
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      m(i, j) = v[k];
      m(j, i) = v[k];
      ++k;
    }
  }
  return SymMat(std::move(m));
}

VechVec dup_transpose_apply(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw DimensionError("dup_transpose_apply requires a non-empty square matrix");
  const int n = static_cast<int>(m.rows());
  Vector v(vech_size(n));
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j) {
    v[k++] = m(j, j);
    for (int i = j + 1; i < n; ++i) v[k++] = m(i, j) + m(j, i);
  }
  return VechVec(n, std::move(v));
}

VechVec hessian_apply(const SymMat& s_inv, const VechVec& dir) {
  if (s_inv.n() != dir.n()) {
    std::ostringstream msg;
    msg << "hessian_apply: matrix is " << s_inv.n() << "x" << s_inv.n() << " but direction has n=" << dir.n();
    throw DimensionError(msg.str());
  }
  const Matrix& w = s_inv.mat();
  const Matrix tmp = unvech(dir).mat() * w;
  Matrix prod = w * tmp;
  return dup_transpose_apply(prod);
}

SymMat project_spd(const SymMat& s, double eps) {
  if (!(eps > 0.0)) throw NumericalError("project_spd requires eps > 0");
  const int n = s.n();
  // Fast path: S - eps I positive definite means lambda_min(S) > eps.
  Eigen::LLT<Matrix> llt(s.mat() - eps * Matrix::Identity(n, n));
  if (llt.info() == Eigen::Success) return s;

  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat());
  if (es.info() != Eigen::Success) throw NumericalError("project_spd: eigendecomposition failed");
  const Vector floored = es.eigenvalues().cwiseMax(eps);
  const Matrix& u = es.eigenvectors();
  return SymMat::symmetrized(u * floored.asDiagonal() * u.transpose());
}

double min_eigenvalue(const SymMat& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("min_eigenvalue: eigendecomposition failed");
  return es.eigenvalues()[0];
}

namespace {

Eigen::LLT<Matrix> factor_or_throw(const SymMat& s, const char* who) {
  Eigen::LLT<Matrix> llt(s.mat());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefiniteError(std::string(who) + ": matrix is not positive definite");
  return llt;
}

}  // namespace

double logdet_spd(const SymMat& s) {
  const auto llt = factor_or_throw(s, "logdet_spd");
  const Matrix& l = llt.matrixLLT();
  double acc = 0.0;
  for (int i = 0; i < s.n(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

SymMat spd_inverse(const SymMat& s) {
  const auto llt = factor_or_throw(s, "spd_inverse");
  return SymMat::symmetrized(llt.solve(Matrix::Identity(s.n(), s.n())));
}

bool is_spd(const SymMat& s) {
  Eigen::LLT<Matrix> llt(s.mat());
  return llt.info() == Eigen::Success;
}

void write_matrix(std::ostream& os, const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("write_matrix expects a square matrix");
  const auto old_precision = os.precision(17);
  os << m.rows() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) os << ' ';
      os << m(i, j);
    }
    os << '\n';
  }
  os.precision(old_precision);
}

Matrix read_matrix(std::istream& is) {
  long n = 0;
  if (!(is >> n) || n < 1) throw DimensionError("read_matrix: missing or invalid dimension line");
  Matrix m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (!(is >> m(i, j))) throw DimensionError("read_matrix: truncated matrix body");
  return m;
}

}  // namespace tvtopo
