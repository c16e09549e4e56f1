#include "tvtopo/streamcov.hpp"

#include <sstream>

#include "tvtopo/errors.hpp"

namespace tvtopo {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream msg;
    msg << "forgetting factor must lie in (0,1), got " << gamma;
    throw DimensionError(msg.str());
  }
}

}  // namespace

StreamingCovariance::StreamingCovariance(int n, double gamma, double ridge)
    : gamma_(gamma),
      current_(SymMat::diagonal(Vector::Constant(n < 1 ? 1 : n, ridge))),
      previous_(current_),
      count_(0) {
  if (n < 1) throw DimensionError("StreamingCovariance requires n >= 1");
  check_gamma(gamma);
  if (ridge < 0.0) throw DimensionError("StreamingCovariance ridge must be nonnegative");
}

StreamingCovariance::StreamingCovariance(double gamma, SymMat current, SymMat previous, long count)
    : gamma_(gamma), current_(std::move(current)), previous_(std::move(previous)), count_(count) {}

StreamingCovariance StreamingCovariance::from_state(double gamma, SymMat current, SymMat previous,
                                                    long count) {
  check_gamma(gamma);
  if (current.n() != previous.n()) throw DimensionError("current and previous covariance differ in size");
  if (count < 0) throw DimensionError("sample count must be nonnegative");
  return StreamingCovariance(gamma, std::move(current), std::move(previous), count);
}

StreamingCovariance StreamingCovariance::updated(std::span<const double> x) const {
  const int n = this->n();
  if (static_cast<long>(x.size()) != n) {
    std::ostringstream msg;
    msg << "cov_update: sample has length " << x.size() << ", expected " << n;
    throw DimensionError(msg.str());
  }
  const Eigen::Map<const Vector> xv(x.data(), n);
  const double w = 1.0 - gamma_;
  const Matrix& c = current_.mat();
  Matrix next(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i) {
      next(i, j) = gamma_ * c(i, j) + w * (xv[i] * xv[j]);
      next(j, i) = next(i, j);
    }
  }
  return StreamingCovariance(gamma_, SymMat(std::move(next)), current_, count_ + 1);
}

SymMat batch_covariance(std::span<const Vector> samples) {
  if (samples.empty()) throw EmptyInputError("batch_covariance: no samples");
  const auto n = samples.front().size();
  Matrix acc = Matrix::Zero(n, n);
  for (const auto& x : samples) {
    if (x.size() != n) throw DimensionError("batch_covariance: samples have inconsistent length");
    acc.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  acc /= static_cast<double>(samples.size());
  acc.triangularView<Eigen::StrictlyUpper>() = acc.transpose();
  return SymMat(std::move(acc));
}

}  // namespace tvtopo
