#ifndef TVTOPO_STREAMCOV_HPP
#define TVTOPO_STREAMCOV_HPP

#include <span>
#include <vector>

#include "tvtopo/matcalc.hpp"

namespace tvtopo {

/// Default ridge used to seed the streaming covariance before any sample.
inline constexpr double kDefaultCovarianceRidge = 1e-6;

/**
 * Exponentially weighted sample covariance
 *
 *   current_t = gamma * current_{t-1} + (1 - gamma) * x_t x_t^T
 *
 * together with its value one update earlier.  Signals are assumed
 * zero-mean; no mean is subtracted.
 *
 * A fresh state starts at current = previous = ridge * I so that early
 * inverses exist.  Updates are functional: `updated` returns a new state.
 */
class StreamingCovariance {
 public:
  StreamingCovariance(int n, double gamma, double ridge = kDefaultCovarianceRidge);

  /// State with explicit history, e.g. to resume a stream.  `count` is the
  /// number of samples the state claims to have absorbed.
  static StreamingCovariance from_state(double gamma, SymMat current, SymMat previous, long count);

  StreamingCovariance updated(std::span<const double> x) const;
  StreamingCovariance updated(const Vector& x) const {
    return updated(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  int n() const { return current_.n(); }
  double gamma() const { return gamma_; }
  const SymMat& current() const { return current_; }
  const SymMat& previous() const { return previous_; }
  long count() const { return count_; }

 private:
  StreamingCovariance(double gamma, SymMat current, SymMat previous, long count);

  double gamma_;
  SymMat current_;
  SymMat previous_;
  long count_;
};

inline StreamingCovariance cov_update(const StreamingCovariance& state, const Vector& x) {
  return state.updated(x);
}

/// (1/T) sum_t x_t x_t^T over the given samples (zero-mean convention).
/// Throws EmptyInputError on an empty sequence, DimensionError on ragged input.
SymMat batch_covariance(std::span<const Vector> samples);

}  // namespace tvtopo

#endif  // TVTOPO_STREAMCOV_HPP
