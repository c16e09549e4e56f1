#ifndef TVTOPO_GGM_HPP
#define TVTOPO_GGM_HPP

#include "tvtopo/matcalc.hpp"
#include "tvtopo/streamcov.hpp"

namespace tvtopo {

/// Ridge added to a singular sample covariance before taking its inverse.
inline constexpr double kDefaultMleRidge = 1e-8;

/// -log det(S) + tr(S * sigma_hat).
double ggm_cost(const SymMat& s, const SymMat& sigma_hat);

/// Gradient of ggm_cost in vech coordinates: D^T vec(sigma_hat - S^{-1}).
VechVec ggm_gradient(const SymMat& s, const SymMat& sigma_hat);

/// Discrete time derivative of the gradient: D^T vec(current - previous).
/// Throws StateError when the covariance has absorbed no samples.
VechVec ggm_time_gradient(const StreamingCovariance& cov);

/// Hessian-vector product in vech coordinates: D^T (S kron S)^{-1} D dir.
VechVec ggm_hessian_apply(const SymMat& s, const VechVec& dir);

/// Unregularized MLE: sigma_hat^{-1}.  Throws NotPositiveDefiniteError if
/// sigma_hat is singular.
SymMat mle_closed_form(const SymMat& sigma_hat);

struct RidgedMle {
  SymMat precision;
  /// Ridge that had to be added to the covariance (0 when none was needed).
  double ridge_applied = 0.0;
};

/// mle_closed_form, retrying on (sigma_hat + ridge I) when sigma_hat is not
/// numerically positive definite.
RidgedMle mle_closed_form_ridged(const SymMat& sigma_hat, double ridge = kDefaultMleRidge);

struct IterativeMleOptions {
  double step = 1e-2;
  double tol = 1e-9;
  int max_iter = 100000;
  double eps = kDefaultSpdFloor;
};

struct IterativeMle {
  SymMat precision;
  int iterations = 0;
  double gradient_norm = 0.0;
  /// False when max_iter was reached before the gradient norm fell below tol.
  bool converged = false;
};

/// Projected gradient descent on ggm_cost in vech coordinates, started at
/// `start`.  Independent of the closed form; used as a cross-check.
IterativeMle mle_iterative(const SymMat& sigma_hat, const SymMat& start, const IterativeMleOptions& opts);

/// Same, started at (n / tr sigma_hat) * I.
IterativeMle mle_iterative(const SymMat& sigma_hat, const IterativeMleOptions& opts);

/**
 * Time-varying GGM cost f(S; t) = -log det(S) + tr(S Sigma_t), where Sigma_t
 * is the exponentially weighted covariance of the samples seen so far.
 *
 * Models the TimeVaryingProblem contract used by the prediction-correction
 * engine.  The feasible set is {S : lambda_min(S) >= eps}.
 */
class GgmProblem {
 public:
  using datum_type = Vector;

  explicit GgmProblem(StreamingCovariance cov, double eps = kDefaultSpdFloor);

  VechVec gradient(const VechVec& s) const;
  VechVec hessian_apply(const VechVec& s, const VechVec& dir) const;
  VechVec time_gradient() const;
  VechVec project(const VechVec& s) const;
  void advance(const Vector& x);

  /// The GGM prediction update carries a factor 2 in front of the stepsize.
  static constexpr double prediction_step_factor() { return 2.0; }

  double cost(const VechVec& s) const;
  const StreamingCovariance& covariance() const { return cov_; }
  double eps() const { return eps_; }

 private:
  StreamingCovariance cov_;
  double eps_;
};

/// GGM problem on a frozen stream: the covariance never changes, so the time
/// gradient is zero and `advance` only moves the clock.
class StationaryGgmProblem {
 public:
  struct Tick {};
  using datum_type = Tick;

  explicit StationaryGgmProblem(SymMat sigma_hat, double eps = kDefaultSpdFloor);

  VechVec gradient(const VechVec& s) const;
  VechVec hessian_apply(const VechVec& s, const VechVec& dir) const;
  VechVec time_gradient() const;
  VechVec project(const VechVec& s) const;
  void advance(Tick) {}

  static constexpr double prediction_step_factor() { return 2.0; }

  const SymMat& sigma_hat() const { return sigma_hat_; }

 private:
  SymMat sigma_hat_;
  double eps_;
};

}  // namespace tvtopo

#endif  // TVTOPO_GGM_HPP
