#include "tvtopo/ggm.hpp"

#include <cmath>
#include <sstream>

#include "tvtopo/errors.hpp"

namespace tvtopo {

namespace {

void check_same_size(const SymMat& a, const SymMat& b, const char* who) {
  if (a.n() != b.n()) {
    std::ostringstream msg;
    msg << who << ": size mismatch (" << a.n() << " vs " << b.n() << ")";
    throw DimensionError(msg.str());
  }
}

void check_same_size(const SymMat& a, const VechVec& v, const char* who) {
  if (a.n() != v.n()) {
    std::ostringstream msg;
    msg << who << ": matrix has n=" << a.n() << " but vector has n=" << v.n();
    throw DimensionError(msg.str());
  }
}

}  // namespace

double ggm_cost(const SymMat& s, const SymMat& sigma_hat) {
  check_same_size(s, sigma_hat, "ggm_cost");
  // tr(S Sigma) for symmetric operands is the elementwise inner product.
  return -logdet_spd(s) + s.mat().cwiseProduct(sigma_hat.mat()).sum();
}

VechVec ggm_gradient(const SymMat& s, const SymMat& sigma_hat) {
  check_same_size(s, sigma_hat, "ggm_gradient");
  return dup_transpose_apply(sigma_hat.mat() - spd_inverse(s).mat());
}

VechVec ggm_time_gradient(const StreamingCovariance& cov) {
  if (cov.count() < 1) throw StateError("ggm_time_gradient: covariance has absorbed no samples");
  return dup_transpose_apply(cov.current().mat() - cov.previous().mat());
}

VechVec ggm_hessian_apply(const SymMat& s, const VechVec& dir) {
  check_same_size(s, dir, "ggm_hessian_apply");
  return hessian_apply(spd_inverse(s), dir);
}

SymMat mle_closed_form(const SymMat& sigma_hat) { return spd_inverse(sigma_hat); }

RidgedMle mle_closed_form_ridged(const SymMat& sigma_hat, double ridge) {
  if (is_spd(sigma_hat)) return {spd_inverse(sigma_hat), 0.0};
  const Matrix shifted = sigma_hat.mat() + ridge * Matrix::Identity(sigma_hat.n(), sigma_hat.n());
  return {spd_inverse(SymMat::symmetrized(shifted)), ridge};
}

IterativeMle mle_iterative(const SymMat& sigma_hat, const SymMat& start, const IterativeMleOptions& opts) {
  check_same_size(sigma_hat, start, "mle_iterative");
  if (!(opts.step > 0.0) || !(opts.tol > 0.0)) throw DimensionError("mle_iterative: step and tol must be positive");

  IterativeMle out{project_spd(start, opts.eps), 0, 0.0, false};
  VechVec s = vech(out.precision);
  for (;;) {
    const VechVec grad = ggm_gradient(out.precision, sigma_hat);
    out.gradient_norm = grad.values().norm();
    if (out.gradient_norm < opts.tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= opts.max_iter || !std::isfinite(out.gradient_norm)) break;
    s.values() -= opts.step * grad.values();
    out.precision = project_spd(unvech(s), opts.eps);
    s = vech(out.precision);
    ++out.iterations;
  }
  return out;
}

IterativeMle mle_iterative(const SymMat& sigma_hat, const IterativeMleOptions& opts) {
  const double scale = sigma_hat.n() / sigma_hat.mat().trace();
  return mle_iterative(sigma_hat, SymMat::diagonal(Vector::Constant(sigma_hat.n(), scale)), opts);
}

GgmProblem::GgmProblem(StreamingCovariance cov, double eps) : cov_(std::move(cov)), eps_(eps) {
  if (!(eps > 0.0)) throw DimensionError("GgmProblem: eps must be positive");
}

VechVec GgmProblem::gradient(const VechVec& s) const { return ggm_gradient(unvech(s), cov_.current()); }

VechVec GgmProblem::hessian_apply(const VechVec& s, const VechVec& dir) const {
  return ggm_hessian_apply(unvech(s), dir);
}

VechVec GgmProblem::time_gradient() const { return ggm_time_gradient(cov_); }

VechVec GgmProblem::project(const VechVec& s) const { return vech(project_spd(unvech(s), eps_)); }

void GgmProblem::advance(const Vector& x) { cov_ = cov_.updated(x); }

double GgmProblem::cost(const VechVec& s) const { return ggm_cost(unvech(s), cov_.current()); }

StationaryGgmProblem::StationaryGgmProblem(SymMat sigma_hat, double eps)
    : sigma_hat_(std::move(sigma_hat)), eps_(eps) {
  if (!(eps > 0.0)) throw DimensionError("StationaryGgmProblem: eps must be positive");
}

VechVec StationaryGgmProblem::gradient(const VechVec& s) const { return ggm_gradient(unvech(s), sigma_hat_); }

VechVec StationaryGgmProblem::hessian_apply(const VechVec& s, const VechVec& dir) const {
  return ggm_hessian_apply(unvech(s), dir);
}

VechVec StationaryGgmProblem::time_gradient() const { return VechVec::zero(sigma_hat_.n()); }

VechVec StationaryGgmProblem::project(const VechVec& s) const { return vech(project_spd(unvech(s), eps_)); }

}  // namespace tvtopo
