#ifndef TVTOPO_PC_SOLVER_HPP
#define TVTOPO_PC_SOLVER_HPP

#include <concepts>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tvtopo/errors.hpp"
#include "tvtopo/matcalc.hpp"

namespace tvtopo {

/**
 * A time-varying cost f(s; t) over a convex feasible set, seen through the
 * derivatives the prediction-correction engine needs.  All queries refer to
 * the problem's current time; `advance` absorbs the next datum and moves the
 * clock forward by one sampling period.
 */
template <class P>
concept TimeVaryingProblem =
    requires(P& p, const P& cp, const VechVec& s, const typename P::datum_type& d) {
      { cp.gradient(s) } -> std::convertible_to<VechVec>;
      { cp.hessian_apply(s, s) } -> std::convertible_to<VechVec>;
      { cp.time_gradient() } -> std::convertible_to<VechVec>;
      { cp.project(s) } -> std::convertible_to<VechVec>;
      p.advance(d);
    };

/// Multiplier applied to alpha in the prediction update.  Problems may
/// override the default of 1 through a static `prediction_step_factor()`.
template <class P>
constexpr double prediction_step_factor() {
  if constexpr (requires { { P::prediction_step_factor() } -> std::convertible_to<double>; })
    return P::prediction_step_factor();
  else
    return 1.0;
}

struct SolverConfig {
  int P = 1;            ///< prediction steps per sample
  int C = 1;            ///< correction steps per sample
  double alpha = 1e-3;  ///< prediction stepsize
  double beta = 1e-3;   ///< correction stepsize
  double h = 1.0;       ///< sampling period

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

struct SolverState {
  VechVec estimate;
  long t = 0;
};

namespace detail {

inline void require_finite(const Vector& v, const char* stage, int inner, long t) {
  if (v.allFinite()) return;
  std::ostringstream msg;
  msg << stage << " iterate " << inner << " became non-finite";
  if (t >= 0) msg << " at time " << t;
  throw DivergenceError(msg.str(), t);
}

/// Runs fn, reporting a derivative evaluation that broke down on an
/// ill-conditioned iterate as divergence at time t.
template <class Fn>
auto guard_numerics(const char* stage, long t, Fn&& fn) {
  try {
    return fn();
  } catch (const NotPositiveDefiniteError& e) {
    std::ostringstream msg;
    msg << stage << " failed at time " << t << ": " << e.what();
    throw DivergenceError(msg.str(), t);
  } catch (const NumericalError& e) {
    std::ostringstream msg;
    msg << stage << " failed at time " << t << ": " << e.what();
    throw DivergenceError(msg.str(), t);
  }
}

}  // namespace detail

/**
 * Prediction: P projected-gradient steps on the quadratic model of
 * f(.; t+1) built from derivatives at (s_t, t):
 *
 *   s^{p+1} = proj(s^p - k alpha (grad_t + H_t (s^p - s_t) + h g_t))
 *
 * where k = prediction_step_factor<P>().  grad_t, H_t and g_t are
 * evaluated once at s_t.
 */
template <TimeVaryingProblem Problem>
VechVec predict(const SolverState& state, const Problem& problem, const SolverConfig& cfg) {
  if (cfg.P <= 0) return state.estimate;
  return detail::guard_numerics("prediction", state.t, [&] {
    const Vector& s_t = state.estimate.values();
    const Vector affine = problem.gradient(state.estimate).values() + cfg.h * problem.time_gradient().values();
    const double step = prediction_step_factor<Problem>() * cfg.alpha;

    VechVec iterate = state.estimate;
    for (int p = 0; p < cfg.P; ++p) {
      Vector direction = affine;
      if (p > 0) {
        const VechVec offset(state.estimate.n(), iterate.values() - s_t);
        direction += problem.hessian_apply(state.estimate, offset).values();
      }
      VechVec next(state.estimate.n(), iterate.values() - step * direction);
      detail::require_finite(next.values(), "prediction", p, state.t);
      iterate = problem.project(next);
    }
    return iterate;
  });
}

/// Correction: C projected-gradient steps on the newly revealed cost, with
/// the gradient re-evaluated at every iterate.
template <TimeVaryingProblem Problem>
VechVec correct(const VechVec& s_pred, const Problem& problem, const SolverConfig& cfg, long t = -1) {
  return detail::guard_numerics("correction", t, [&] {
    VechVec iterate = s_pred;
    for (int c = 0; c < cfg.C; ++c) {
      VechVec next(iterate.n(), iterate.values() - cfg.beta * problem.gradient(iterate).values());
      detail::require_finite(next.values(), "correction", c, t);
      iterate = problem.project(next);
    }
    return iterate;
  });
}

/// One tick of the tracking loop: predict with data up to t, absorb the
/// datum of t+1, then correct.
template <TimeVaryingProblem Problem>
SolverState step(const SolverState& state, Problem& problem, const typename Problem::datum_type& datum,
                 const SolverConfig& cfg) {
  VechVec s_pred = predict(state, problem, cfg);
  problem.advance(datum);
  return SolverState{correct(s_pred, problem, cfg, state.t + 1), state.t + 1};
}

/// Runs `step` over a stream and returns every estimate after the initial one.
template <TimeVaryingProblem Problem>
std::vector<SolverState> run(SolverState state, Problem& problem,
                             std::span<const typename Problem::datum_type> stream, const SolverConfig& cfg) {
  std::vector<SolverState> trajectory;
  trajectory.reserve(stream.size());
  for (const auto& datum : stream) {
    state = step(state, problem, datum, cfg);
    trajectory.push_back(state);
  }
  return trajectory;
}

/// `run` with prediction disabled.
template <TimeVaryingProblem Problem>
std::vector<SolverState> run_correction_only(SolverState state, Problem& problem,
                                             std::span<const typename Problem::datum_type> stream,
                                             SolverConfig cfg) {
  cfg.P = 0;
  return run(std::move(state), problem, stream, cfg);
}

}  // namespace tvtopo

#endif  // TVTOPO_PC_SOLVER_HPP
