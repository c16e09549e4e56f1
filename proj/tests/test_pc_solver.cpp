#include <doctest.h>

#include <random>
#include <vector>

#include "oracles.hpp"
#include "tvtopo/errors.hpp"
#include "tvtopo/ggm.hpp"
#include "tvtopo/pc_solver.hpp"

using namespace tvtopo;

namespace {

/// f(s; t) = |s - t c|^2 / 2 on an unconstrained vech space.
struct DriftingQuadratic {
  using datum_type = int;
  Vector c;
  double t = 0;

  Vector target() const { return t * c; }
  VechVec gradient(const VechVec& s) const { return VechVec(s.n(), s.values() - target()); }
  VechVec hessian_apply(const VechVec&, const VechVec& d) const { return d; }
  VechVec time_gradient() const { return VechVec(vech_dimension(c.size()), -c); }
  VechVec project(const VechVec& s) const { return s; }
  void advance(int) { t += 1; }
};

static_assert(TimeVaryingProblem<GgmProblem>);
static_assert(TimeVaryingProblem<StationaryGgmProblem>);
static_assert(TimeVaryingProblem<DriftingQuadratic>);
static_assert(prediction_step_factor<DriftingQuadratic>() == 1.0);
static_assert(prediction_step_factor<GgmProblem>() == 2.0);

Matrix floor_spectrum(const Matrix& m, double eps) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  return es.eigenvectors() * es.eigenvalues().cwiseMax(eps).asDiagonal() * es.eigenvectors().transpose();
}

struct Hand3 {
  Matrix sigma_prev, sigma, s0;
};

Hand3 hand_built() {
  Hand3 h;
  h.sigma_prev.resize(3, 3);
  h.sigma_prev << 1.2, 0.3, 0.1, 0.3, 0.9, -0.2, 0.1, -0.2, 1.5;
  h.sigma.resize(3, 3);
  h.sigma << 1.25, 0.28, 0.12, 0.28, 0.95, -0.25, 0.12, -0.25, 1.45;
  h.s0.resize(3, 3);
  h.s0 << 1.0, -0.2, 0.0, -0.2, 1.1, 0.1, 0.0, 0.1, 0.8;
  return h;
}

GgmProblem problem_for(const Hand3& h) {
  return GgmProblem(StreamingCovariance::from_state(0.97, SymMat(h.sigma), SymMat(h.sigma_prev), 10));
}

/// Prediction iterates computed with explicit D and (S kron S)^{-1}.
std::vector<Vector> explicit_prediction(const Hand3& h, const SolverConfig& cfg, double eps) {
  const Matrix d = oracle::duplication(3);
  const Matrix s_inv = h.s0.inverse();
  const Vector grad = d.transpose() * oracle::vec(h.sigma - s_inv);
  const Vector gt = d.transpose() * oracle::vec(h.sigma - h.sigma_prev);
  const Matrix hess = d.transpose() * oracle::kron(h.s0, h.s0).inverse() * d;
  const Vector s_t = oracle::half_vec(h.s0);
  std::vector<Vector> iterates;
  Vector s = s_t;
  for (int p = 0; p < cfg.P; ++p) {
    const Vector raw = s - 2 * cfg.alpha * (grad + hess * (s - s_t) + cfg.h * gt);
    s = oracle::half_vec(floor_spectrum(oracle::from_half_vec(raw, 3), eps));
    iterates.push_back(s);
  }
  return iterates;
}

Vector explicit_correction(const Matrix& sigma, const Vector& start, const SolverConfig& cfg, double eps) {
  const Matrix d = oracle::duplication(3);
  Vector s = start;
  for (int c = 0; c < cfg.C; ++c) {
    const Matrix sm = oracle::from_half_vec(s, 3);
    const Vector raw = s - cfg.beta * d.transpose() * oracle::vec(sigma - sm.inverse());
    s = oracle::half_vec(floor_spectrum(oracle::from_half_vec(raw, 3), eps));
  }
  return s;
}

}  // namespace

TEST_CASE("SolverConfig validation names the field") {
  SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.P = -1;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "solver.P");
  }
  cfg = SolverConfig{};
  cfg.beta = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("prediction with P = 0 returns the estimate") {
  const Hand3 h = hand_built();
  const GgmProblem p = problem_for(h);
  const SolverState st{vech(SymMat(h.s0)), 10};
  SolverConfig cfg;
  cfg.P = 0;
  CHECK(predict(st, p, cfg) == st.estimate);
}

TEST_CASE("prediction is a fixed point at the optimum of a stationary stream") {
  std::mt19937_64 gen(1);
  const SymMat sigma(oracle::random_spd(4, gen));
  const StationaryGgmProblem p(sigma);
  const SolverState st{vech(mle_closed_form(sigma)), 3};
  SolverConfig cfg;
  cfg.P = 5;
  CHECK((predict(st, p, cfg).values() - st.estimate.values()).norm() < 1e-12);
}

TEST_CASE("prediction iterates match the explicit-matrix update") {
  const Hand3 h = hand_built();
  const GgmProblem p = problem_for(h);
  SolverConfig cfg;
  cfg.alpha = 0.05;
  for (int P = 1; P <= 3; ++P) {
    cfg.P = P;
    const auto want = explicit_prediction(h, cfg, p.eps());
    const Vector got = predict(SolverState{vech(SymMat(h.s0)), 10}, p, cfg).values();
    CHECK((got - want.back()).norm() < 1e-12);
  }
}

TEST_CASE("correction") {
  const Hand3 h = hand_built();
  const GgmProblem p = problem_for(h);
  SolverConfig cfg;
  cfg.C = 0;
  const VechVec s = vech(SymMat(h.s0));
  CHECK(correct(s, p, cfg) == s);

  cfg.C = 1;
  cfg.beta = 0.1;
  CHECK((correct(s, p, cfg).values() - explicit_correction(h.sigma, s.values(), cfg, p.eps())).norm() < 1e-12);
  cfg.C = 4;
  CHECK((correct(s, p, cfg).values() - explicit_correction(h.sigma, s.values(), cfg, p.eps())).norm() < 1e-12);

  const VechVec opt = vech(mle_closed_form(SymMat(h.sigma)));
  CHECK((correct(opt, p, cfg).values() - opt.values()).norm() < 1e-12);
}

TEST_CASE("one full step composes prediction, absorption and correction") {
  const Hand3 h = hand_built();
  GgmProblem p(StreamingCovariance::from_state(0.97, SymMat(h.sigma), SymMat(h.sigma_prev), 10));
  SolverConfig cfg;
  cfg.alpha = 0.05;
  cfg.beta = 0.05;
  const Vector pred = explicit_prediction(h, cfg, p.eps()).back();
  const Eigen::Vector3d x(0.5, -0.4, 1.1);
  const Matrix next_sigma = 0.97 * h.sigma + 0.03 * x * x.transpose();
  const Vector want = explicit_correction(next_sigma, pred, cfg, p.eps());

  const SolverState out = step(SolverState{vech(SymMat(h.s0)), 10}, p, Vector(x), cfg);
  CHECK(out.t == 11);
  CHECK((out.estimate.values() - want).norm() < 1e-12);
  CHECK(p.covariance().count() == 11);
}

TEST_CASE("P = 0, C = 0 only advances time") {
  GgmProblem p(StreamingCovariance(2, 0.9));
  SolverConfig cfg;
  cfg.P = 0;
  cfg.C = 0;
  const SolverState st{vech(SymMat::identity(2)), 0};
  const SolverState out = step(st, p, Vector(Eigen::Vector2d(1, 2)), cfg);
  CHECK(out.estimate == st.estimate);
  CHECK(out.t == 1);
}

TEST_CASE("run_correction_only equals run with P = 0") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> g;
  std::vector<Vector> stream;
  for (int k = 0; k < 40; ++k) stream.push_back(Eigen::Vector3d(g(gen), g(gen), g(gen)));
  SolverConfig cfg;
  cfg.beta = 0.05;
  cfg.C = 2;
  const SolverState init{vech(SymMat::identity(3)), 1};

  GgmProblem a(StreamingCovariance(3, 0.9).updated(stream.front()));
  GgmProblem b = a;
  const std::span<const Vector> rest(stream.data() + 1, stream.size() - 1);
  const auto co = run_correction_only(init, a, rest, cfg);
  SolverConfig p0 = cfg;
  p0.P = 0;
  const auto plain = run(init, b, rest, p0);
  REQUIRE(co.size() == plain.size());
  for (std::size_t k = 0; k < co.size(); ++k) CHECK(co[k].estimate == plain[k].estimate);
}

TEST_CASE("a vanishing correction step leaves the estimate in place") {
  GgmProblem p(StreamingCovariance(2, 0.9).updated(Eigen::Vector2d(1, 1)));
  SolverConfig cfg;
  cfg.P = 0;
  cfg.beta = 1e-300;
  const SolverState st{vech(SymMat::identity(2)), 1};
  const Vector moved = step(st, p, Vector(Eigen::Vector2d(0.5, 2)), cfg).estimate.values() - st.estimate.values();
  CHECK(moved.norm() < 1e-250);
}

TEST_CASE("generic engine tracks a drifting quadratic exactly") {
  DriftingQuadratic q{Eigen::Vector3d(1.0, -2.0, 0.5), 0};
  SolverConfig cfg;
  cfg.P = 200;
  cfg.C = 0;
  cfg.alpha = 0.1;
  SolverState st{VechVec(2, Eigen::Vector3d::Zero()), 0};
  // With P large the prediction solves the quadratic model, whose minimizer
  // is the next target when the drift is linear.
  for (int k = 0; k < 5; ++k) {
    st = step(st, q, 0, cfg);
    CHECK((st.estimate.values() - q.target()).norm() < 1e-8);
  }
}

TEST_CASE("non-finite iterates raise DivergenceError with the time index") {
  GgmProblem p(StreamingCovariance(2, 0.9).updated(Eigen::Vector2d(1, 1)));
  SolverConfig cfg;
  cfg.beta = std::numeric_limits<double>::infinity();
  try {
    correct(vech(SymMat::identity(2)), p, cfg, 42);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.time() == 42);
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
}
