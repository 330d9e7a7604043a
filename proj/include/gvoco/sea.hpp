#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/base_learner.hpp"
#include "gvoco/errors.hpp"
#include "gvoco/functions.hpp"
#include "gvoco/geometry.hpp"
#include "gvoco/rng.hpp"
#include "gvoco/universal.hpp"

namespace gvoco {

// Stochastic environment with adversarially drifting means: each round draws
// a loss from a per-round distribution whose expectation F_t is available in
// closed form. Noise enters the linear coefficient (both families) and, for
// the quadratic family, a bounded uniform rescaling of the curvature matrix,
// so the expectation stays exact while the gradient noise becomes
// state-dependent.
struct SeaConfig {
  enum class Family { Linear, Quadratic };

  Family family = Family::Linear;
  int horizon = 0;
  int dim = 0;
  double noise = 0.1;       // per-coordinate std dev of the linear noise
  double curvature_noise = 0.0;  // quadratic only: std dev of the rescaling
  double mean_drift = 0.0;  // per-round mean shift magnitude (0 = fixed D_t)
  double base_scale = 1.0;  // magnitude of the mean linear term / curvature
  int grid_points = 256;    // fixed quasi-random evaluation grid for sups
  std::uint64_t seed = 0;

  void validate() const {
    if (horizon < 1) throw ConfigError("sea environment needs horizon >= 1");
    if (dim < 1) throw ConfigError("sea environment needs dim >= 1");
    if (noise < 0.0 || curvature_noise < 0.0)
      throw ConfigError("sea noise levels must be nonnegative");
    if (mean_drift < 0.0) throw ConfigError("sea mean drift must be nonnegative");
    if (grid_points < 1) throw ConfigError("sea evaluation grid is empty");
    if (family == Family::Linear && curvature_noise != 0.0)
      throw ConfigError("curvature noise applies to the quadratic family only");
    if (curvature_noise * std::sqrt(3.0) > 0.9)
      throw ConfigError("curvature noise too large to keep losses convex");
  }
};

class SeaEnvironment {
 public:
  SeaEnvironment(SeaConfig cfg, FeasibleDomain domain)
      : cfg_(cfg), domain_(std::move(domain)) {
    cfg_.validate();
    if (domain_.dim() != cfg_.dim)
      throw ConfigError("sea domain dimension disagrees with the config");
    b_base_ = cfg_.base_scale *
              rng::unit_vector(cfg_.seed, /*stream=*/1, cfg_.dim);
    drift_dir_ = rng::unit_vector(cfg_.seed, /*stream=*/2, cfg_.dim);
    if (cfg_.family == SeaConfig::Family::Quadratic) {
      Eigen::MatrixXd Q = detail::random_orthogonal(cfg_.dim, cfg_.seed, 3);
      Vector evals(cfg_.dim);
      for (int i = 0; i < cfg_.dim; ++i) {
        const double f = cfg_.dim == 1 ? 1.0
                                       : static_cast<double>(i) / (cfg_.dim - 1);
        evals[i] = cfg_.base_scale * (0.2 + 0.8 * f);
      }
      A_ = Q * evals.asDiagonal() * Q.transpose();
      A_ = 0.5 * (A_ + A_.transpose().eval());
    }
    grid_.reserve(static_cast<std::size_t>(cfg_.grid_points));
    for (int j = 0; j < cfg_.grid_points; ++j)
      grid_.push_back(domain_.grid_point(static_cast<std::uint64_t>(j)));
  }

  const SeaConfig& config() const { return cfg_; }
  const FeasibleDomain& domain() const { return domain_; }
  int horizon() const { return cfg_.horizon; }
  int dim() const { return cfg_.dim; }
  const std::vector<Vector>& grid() const { return grid_; }

  Vector mean_linear_term(int t) const {
    check_round(t);
    return b_base_ + (static_cast<double>(t - 1) * cfg_.mean_drift) * drift_dir_;
  }

  // F_t, the exact expectation of round t's distribution.
  OnlineFunction mean_at(int t) const {
    if (cfg_.family == SeaConfig::Family::Linear)
      return OnlineFunction::linear(mean_linear_term(t));
    return OnlineFunction::quadratic(A_, mean_linear_term(t));
  }

  // One draw from D_t; repetitions index independent sample paths.
  OnlineFunction sample_at(int t, std::uint64_t rep) const {
    check_round(t);
    const std::uint64_t stream =
        rng::hash3(cfg_.seed, rep + 11, static_cast<std::uint64_t>(t));
    Vector b = mean_linear_term(t) +
               cfg_.noise * rng::gauss_vector(cfg_.seed, stream, cfg_.dim);
    if (cfg_.family == SeaConfig::Family::Linear)
      return OnlineFunction::linear(std::move(b));
    // Uniform symmetric rescale keeps E[(1+nu) A] = A and 1+nu > 0.
    const double half_width = cfg_.curvature_noise * std::sqrt(3.0);
    const double nu = rng::uniform(cfg_.seed, stream, 2 * cfg_.dim + 1,
                                   -half_width, half_width);
    return OnlineFunction::quadratic((1.0 + nu) * A_, std::move(b));
  }

  // sum_{t>=2} sup_x ||grad F_t - grad F_{t-1}||^2; the mean path moves only
  // through its linear term, so the sup is exact.
  double adversarial_shift() const {
    double total = 0.0;
    for (int t = 2; t <= cfg_.horizon; ++t)
      total += (mean_linear_term(t) - mean_linear_term(t - 1)).squaredNorm();
    return total;
  }

  double adversarial_shift_max() const {
    double worst = 0.0;
    for (int t = 2; t <= cfg_.horizon; ++t)
      worst = std::max(
          worst, (mean_linear_term(t) - mean_linear_term(t - 1)).squaredNorm());
    return worst;
  }

  // T d sigma^2: the linear family's gradient noise is constant in x.
  double analytic_stochastic_variance() const {
    if (cfg_.family != SeaConfig::Family::Linear)
      throw CapabilityError(
          "analytic stochastic variance is closed-form for linear losses only");
    return static_cast<double>(cfg_.horizon) * cfg_.dim * cfg_.noise *
           cfg_.noise;
  }

 private:
  void check_round(int t) const {
    if (t < 1 || t > cfg_.horizon)
      throw ConfigError("sea round index out of range");
  }

  SeaConfig cfg_;
  FeasibleDomain domain_;
  Vector b_base_, drift_dir_;
  Eigen::MatrixXd A_;
  std::vector<Vector> grid_;
};

enum class SeaLearner { Universal, Convex };

struct SeaRunConfig {
  int repetitions = 1;
  SeaLearner learner = SeaLearner::Universal;
  double meta_scale0 = 1.0;
  bool check_invariants = true;
};

struct SeaReport {
  int repetitions = 0;
  double mean_regret = 0.0;
  double regret_stderr = 0.0;
  std::vector<double> per_rep_regret;
  double sigma_sq = 0.0;        // sum_t sup_grid mean_rep ||grad dev||^2
  double sigma_tilde_sq = 0.0;  // sum_t mean_rep sup_grid ||grad dev||^2
  double sigma_max_sq = 0.0;    // max_t of the sigma_sq summand
  double shift_sq = 0.0;        // exact adversarial shift of the mean path
  double shift_max_sq = 0.0;
};

// Runs the learner over independent sample paths and estimates the variance
// quantities from the sampled gradients on the environment's fixed grid.
// Per-path regret is measured against that path's best fixed decision.
inline SeaReport sea_run(const SeaEnvironment& env, const SeaRunConfig& run) {
  if (run.repetitions < 1)
    throw ConfigError("sea run needs at least one repetition");
  const int T = env.horizon();
  const int J = static_cast<int>(env.grid().size());
  const FeasibleDomain& dom = env.domain();

  std::vector<OnlineFunction> means;
  means.reserve(static_cast<std::size_t>(T) + 1);
  means.push_back(OnlineFunction::zero(env.dim()));
  for (int t = 1; t <= T; ++t) means.push_back(env.mean_at(t));

  SeaReport report;
  report.repetitions = run.repetitions;
  report.shift_sq = env.adversarial_shift();
  report.shift_max_sq = env.adversarial_shift_max();

  // mean-over-reps accumulator per (round, grid point) for the sigma^2 sup
  std::vector<std::vector<double>> dev_sum(
      static_cast<std::size_t>(T), std::vector<double>(static_cast<std::size_t>(J), 0.0));
  std::vector<double> sup_sum(static_cast<std::size_t>(T), 0.0);

  double regret_sum = 0.0, regret_sq_sum = 0.0;
  for (int rep = 0; rep < run.repetitions; ++rep) {
    std::vector<OnlineFunction> fs;
    fs.reserve(static_cast<std::size_t>(T) + 1);
    fs.push_back(OnlineFunction::zero(env.dim()));
    for (int t = 1; t <= T; ++t)
      fs.push_back(env.sample_at(t, static_cast<std::uint64_t>(rep)));
    Stream stream(std::move(fs), /*exact_eligible=*/false);

    double cum_loss = 0.0;
    if (run.learner == SeaLearner::Universal) {
      UniversalConfig ucfg;
      ucfg.horizon = T;
      ucfg.meta_scale0 = run.meta_scale0;
      ucfg.lower_bound = stream.lower_bound(dom);
      ucfg.check_invariants = run.check_invariants;
      UniversalLearner learner(dom, ucfg);
      for (int t = 1; t <= T; ++t) {
        const Vector& x = learner.predict(stream.at(t - 1));
        cum_loss += stream.at(t).value(x);
        learner.observe(stream.at(t));
      }
    } else {
      LearnerOptions opt;
      opt.mode = LearnerMode::Convex;
      opt.check_invariants = run.check_invariants;
      OmdLearner<> learner(dom, opt);
      for (int t = 1; t <= T; ++t) {
        const Vector& x = learner.predict(stream.at(t - 1));
        cum_loss += stream.at(t).value(x);
        learner.update(stream.at(t));
      }
    }
    const double regret = cum_loss - best_in_hindsight(stream, dom).value;
    report.per_rep_regret.push_back(regret);
    regret_sum += regret;
    regret_sq_sum += regret * regret;

    for (int t = 1; t <= T; ++t) {
      const OnlineFunction& f = stream.at(t);
      const OnlineFunction& mean = means[static_cast<std::size_t>(t)];
      double sup = 0.0;
      for (int j = 0; j < J; ++j) {
        const Vector& xj = env.grid()[static_cast<std::size_t>(j)];
        const double dev = (f.gradient(xj) - mean.gradient(xj)).squaredNorm();
        dev_sum[static_cast<std::size_t>(t) - 1][static_cast<std::size_t>(j)] += dev;
        sup = std::max(sup, dev);
      }
      sup_sum[static_cast<std::size_t>(t) - 1] += sup;
    }
  }

  const double R = static_cast<double>(run.repetitions);
  report.mean_regret = regret_sum / R;
  if (run.repetitions > 1) {
    const double var =
        (regret_sq_sum - regret_sum * regret_sum / R) / (R - 1.0);
    report.regret_stderr = std::sqrt(std::max(var, 0.0) / R);
  }
  for (int t = 0; t < T; ++t) {
    double sup_of_mean = 0.0;
    for (int j = 0; j < J; ++j)
      sup_of_mean = std::max(
          sup_of_mean,
          dev_sum[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)] / R);
    report.sigma_sq += sup_of_mean;
    report.sigma_max_sq = std::max(report.sigma_max_sq, sup_of_mean);
    report.sigma_tilde_sq += sup_sum[static_cast<std::size_t>(t)] / R;
  }
  return report;
}

}  // namespace gvoco
