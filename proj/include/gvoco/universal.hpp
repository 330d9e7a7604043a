#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gvoco/base_learner.hpp"
#include "gvoco/errors.hpp"
#include "gvoco/functions.hpp"
#include "gvoco/geometry.hpp"
#include "gvoco/meta.hpp"

namespace gvoco {

inline int ceil_log2(int n) {
  if (n < 1) throw ConfigError("ceil_log2 needs a positive argument");
  int k = 0;
  while ((1LL << k) < n) ++k;
  return k;
}

struct UniversalConfig {
  int horizon = 0;
  double meta_scale0 = 1.0;  // initial deviation scale handed to the combiner
  double lower_bound = 0.0;  // global lower bound on every loss over the domain
  bool check_invariants = true;
  bool keep_history = false;

  int experts() const { return ceil_log2(horizon) + 1; }

  // Strong-convexity moduli for the pool experts, ascending in [1/T, 1].
  std::vector<double> modulus_pool() const {
    std::vector<double> pool;
    const int n = experts();
    pool.reserve(static_cast<std::size_t>(n) - 1);
    for (int i = 1; i <= n - 1; ++i)
      pool.push_back(std::ldexp(1.0, i - 1) / horizon);
    return pool;
  }

  void validate() const {
    if (horizon < 2) throw ConfigError("universal learner needs horizon >= 2");
    if (!(meta_scale0 > 0.0)) throw ConfigError("meta scale must be positive");
    if (lower_bound > 0.0)
      throw ConfigError("lower bound must also sit below the zero round (<= 0)");
  }
};

struct UniversalRound {
  int t = 0;
  Vector x;
  Eigen::VectorXd p;            // decision weights over experts
  Eigen::VectorXd optimism;     // hint fed to the combiner
  Eigen::VectorXd regret_feed;  // heterogeneous instantaneous regrets
  Eigen::VectorXd prev_values;  // f_{t-1} at each expert's point
  double alpha = 0.0;           // fixpoint value (predicted loss of the mix)
  int bisect_iters = 0;
  double meta_scale = 0.0;      // B_t after the observation
  std::vector<Vector> expert_x;  // kept only with keep_history
};

// Two-layer ensemble: a convex-mode base learner plus one strongly-convex
// base learner per modulus in the pool, combined by the scale-adaptive Prod
// meta. Expert 0 is the convex learner; pool experts follow ascending. The
// per-round optimism is the fixpoint alpha = f_prev(sum_i p_i(alpha) x_i),
// resolved by bisection over [lower_bound, max_i f_prev(x_i)].
class UniversalLearner {
 public:
  UniversalLearner(const FeasibleDomain& domain, UniversalConfig cfg)
      : domain_(&domain), cfg_(cfg),
        meta_((cfg.validate(), cfg.experts()), cfg.meta_scale0, cfg.check_invariants) {
    LearnerOptions convex_opt;
    convex_opt.mode = LearnerMode::Convex;
    convex_opt.check_invariants = cfg_.check_invariants;
    convex_opt.keep_history = cfg_.keep_history;
    bases_.emplace_back(domain, convex_opt);
    for (double lambda : cfg_.modulus_pool()) {
      LearnerOptions opt;
      opt.mode = LearnerMode::StronglyConvex;
      opt.lambda = lambda;
      opt.check_invariants = cfg_.check_invariants;
      opt.keep_history = cfg_.keep_history;
      bases_.emplace_back(domain, opt);
    }
  }

  int experts() const { return meta_.experts(); }
  int rounds() const { return rounds_; }
  const UniversalConfig& config() const { return cfg_; }
  const ScaleAdaptiveProd& meta() const { return meta_; }
  const OmdLearner<>& base(int i) const { return bases_.at(static_cast<std::size_t>(i)); }

  const Vector& predict(const OnlineFunction& f_prev) {
    if (awaiting_observe_)
      throw std::logic_error("predict called twice without observe");
    const int n = experts();

    expert_x_.clear();
    expert_x_.reserve(static_cast<std::size_t>(n));
    Eigen::VectorXd h(n);
    for (int i = 0; i < n; ++i) {
      expert_x_.push_back(bases_[static_cast<std::size_t>(i)].predict(f_prev));
      h[i] = f_prev.value(expert_x_[static_cast<std::size_t>(i)]);
    }

    auto mixer = [&](const Eigen::VectorXd& p) {
      Vector mix = Vector::Zero(domain_->dim());
      for (int i = 0; i < n; ++i) mix += p[i] * expert_x_[static_cast<std::size_t>(i)];
      return f_prev.value(mix);
    };
    const double span = h.maxCoeff() - cfg_.lower_bound;
    const double tol = std::max(span, 1.0) / cfg_.horizon;
    fix_ = solve_optimism_fixpoint(meta_, h, mixer, cfg_.lower_bound, tol);

    if (cfg_.check_invariants && span > 0.0) {
      const int cap = static_cast<int>(
          std::ceil(std::log2(std::max(span * cfg_.horizon, 2.0)))) + 2;
      if (fix_.iterations > cap)
        throw InvariantError("fixpoint iteration budget", rounds_ + 1,
                             fix_.iterations, cap);
    }

    const Eigen::VectorXd& p = meta_.decide(fix_.optimism);
    x_ = Vector::Zero(domain_->dim());
    for (int i = 0; i < n; ++i) x_ += p[i] * expert_x_[static_cast<std::size_t>(i)];
    if (cfg_.check_invariants && !domain_->contains(x_, 1e-12))
      throw InvariantError("combined decision containment", rounds_ + 1, 0.0, 0.0);

    h_ = std::move(h);
    awaiting_observe_ = true;
    return x_;
  }

  UniversalRound observe(const OnlineFunction& f_t) {
    if (!awaiting_observe_)
      throw std::logic_error("observe called before predict");
    const int n = experts();
    const int t = rounds_ + 1;

    Vector g = f_t.gradient(x_);
    Eigen::VectorXd r(n);
    r[0] = f_t.value(x_) - f_t.value(expert_x_[0]);
    for (int i = 1; i < n; ++i)
      r[i] = g.dot(x_ - expert_x_[static_cast<std::size_t>(i)]);

    const Eigen::VectorXd p = meta_.decision();
    meta_.observe(r);
    if (cfg_.check_invariants) {
      const double prod = p.dot(meta_.last_clipped());
      if (prod > 1e-9)
        throw InvariantError("prod condition", t, prod, 1e-9);
    }

    for (auto& base : bases_) base.update(f_t);

    UniversalRound out;
    out.t = t;
    out.x = x_;
    out.p = p;
    out.optimism = fix_.optimism;
    out.regret_feed = std::move(r);
    out.prev_values = h_;
    out.alpha = fix_.alpha;
    out.bisect_iters = fix_.iterations;
    out.meta_scale = meta_.scale();
    if (cfg_.keep_history) out.expert_x = expert_x_;

    ++rounds_;
    awaiting_observe_ = false;
    return out;
  }

  UniversalRound round(const OnlineFunction& f_prev, const OnlineFunction& f_t) {
    predict(f_prev);
    return observe(f_t);
  }

 private:
  const FeasibleDomain* domain_;
  UniversalConfig cfg_;
  ScaleAdaptiveProd meta_;
  std::vector<OmdLearner<>> bases_;
  std::vector<Vector> expert_x_;
  Eigen::VectorXd h_;
  FixpointResult fix_;
  Vector x_;
  int rounds_ = 0;
  bool awaiting_observe_ = false;
};

}  // namespace gvoco
