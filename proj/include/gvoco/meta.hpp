#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "gvoco/errors.hpp"

namespace gvoco {

// Prod-style expert combiner with optimistic hints and an adaptive loss
// scale. All weights live in log space; decisions use eta-weighted tilted
// weights p_i proportional to eta_i * w_i * exp(eta_i m_i). Observations
// clip the instantaneous regret toward the hint whenever the deviation
// exceeds the running scale B, which keeps every per-expert exponent below
// 1/2 without knowing the loss range in advance.
//
// Protocol per round: decide(m) -> observe(r).
class ScaleAdaptiveProd {
 public:
  explicit ScaleAdaptiveProd(int experts, double scale0 = 1.0,
                             bool check_invariants = true)
      : n_(experts), scale_(scale0), check_(check_invariants) {
    if (experts < 1) throw ConfigError("meta needs at least one expert");
    if (!(scale0 > 0.0)) throw ConfigError("initial scale must be positive");
    log_w_ = Eigen::VectorXd::Zero(n_);
    sq_dev_ = Eigen::VectorXd::Zero(n_);
    eta_ = Eigen::VectorXd::Constant(n_, 1.0 / std::sqrt(1.0 + 4.0 * scale0 * scale0));
    m_ = Eigen::VectorXd::Zero(n_);
    rbar_ = Eigen::VectorXd::Zero(n_);
  }

  // Rebuild a combiner from checkpointed state.
  static ScaleAdaptiveProd from_state(const Eigen::VectorXd& eta,
                                      const Eigen::VectorXd& log_w,
                                      const Eigen::VectorXd& sq_dev, double scale,
                                      int rounds = 0, bool check_invariants = true) {
    if (eta.size() != log_w.size() || eta.size() != sq_dev.size())
      throw ConfigError("state vectors must have equal length");
    if (eta.size() < 1 || eta.minCoeff() <= 0.0)
      throw ConfigError("learning rates must be positive");
    ScaleAdaptiveProd s(static_cast<int>(eta.size()), scale, check_invariants);
    s.eta_ = eta;
    s.log_w_ = log_w;
    s.sq_dev_ = sq_dev;
    s.rounds_ = rounds;
    return s;
  }

  int experts() const { return n_; }
  int rounds() const { return rounds_; }
  double scale() const { return scale_; }
  const Eigen::VectorXd& rates() const { return eta_; }
  const Eigen::VectorXd& log_weights() const { return log_w_; }
  const Eigen::VectorXd& last_optimism() const { return m_; }
  const Eigen::VectorXd& last_clipped() const { return rbar_; }

  // Tilted decision weights for a hypothetical hint; does not change state.
  Eigen::VectorXd weights_for(const Eigen::VectorXd& m) const {
    if (m.size() != n_) throw ConfigError("hint dimension mismatch");
    Eigen::VectorXd score(n_);
    for (int i = 0; i < n_; ++i) {
      if (!std::isfinite(m[i])) throw ConfigError("hint must be finite");
      score[i] = std::log(eta_[i]) + log_w_[i] + eta_[i] * m[i];
    }
    Eigen::VectorXd p = (score.array() - score.maxCoeff()).exp();
    return p / p.sum();
  }

  const Eigen::VectorXd& decide(const Eigen::VectorXd& m) {
    if (awaiting_observe_)
      throw std::logic_error("decide called twice without observe");
    p_ = weights_for(m);
    m_ = m;
    awaiting_observe_ = true;
    return p_;
  }

  const Eigen::VectorXd& decision() const { return p_; }

  void observe(const Eigen::VectorXd& r) {
    if (!awaiting_observe_)
      throw std::logic_error("observe called before decide");
    if (r.size() != n_) throw ConfigError("regret vector dimension mismatch");

    const int t = rounds_ + 1;
    Eigen::VectorXd dev = r - m_;
    const double dev_inf = dev.lpNorm<Eigen::Infinity>();
    const double scale_prev = scale_;
    scale_ = std::max(scale_, dev_inf);
    const double ratio = scale_prev / scale_;
    rbar_ = m_ + ratio * dev;

    Eigen::VectorXd phi = (ratio * dev).array().square();

    if (check_) {
      for (int i = 0; i < n_; ++i) {
        const double expo = eta_[i] * std::abs(rbar_[i] - m_[i]);
        if (expo > 0.5 + 1e-12)
          throw InvariantError("prod exponent bound", t, expo, 0.5);
      }
      if (!(ratio > 0.0 && ratio <= 1.0))
        throw InvariantError("scale ratio range", t, ratio, 1.0);
    }

    sq_dev_ += phi;
    for (int i = 0; i < n_; ++i) {
      const double eta_new =
          1.0 / std::sqrt(1.0 + sq_dev_[i] + 4.0 * scale_ * scale_);
      if (check_) {
        const double rr = eta_new / eta_[i];
        if (!(rr > 0.0 && rr <= 1.0 + 1e-12))
          throw InvariantError("rate ratio range", t, rr, 1.0);
      }
      log_w_[i] = (eta_new / eta_[i]) *
                  (log_w_[i] + eta_[i] * rbar_[i] - eta_[i] * eta_[i] * phi[i]);
      eta_[i] = eta_new;
    }

    ++rounds_;
    awaiting_observe_ = false;
  }

 private:
  int n_;
  Eigen::VectorXd log_w_, sq_dev_, eta_, m_, rbar_, p_;
  double scale_;
  int rounds_ = 0;
  bool check_;
  bool awaiting_observe_ = false;
};

struct FixpointResult {
  double alpha = 0.0;
  Eigen::VectorXd optimism;  // m_i = alpha - values_i
  Eigen::VectorXd weights;   // decision weights at alpha
  int iterations = 0;
  double lo = 0.0, hi = 0.0;  // bracket actually used
};

// Solves alpha = mixer(p(alpha)) by bisection, where p(alpha) are the tilted
// weights for the hint m_i = alpha - values_i. `mixer` maps decision weights
// to the (previous-round) loss of the combined decision; for plain expert
// advice it is the weighted average of `values`. The bracket is
// [lower_bound, max_i values_i]; its endpoint signs are asserted, and ties
// resolve toward the lower endpoint.
template <class Mixer>
FixpointResult solve_optimism_fixpoint(const ScaleAdaptiveProd& meta,
                                       const Eigen::VectorXd& values,
                                       const Mixer& mixer, double lower_bound,
                                       double tol) {
  if (values.size() != meta.experts())
    throw ConfigError("fixpoint values dimension mismatch");
  if (!(tol > 0.0)) throw ConfigError("fixpoint tolerance must be positive");

  double lo = lower_bound;
  double hi = values.maxCoeff();
  if (!(lo <= hi))
    throw ConfigError("fixpoint bracket empty: lower bound exceeds expert values");

  auto weights_at = [&](double a) {
    return meta.weights_for(Eigen::VectorXd::Constant(values.size(), a) - values);
  };
  auto g = [&](double a) { return mixer(weights_at(a)); };

  FixpointResult out;
  out.lo = lo;
  out.hi = hi;

  const double span = hi - lo;
  const double tiny = 1e-14 * std::max(1.0, std::abs(hi) + std::abs(lo));
  const double g_hi = g(hi);
  if (g_hi - hi > 1e-9 * std::max(1.0, span))
    throw InvariantError("fixpoint upper endpoint sign", 0, g_hi, hi);
  const double g_lo = g(lo);
  if (g_lo - lo < -1e-9 * std::max(1.0, span))
    throw InvariantError("fixpoint lower endpoint sign", 0, g_lo, lo);

  // Exact roots at the endpoints need no iterations (e.g. a single expert).
  if (std::abs(g_lo - lo) <= tiny) {
    out.alpha = lo;
  } else if (std::abs(g_hi - hi) <= tiny) {
    out.alpha = hi;
  } else {
    int it = 0;
    while (hi - lo > tol) {
      if (++it > 200) throw NumericError("fixpoint bisection stalled", hi - lo);
      const double mid = 0.5 * (lo + hi);
      if (!(mid > lo && mid < hi)) break;  // interval below float resolution
      if (g(mid) - mid >= 0.0)
        lo = mid;
      else
        hi = mid;
    }
    out.iterations = it;
    out.alpha = lo;
  }

  out.optimism = Eigen::VectorXd::Constant(values.size(), out.alpha) - values;
  out.weights = weights_at(out.alpha);
  return out;
}

}  // namespace gvoco
