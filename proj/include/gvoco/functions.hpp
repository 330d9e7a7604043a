#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "gvoco/errors.hpp"
#include "gvoco/geometry.hpp"
#include "gvoco/link.hpp"
#include "gvoco/optim.hpp"
#include "gvoco/rng.hpp"

namespace gvoco {

enum class Curvature { Convex, StronglyConvex };

// One round's loss. Closed family set keeps functions serializable and lets
// streams certify exact gradient-variation where the per-round gradient
// difference is constant in x.
//
//   Zero:         f(x) = 0                       (round-0 placeholder)
//   Linear:       f(x) = b'x
//   Quadratic:    f(x) = x'Ax/2 + b'x            (A symmetric PSD)
//   Exponential:  f(x) = exp(a'x)
//   Quartic:      f(x) = c*||x-m||^4 + b'x       (c > 0)
//
// Each carries a curvature link: a nondecreasing bound on the Hessian norm
// as a function of the gradient norm at the same point.
class OnlineFunction {
 public:
  enum class Family { Zero, Linear, Quadratic, Exponential, Quartic };

  static OnlineFunction zero(int dim) {
    OnlineFunction f(Family::Zero, dim);
    f.link_ = LinkFunction::constant(kLinkEpsilon);
    f.lower_bound_ = 0.0;
    return f;
  }

  static OnlineFunction linear(Vector b) {
    OnlineFunction f(Family::Linear, static_cast<int>(b.size()));
    f.b_ = std::move(b);
    f.link_ = LinkFunction::constant(kLinkEpsilon);
    return f;
  }

  static OnlineFunction quadratic(Eigen::MatrixXd A, Vector b) {
    if (A.rows() != A.cols() || A.rows() != b.size())
      throw ConfigError("quadratic: A must be square and match b");
    if (!A.isApprox(A.transpose(), 1e-10))
      throw ConfigError("quadratic: A must be symmetric");
    OnlineFunction f(Family::Quadratic, static_cast<int>(b.size()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    double lo = es.eigenvalues().minCoeff();
    double hi = es.eigenvalues().maxCoeff();
    if (lo < -1e-10 * std::max(1.0, hi))
      throw ConfigError("quadratic: A must be positive semidefinite");
    f.A_ = std::move(A);
    f.b_ = std::move(b);
    f.eig_min_ = std::max(lo, 0.0);
    f.eig_max_ = std::max(hi, 0.0);
    f.link_ = LinkFunction::constant(std::max(f.eig_max_, kLinkEpsilon));
    return f;
  }

  static OnlineFunction exponential(Vector a) {
    OnlineFunction f(Family::Exponential, static_cast<int>(a.size()));
    double an = a.norm();
    f.a_ = std::move(a);
    f.link_ = LinkFunction::affine(kLinkEpsilon, an);
    f.lower_bound_ = 0.0;
    return f;
  }

  static OnlineFunction quartic(double c, Vector m, Vector b) {
    if (!(c > 0.0)) throw ConfigError("quartic: coefficient must be positive");
    if (m.size() != b.size())
      throw ConfigError("quartic: center and linear term must match");
    OnlineFunction f(Family::Quartic, static_cast<int>(b.size()));
    f.c_ = c;
    f.m_ = std::move(m);
    f.b_ = std::move(b);
    // ||hess|| = 12c r^2 with r = ||x-m||, and ||grad|| >= 4c r^3 - ||b||,
    // so ||hess|| <= 3*4^(1/3) c^(1/3) (||grad|| + ||b||)^(2/3).
    f.link_ = LinkFunction::power_shift(kLinkEpsilon, 3.0 * std::cbrt(4.0 * c),
                                        f.b_.norm(), 2.0 / 3.0);
    return f;
  }

  Family family() const { return family_; }
  int dim() const { return dim_; }
  bool is_zero() const { return family_ == Family::Zero; }

  double value(const Vector& x) const {
    check_dim(x);
    switch (family_) {
      case Family::Zero: return 0.0;
      case Family::Linear: return b_.dot(x);
      case Family::Quadratic: return 0.5 * x.dot(A_ * x) + b_.dot(x);
      case Family::Exponential: return std::exp(a_.dot(x));
      case Family::Quartic: {
        double r2 = (x - m_).squaredNorm();
        return c_ * r2 * r2 + b_.dot(x);
      }
    }
    throw ConfigError("unknown family");
  }

  Vector gradient(const Vector& x) const {
    check_dim(x);
    switch (family_) {
      case Family::Zero: return Vector::Zero(dim_);
      case Family::Linear: return b_;
      case Family::Quadratic: return A_ * x + b_;
      case Family::Exponential: return std::exp(a_.dot(x)) * a_;
      case Family::Quartic: return 4.0 * c_ * (x - m_).squaredNorm() * (x - m_) + b_;
    }
    throw ConfigError("unknown family");
  }

  double link(double grad_norm) const { return link_(grad_norm); }
  const LinkFunction& link_function() const { return link_; }

  Curvature curvature() const { return curvature_; }
  double sc_modulus() const { return lambda_; }
  void set_curvature(Curvature c, double lambda = 0.0) {
    if (c == Curvature::StronglyConvex && !(lambda > 0.0))
      throw ConfigError("strongly convex tag requires positive modulus");
    curvature_ = c;
    lambda_ = (c == Curvature::StronglyConvex) ? lambda : 0.0;
  }

  // Global infimum of f when known in closed form, -inf otherwise.
  double lower_bound() const { return lower_bound_; }

  // Family parameters (throw if absent for this family).
  const Eigen::MatrixXd& quadratic_matrix() const { need(Family::Quadratic); return A_; }
  const Vector& linear_term() const {
    if (family_ != Family::Linear && family_ != Family::Quadratic &&
        family_ != Family::Quartic)
      throw ConfigError("family has no linear term");
    return b_;
  }
  const Vector& exponent() const { need(Family::Exponential); return a_; }
  const Vector& quartic_center() const { need(Family::Quartic); return m_; }
  double quartic_coeff() const { need(Family::Quartic); return c_; }
  double eig_min() const { need(Family::Quadratic); return eig_min_; }
  double eig_max() const { need(Family::Quadratic); return eig_max_; }

  // Lowest possible value over the given domain (cheap bound, not tight).
  double value_lower_bound(const FeasibleDomain& dom) const {
    double R = dom.max_norm();
    switch (family_) {
      case Family::Zero: return 0.0;
      case Family::Exponential: return 0.0;
      case Family::Linear: return -b_.norm() * R;
      case Family::Quadratic: return -b_.norm() * R;  // x'Ax >= 0
      case Family::Quartic: return -b_.norm() * R;    // quartic part >= 0
    }
    throw ConfigError("unknown family");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dim"] = dim_;
    j["curvature"] = curvature_ == Curvature::StronglyConvex ? "strongly_convex" : "convex";
    j["lambda"] = lambda_;
    switch (family_) {
      case Family::Zero: j["family"] = "zero"; break;
      case Family::Linear:
        j["family"] = "linear";
        j["b"] = std::vector<double>(b_.data(), b_.data() + b_.size());
        break;
      case Family::Quadratic: {
        j["family"] = "quadratic";
        std::vector<std::vector<double>> rows;
        for (int r = 0; r < A_.rows(); ++r)
          rows.emplace_back(A_.row(r).begin(), A_.row(r).end());
        j["A"] = rows;
        j["b"] = std::vector<double>(b_.data(), b_.data() + b_.size());
        break;
      }
      case Family::Exponential:
        j["family"] = "exponential";
        j["a"] = std::vector<double>(a_.data(), a_.data() + a_.size());
        break;
      case Family::Quartic:
        j["family"] = "quartic";
        j["c"] = c_;
        j["m"] = std::vector<double>(m_.data(), m_.data() + m_.size());
        j["b"] = std::vector<double>(b_.data(), b_.data() + b_.size());
        break;
    }
    return j;
  }

  static OnlineFunction from_json(const nlohmann::json& j) {
    auto vec = [](const nlohmann::json& a) {
      Vector v(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
      return v;
    };
    std::string fam = j.at("family").get<std::string>();
    OnlineFunction f = [&]() {
      if (fam == "zero") return zero(j.at("dim").get<int>());
      if (fam == "linear") return linear(vec(j.at("b")));
      if (fam == "quadratic") {
        const auto& rows = j.at("A");
        Eigen::MatrixXd A(rows.size(), rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t c = 0; c < rows.size(); ++c)
            A(r, c) = rows[r][c].get<double>();
        return quadratic(A, vec(j.at("b")));
      }
      if (fam == "exponential") return exponential(vec(j.at("a")));
      if (fam == "quartic")
        return quartic(j.at("c").get<double>(), vec(j.at("m")), vec(j.at("b")));
      throw ConfigError("unknown family in dump: " + fam);
    }();
    if (j.value("curvature", "convex") == std::string("strongly_convex"))
      f.set_curvature(Curvature::StronglyConvex, j.at("lambda").get<double>());
    return f;
  }

 private:
  OnlineFunction(Family fam, int dim) : family_(fam), dim_(dim) {
    if (dim <= 0) throw ConfigError("function dimension must be positive");
  }

  void check_dim(const Vector& x) const {
    if (x.size() != dim_) throw ConfigError("function: dimension mismatch");
  }
  void need(Family f) const {
    if (family_ != f) throw ConfigError("parameter not defined for this family");
  }

  Family family_;
  int dim_;
  Eigen::MatrixXd A_;
  Vector b_, a_, m_;
  double c_ = 0.0;
  double eig_min_ = 0.0, eig_max_ = 0.0;
  LinkFunction link_;
  Curvature curvature_ = Curvature::Convex;
  double lambda_ = 0.0;
  double lower_bound_ = -std::numeric_limits<double>::infinity();
};

inline double query_link(const OnlineFunction& f, double grad_norm) {
  return f.link(grad_norm);
}

struct StreamConfig {
  enum class Family { Quadratic, Exponential, Quartic };
  enum class Schedule { Stationary, LinearDrift, Piecewise, AdversarialFlip };

  Family family = Family::Quadratic;
  Schedule schedule = Schedule::Stationary;
  int horizon = 0;
  int dim = 0;
  bool strongly_convex = false;
  double lambda = 0.0;             // target modulus when strongly_convex
  double scale = 1.0;              // top curvature / coefficient scale
  double linear_scale = 0.3;       // ||b|| of the base linear term
  double drift = 0.0;              // per-transition parameter shift
  int segments = 2;                // piecewise: number of constant blocks
  int period = 1;                  // adversarial_flip: rounds between sign flips
  double target_variation = -1.0;  // >= 0: calibrate drift to hit it exactly
  std::uint64_t seed = 0;
};

// Loss sequence with the zero function prepended at index 0. `at(t)` for
// t in [1, horizon] is the round-t loss; `at(t-1)` is what an optimistic
// learner may peek at before deciding.
class Stream {
 public:
  Stream(std::vector<OnlineFunction> fs, bool exact_eligible)
      : fs_(std::move(fs)), exact_eligible_(exact_eligible) {
    if (fs_.size() < 2 || !fs_.front().is_zero())
      throw ConfigError("stream must start with the zero round and hold >= 1 loss");
  }

  int horizon() const { return static_cast<int>(fs_.size()) - 1; }
  int dim() const { return fs_.front().dim(); }

  const OnlineFunction& at(int t) const {
    if (t < 0 || t >= static_cast<int>(fs_.size()))
      throw ConfigError("stream round out of range: " + std::to_string(t));
    return fs_[static_cast<std::size_t>(t)];
  }

  // True when ∇f_t - ∇f_{t-1} is constant in x for every t >= 2, so the
  // per-round variation supremum is available in closed form.
  bool exact_variation_eligible() const { return exact_eligible_; }

  bool aggregate_quadratic() const {
    for (int t = 1; t <= horizon(); ++t) {
      auto fam = at(t).family();
      if (fam != OnlineFunction::Family::Quadratic &&
          fam != OnlineFunction::Family::Linear)
        return false;
    }
    return true;
  }

  // Scalar below every f_t on the domain (and below 0 for the zero round).
  double lower_bound(const FeasibleDomain& dom) const {
    double lb = 0.0;
    for (int t = 1; t <= horizon(); ++t)
      lb = std::min(lb, at(t).value_lower_bound(dom));
    return lb;
  }

  void dump(std::ostream& os) const {
    nlohmann::json head;
    head["horizon"] = horizon();
    head["dim"] = dim();
    head["exact_variation_eligible"] = exact_eligible_;
    os << head.dump() << '\n';
    for (int t = 0; t <= horizon(); ++t) {
      nlohmann::json j = at(t).to_json();
      j["t"] = t;
      os << j.dump() << '\n';
    }
  }

  static Stream restore(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("stream dump: missing header");
    nlohmann::json head = nlohmann::json::parse(line);
    int T = head.at("horizon").get<int>();
    bool exact = head.at("exact_variation_eligible").get<bool>();
    std::vector<OnlineFunction> fs;
    fs.reserve(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) {
      if (!std::getline(is, line))
        throw ConfigError("stream dump: truncated at round " + std::to_string(t));
      fs.push_back(OnlineFunction::from_json(nlohmann::json::parse(line)));
    }
    return Stream(std::move(fs), exact);
  }

 private:
  std::vector<OnlineFunction> fs_;
  bool exact_eligible_;
};

namespace detail {

inline Eigen::MatrixXd random_orthogonal(int dim, std::uint64_t seed,
                                         std::uint64_t purpose) {
  Eigen::MatrixXd G(dim, dim);
  for (int r = 0; r < dim; ++r)
    for (int c = 0; c < dim; ++c)
      G(r, c) = rng::gauss(seed, purpose, static_cast<std::uint64_t>(r) * dim + c);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd Q = qr.householderQ();
  return Q;
}

// Per-round linear-term offsets implementing the drift schedule. offset(1)
// is always zero; the returned count is the number of nonzero transitions.
struct DriftPlan {
  std::vector<Vector> offsets;  // index t in [1, T]
  int transitions = 0;
};

inline DriftPlan drift_plan(const StreamConfig& cfg, double step) {
  DriftPlan plan;
  const int T = cfg.horizon;
  plan.offsets.assign(static_cast<std::size_t>(T) + 1, Vector::Zero(cfg.dim));
  switch (cfg.schedule) {
    case StreamConfig::Schedule::Stationary:
      plan.transitions = 0;
      break;
    case StreamConfig::Schedule::LinearDrift: {
      Vector dir = rng::unit_vector(cfg.seed, 3, cfg.dim);
      for (int t = 1; t <= T; ++t)
        plan.offsets[static_cast<std::size_t>(t)] = (t - 1) * step * dir;
      plan.transitions = T - 1;
      break;
    }
    case StreamConfig::Schedule::Piecewise: {
      int k = cfg.segments;
      int len = (T + k - 1) / k;
      Vector off = Vector::Zero(cfg.dim);
      int seg_prev = 0;
      for (int t = 1; t <= T; ++t) {
        int seg = (t - 1) / len;
        if (seg != seg_prev) {
          off += step * rng::unit_vector(cfg.seed, 100 + static_cast<std::uint64_t>(seg),
                                         cfg.dim);
          ++plan.transitions;
          seg_prev = seg;
        }
        plan.offsets[static_cast<std::size_t>(t)] = off;
      }
      break;
    }
    case StreamConfig::Schedule::AdversarialFlip: {
      Vector dir = rng::unit_vector(cfg.seed, 3, cfg.dim);
      int prev_sign = 1;
      for (int t = 1; t <= T; ++t) {
        int sign = (((t - 1) / cfg.period) % 2 == 0) ? 1 : -1;
        plan.offsets[static_cast<std::size_t>(t)] = sign * 0.5 * step * dir;
        if (t >= 2 && sign != prev_sign) ++plan.transitions;
        prev_sign = sign;
      }
      break;
    }
  }
  return plan;
}

}  // namespace detail

inline Stream make_stream(const StreamConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("stream horizon must be >= 1");
  if (cfg.dim < 1) throw ConfigError("stream dimension must be >= 1");
  if (!(cfg.scale > 0.0)) throw ConfigError("stream scale must be positive");
  if (cfg.strongly_convex) {
    if (!(cfg.lambda > 0.0))
      throw ConfigError("strongly convex stream requires positive lambda");
    if (cfg.lambda > cfg.scale)
      throw ConfigError("strongly convex modulus cannot exceed the scale");
    if (cfg.family != StreamConfig::Family::Quadratic)
      throw ConfigError("only the quadratic family supports a strong convexity target");
  }
  if (cfg.schedule == StreamConfig::Schedule::Piecewise && cfg.segments < 2)
    throw ConfigError("piecewise schedule needs >= 2 segments");
  if (cfg.schedule == StreamConfig::Schedule::AdversarialFlip && cfg.period < 1)
    throw ConfigError("adversarial_flip period must be >= 1");
  if (cfg.target_variation >= 0.0 && cfg.family == StreamConfig::Family::Exponential)
    throw ConfigError(
        "exponential streams cannot hit an exact variation target");

  const int T = cfg.horizon;
  const int d = cfg.dim;

  // Probe the transition count first so a variation target can be turned
  // into a per-transition step size: V = transitions * step^2.
  double step = cfg.drift;
  if (cfg.target_variation >= 0.0) {
    int transitions = detail::drift_plan(cfg, 1.0).transitions;
    if (cfg.target_variation > 0.0 && transitions == 0)
      throw ConfigError("schedule admits no transitions; cannot hit variation target");
    step = transitions > 0 ? std::sqrt(cfg.target_variation / transitions) : 0.0;
  }
  detail::DriftPlan plan = detail::drift_plan(cfg, step);

  Vector b_base = cfg.linear_scale * cfg.scale * rng::unit_vector(cfg.seed, 2, d);

  std::vector<OnlineFunction> fs;
  fs.reserve(static_cast<std::size_t>(T) + 1);
  fs.push_back(OnlineFunction::zero(d));

  switch (cfg.family) {
    case StreamConfig::Family::Quadratic: {
      // Fixed spectrum: top eigenvalue = scale, bottom = lambda (or a mild
      // floor for convex streams), rest log-uniform in between.
      double lo = cfg.strongly_convex ? cfg.lambda : 0.05 * cfg.scale;
      Eigen::VectorXd evals(d);
      evals[0] = cfg.scale;
      if (d > 1) evals[d - 1] = lo;
      for (int i = 1; i + 1 < d; ++i) {
        double u = rng::u01(cfg.seed, 1, static_cast<std::uint64_t>(i));
        evals[i] = lo * std::pow(cfg.scale / lo, u);
      }
      Eigen::MatrixXd Q = detail::random_orthogonal(d, cfg.seed, 0);
      Eigen::MatrixXd A = Q * evals.asDiagonal() * Q.transpose();
      A = 0.5 * (A + A.transpose());
      for (int t = 1; t <= T; ++t) {
        OnlineFunction f = OnlineFunction::quadratic(
            A, b_base + plan.offsets[static_cast<std::size_t>(t)]);
        if (cfg.strongly_convex)
          f.set_curvature(Curvature::StronglyConvex, cfg.lambda);
        fs.push_back(std::move(f));
      }
      break;
    }
    case StreamConfig::Family::Exponential: {
      Vector a_base = cfg.scale * rng::unit_vector(cfg.seed, 4, d);
      for (int t = 1; t <= T; ++t)
        fs.push_back(OnlineFunction::exponential(
            a_base + plan.offsets[static_cast<std::size_t>(t)]));
      break;
    }
    case StreamConfig::Family::Quartic: {
      Vector m = 0.2 * rng::unit_vector(cfg.seed, 5, d);
      for (int t = 1; t <= T; ++t)
        fs.push_back(OnlineFunction::quartic(
            cfg.scale, m, b_base + plan.offsets[static_cast<std::size_t>(t)]));
      break;
    }
  }

  bool exact = cfg.family != StreamConfig::Family::Exponential ||
               cfg.schedule == StreamConfig::Schedule::Stationary;
  return Stream(std::move(fs), exact);
}

enum class VariationEstimate { Exact, Sampled };

struct VariationReport {
  double total = 0.0;
  std::vector<double> per_round;  // index t in [0, T]; entries 0 and 1 are 0
  bool exact = false;
};

namespace detail {

// Constant-in-x gradient difference between rounds t and t-1, defined for
// streams that certify exactness.
inline Vector exact_gradient_diff(const Stream& s, int t) {
  const OnlineFunction& f = s.at(t);
  const OnlineFunction& g = s.at(t - 1);
  auto lin = [](const OnlineFunction& h) -> Vector {
    switch (h.family()) {
      case OnlineFunction::Family::Linear:
      case OnlineFunction::Family::Quadratic:
      case OnlineFunction::Family::Quartic:
        return h.linear_term();
      default:
        return Vector::Zero(h.dim());
    }
  };
  if (f.family() == OnlineFunction::Family::Exponential) {
    // Only reachable for stationary exponential streams.
    return Vector::Zero(f.dim());
  }
  return lin(f) - lin(g);
}

}  // namespace detail

inline VariationReport gradient_variation(const Stream& s, VariationEstimate mode,
                                          const FeasibleDomain* domain = nullptr,
                                          int samples = 64,
                                          std::uint64_t seed = 17) {
  const int T = s.horizon();
  VariationReport rep;
  rep.per_round.assign(static_cast<std::size_t>(T) + 1, 0.0);

  if (mode == VariationEstimate::Exact) {
    if (!s.exact_variation_eligible())
      throw CapabilityError(
          "stream does not certify exact gradient variation; use sampled mode");
    for (int t = 2; t <= T; ++t) {
      double v = detail::exact_gradient_diff(s, t).squaredNorm();
      rep.per_round[static_cast<std::size_t>(t)] = v;
      rep.total += v;
    }
    rep.exact = true;
    return rep;
  }

  if (domain == nullptr)
    throw ConfigError("sampled gradient variation needs the domain");
  if (samples < 1) throw ConfigError("sampled gradient variation needs >= 1 point");

  // Fixed probe set: quasi-random interior points plus points pushed to the
  // boundary; the same set is used for every round.
  std::vector<Vector> pts;
  pts.reserve(2 * static_cast<std::size_t>(samples));
  for (int i = 0; i < samples; ++i) {
    pts.push_back(domain->grid_point(static_cast<std::uint64_t>(i)));
    Vector dir = rng::unit_vector(seed, 7, domain->dim(), static_cast<std::uint64_t>(i) * 64);
    pts.push_back(domain->project(10.0 * domain->diameter() * dir));
  }
  for (int t = 2; t <= T; ++t) {
    double worst = 0.0;
    for (const Vector& p : pts) {
      double v = (s.at(t).gradient(p) - s.at(t - 1).gradient(p)).squaredNorm();
      worst = std::max(worst, v);
    }
    rep.per_round[static_cast<std::size_t>(t)] = worst;
    rep.total += worst;
  }
  rep.exact = false;
  return rep;
}

struct HindsightResult {
  Vector x;
  double value = 0.0;
  double residual = 0.0;
  long iterations = 0;
  bool grid_checked = false;
};

// Minimizer of the cumulative loss over the domain. Projected gradient
// descent does the work; in dimension <= 2 an independent refining grid
// search must agree with the value to 1e-6 or the call fails.
inline HindsightResult best_in_hindsight(const Stream& s, const FeasibleDomain& dom,
                                         double tol = 1e-9) {
  if (s.dim() != dom.dim())
    throw ConfigError("best_in_hindsight: stream and domain dimension differ");
  const int T = s.horizon();

  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> grad;
  Vector start = dom.project(Vector::Zero(dom.dim()));

  if (s.aggregate_quadratic()) {
    Eigen::MatrixXd Abar = Eigen::MatrixXd::Zero(s.dim(), s.dim());
    Vector bbar = Vector::Zero(s.dim());
    for (int t = 1; t <= T; ++t) {
      const OnlineFunction& f = s.at(t);
      if (f.family() == OnlineFunction::Family::Quadratic)
        Abar += f.quadratic_matrix();
      bbar += f.linear_term();
    }
    value = [Abar, bbar](const Vector& x) { return 0.5 * x.dot(Abar * x) + bbar.dot(x); };
    grad = [Abar, bbar](const Vector& x) -> Vector { return Abar * x + bbar; };
    // Warm start from the unconstrained stationary point when available.
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Abar);
    if (ldlt.info() == Eigen::Success) {
      Vector cand = dom.project(ldlt.solve(-bbar));
      if (value(cand) < value(start)) start = cand;
    }
  } else {
    value = [&s, T](const Vector& x) {
      double v = 0.0;
      for (int t = 1; t <= T; ++t) v += s.at(t).value(x);
      return v;
    };
    grad = [&s, T](const Vector& x) -> Vector {
      Vector g = Vector::Zero(s.dim());
      for (int t = 1; t <= T; ++t) g += s.at(t).gradient(x);
      return g;
    };
  }

  OptimResult pg = pgd_minimize(value, grad, dom, start, tol);

  HindsightResult out;
  out.x = pg.x;
  out.value = pg.value;
  out.residual = pg.residual;
  out.iterations = pg.iterations;

  if (dom.dim() <= 2) {
    OptimResult gr = grid_minimize(value, dom, 1e-5 * dom.diameter());
    if (std::abs(gr.value - pg.value) > 1e-6)
      throw NumericError("best_in_hindsight: grid cross-check disagrees",
                         std::abs(gr.value - pg.value));
    out.grid_checked = true;
  }
  return out;
}

}  // namespace gvoco
