#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "gvoco/rng.hpp"
#include "gvoco/universal.hpp"
#include "oracles.hpp"

using namespace gvoco;

namespace {

struct UniversalRunResult {
  std::vector<UniversalRound> rounds;
  double lower_bound = 0.0;
};

UniversalRunResult run_universal(const Stream& stream, const FeasibleDomain& dom,
                                 bool keep_history = true) {
  UniversalConfig cfg;
  cfg.horizon = stream.horizon();
  cfg.lower_bound = stream.lower_bound(dom);
  cfg.keep_history = keep_history;
  UniversalLearner learner(dom, cfg);

  UniversalRunResult out;
  out.lower_bound = cfg.lower_bound;
  out.rounds.reserve(static_cast<std::size_t>(stream.horizon()));
  for (int t = 1; t <= stream.horizon(); ++t)
    out.rounds.push_back(learner.round(stream.at(t - 1), stream.at(t)));
  return out;
}

Stream drift_stream(int horizon, int dim, std::uint64_t seed,
                    double variation = 1.0) {
  StreamConfig cfg;
  cfg.family = StreamConfig::Family::Quadratic;
  cfg.schedule = StreamConfig::Schedule::LinearDrift;
  cfg.horizon = horizon;
  cfg.dim = dim;
  cfg.seed = seed;
  cfg.target_variation = variation;
  return make_stream(cfg);
}

}  // namespace

TEST_CASE("expert pool sizes follow the horizon", "[universal]") {
  {
    UniversalConfig cfg;
    cfg.horizon = 8;
    REQUIRE(cfg.experts() == 4);
    auto pool = cfg.modulus_pool();
    REQUIRE(pool.size() == 3);
    CHECK(pool[0] == 1.0 / 8.0);
    CHECK(pool[1] == 2.0 / 8.0);
    CHECK(pool[2] == 4.0 / 8.0);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 1000;
    REQUIRE(cfg.experts() == 11);
    auto pool = cfg.modulus_pool();
    REQUIRE(pool.size() == 10);
    for (std::size_t i = 1; i < pool.size(); ++i) CHECK(pool[i - 1] < pool[i]);
    CHECK(pool.front() == 1.0 / 1000.0);
    CHECK(pool.back() == 512.0 / 1000.0);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 2;
    REQUIRE(cfg.experts() == 2);
    auto pool = cfg.modulus_pool();
    REQUIRE(pool.size() == 1);
    CHECK(pool[0] == 0.5);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 4096;
    REQUIRE(cfg.experts() == 13);
    auto pool = cfg.modulus_pool();
    REQUIRE(pool.size() == 12);
    CHECK(pool[10] == 0.25);
  }
}

TEST_CASE("universal config rejects bad settings", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  {
    UniversalConfig cfg;
    cfg.horizon = 1;
    REQUIRE_THROWS_AS(UniversalLearner(dom, cfg), ConfigError);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 0;
    REQUIRE_THROWS_AS(UniversalLearner(dom, cfg), ConfigError);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 8;
    cfg.meta_scale0 = 0.0;
    REQUIRE_THROWS_AS(UniversalLearner(dom, cfg), ConfigError);
  }
  {
    UniversalConfig cfg;
    cfg.horizon = 8;
    cfg.lower_bound = 0.5;
    REQUIRE_THROWS_AS(UniversalLearner(dom, cfg), ConfigError);
  }
}

TEST_CASE("expert lineup is convex first then ascending moduli", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  UniversalConfig cfg;
  cfg.horizon = 16;
  UniversalLearner learner(dom, cfg);
  REQUIRE(learner.experts() == 5);
  CHECK(learner.base(0).mode() == LearnerMode::Convex);
  auto pool = cfg.modulus_pool();
  for (int i = 1; i < learner.experts(); ++i) {
    CHECK(learner.base(i).mode() == LearnerMode::StronglyConvex);
    CHECK(learner.base(i).options().lambda ==
          pool[static_cast<std::size_t>(i) - 1]);
  }
}

TEST_CASE("first round is uniform with a trivial fixpoint", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(8, 2, 11);
  UniversalConfig cfg;
  cfg.horizon = s.horizon();
  cfg.lower_bound = s.lower_bound(dom);
  UniversalLearner learner(dom, cfg);

  learner.predict(s.at(0));
  UniversalRound r1 = learner.observe(s.at(1));
  REQUIRE(r1.p.size() == cfg.experts());
  for (int i = 0; i < r1.p.size(); ++i)
    CHECK(std::abs(r1.p[i] - 1.0 / cfg.experts()) < 1e-14);
  CHECK(r1.alpha == 0.0);
  CHECK(r1.bisect_iters == 0);
  CHECK(r1.optimism.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("decision equals the weighted expert mix", "[universal]") {
  // Hand case for the mixing rule itself.
  {
    Eigen::VectorXd p(2);
    p << 0.5, 0.5;
    Vector x1(2), x2(2);
    x1 << 1.0, 0.0;
    x2 << 0.0, 1.0;
    Vector mix = p[0] * x1 + p[1] * x2;
    CHECK(mix[0] == 0.5);
    CHECK(mix[1] == 0.5);
  }

  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(40, 2, 3);
  auto run = run_universal(s, dom);
  double spread = 0.0;
  for (const auto& r : run.rounds) {
    REQUIRE(static_cast<int>(r.expert_x.size()) == r.p.size());
    Vector mix = Vector::Zero(dom.dim());
    for (int i = 0; i < r.p.size(); ++i)
      mix += r.p[i] * r.expert_x[static_cast<std::size_t>(i)];
    CHECK((mix - r.x).norm() <= 1e-13 * (1.0 + r.x.norm()));
    CHECK(dom.contains(r.x, 1e-12));
    for (const auto& xe : r.expert_x)
      spread = std::max(spread, (xe - r.expert_x[0]).norm());
  }
  // The pool must actually disagree somewhere, otherwise the ensemble is moot.
  CHECK(spread > 1e-6);
}

TEST_CASE("regret feeds are heterogeneous across experts", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(40, 2, 5);
  auto run = run_universal(s, dom);

  double value_vs_linear_gap = 0.0;
  for (const auto& r : run.rounds) {
    const OnlineFunction& f = s.at(r.t);
    Vector g = f.gradient(r.x);
    const double r0 = f.value(r.x) - f.value(r.expert_x[0]);
    CHECK(std::abs(r.regret_feed[0] - r0) <= 1e-12 * (1.0 + std::abs(r0)));
    for (int i = 1; i < r.p.size(); ++i) {
      const double ri = g.dot(r.x - r.expert_x[static_cast<std::size_t>(i)]);
      CHECK(std::abs(r.regret_feed[i] - ri) <= 1e-12 * (1.0 + std::abs(ri)));
    }
    const double lin0 = g.dot(r.x - r.expert_x[0]);
    CHECK(r.regret_feed[0] <= lin0 + 1e-10);  // convexity
    value_vs_linear_gap = std::max(value_vs_linear_gap, lin0 - r.regret_feed[0]);
  }
  // The first expert's feed must genuinely be a value gap, not a gradient form.
  CHECK(value_vs_linear_gap > 1e-10);
}

TEST_CASE("optimism matches the previous loss at the played mix", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(60, 2, 9);
  auto run = run_universal(s, dom);

  const int horizon = s.horizon();
  for (const auto& r : run.rounds) {
    const OnlineFunction& f_prev = s.at(r.t - 1);
    // Stored hints are alpha - f_prev(expert point), exactly.
    for (int i = 0; i < r.p.size(); ++i) {
      const double hi = f_prev.value(r.expert_x[static_cast<std::size_t>(i)]);
      CHECK(std::abs(r.optimism[i] - (r.alpha - hi)) <=
            1e-12 * (1.0 + std::abs(r.alpha) + std::abs(hi)));
      CHECK(std::abs(r.prev_values[i] - hi) <= 1e-12 * (1.0 + std::abs(hi)));
    }
    // And alpha itself sits within bisection tolerance of f_prev at the mix.
    const double span = r.prev_values.maxCoeff() - run.lower_bound;
    const double tol = std::max(span, 1.0) / horizon;
    double grad_scale = f_prev.gradient(r.x).norm();
    for (const auto& xe : r.expert_x)
      grad_scale = std::max(grad_scale, f_prev.gradient(xe).norm());
    const double lip_factor = 1.0 + 4.0 * dom.max_norm() * grad_scale;
    CHECK(std::abs(r.alpha - f_prev.value(r.x)) <= tol * lip_factor + 1e-12);
  }
}

TEST_CASE("ensemble regret splits into meta plus base parts", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(60, 2, 13);
  auto run = run_universal(s, dom);

  const int n = run.rounds.front().p.size();
  double total = 0.0;
  std::vector<double> expert_total(static_cast<std::size_t>(n), 0.0);
  std::vector<double> feed_total(static_cast<std::size_t>(n), 0.0);
  for (const auto& r : run.rounds) {
    const OnlineFunction& f = s.at(r.t);
    total += f.value(r.x);
    for (int i = 0; i < n; ++i) {
      expert_total[static_cast<std::size_t>(i)] +=
          f.value(r.expert_x[static_cast<std::size_t>(i)]);
      feed_total[static_cast<std::size_t>(i)] += r.regret_feed[i];
    }
  }

  // Value-feed expert: the telescoped feed is exactly the loss difference.
  CHECK(std::abs(feed_total[0] - (total - expert_total[0])) <=
        1e-9 * (1.0 + std::abs(total)));
  // Linearized feeds dominate the loss difference, so the meta bound transfers.
  for (int i = 1; i < n; ++i)
    CHECK(feed_total[static_cast<std::size_t>(i)] >=
          total - expert_total[static_cast<std::size_t>(i)] - 1e-9);
}

TEST_CASE("meta exposure stays nonpositive at an audited round", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(500, 2, 17, 4.0);
  UniversalConfig ucfg;
  ucfg.horizon = s.horizon();
  ucfg.lower_bound = s.lower_bound(dom);
  auto run = run_universal(s, dom, false);
  REQUIRE(run.rounds.size() == 500);

  auto audit = [&](const UniversalRound& r, double scale_prev) {
    Eigen::VectorXd dev = r.regret_feed - r.optimism;
    const double scale =
        std::max(scale_prev, dev.cwiseAbs().maxCoeff());
    REQUIRE(std::abs(scale - r.meta_scale) <= 1e-12 * (1.0 + scale));
    Eigen::VectorXd clipped = r.optimism + (scale_prev / scale) * dev;
    return r.p.dot(clipped);
  };

  // Random spot check first, then the full pass.
  const int pick =
      1 + static_cast<int>(rng::uniform(99, 0, 0, 0.0, 500.0 - 1e-9));
  double scale_prev = ucfg.meta_scale0;
  for (const auto& r : run.rounds) {
    const double exposure = audit(r, scale_prev);
    if (r.t == pick) {
      INFO("audited round " << pick);
      CHECK(exposure <= 1e-9);
    }
    CHECK(exposure <= 1e-9);
    scale_prev = r.meta_scale;
  }
}

TEST_CASE("bisection stays within its iteration budget", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(120, 2, 21);
  auto run = run_universal(s, dom, false);
  for (const auto& r : run.rounds) {
    const double span = r.prev_values.maxCoeff() - run.lower_bound;
    if (span <= 0.0) {
      CHECK(r.bisect_iters == 0);
      continue;
    }
    const int cap = static_cast<int>(std::ceil(
                        std::log2(std::max(span * s.horizon(), 2.0)))) +
                    2;
    CHECK(r.bisect_iters <= cap);
  }
}

TEST_CASE("universal protocol misuse is rejected", "[universal]") {
  auto dom = FeasibleDomain::ball(2, 1.0);
  Stream s = drift_stream(8, 2, 1);
  UniversalConfig cfg;
  cfg.horizon = s.horizon();
  cfg.lower_bound = s.lower_bound(dom);
  UniversalLearner learner(dom, cfg);
  REQUIRE_THROWS_AS(learner.observe(s.at(1)), std::logic_error);
  learner.predict(s.at(0));
  REQUIRE_THROWS_AS(learner.predict(s.at(1)), std::logic_error);
}
