#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gvoco/analysis.hpp"
#include "gvoco/base_learner.hpp"
#include "gvoco/functions.hpp"
#include "gvoco/games.hpp"
#include "gvoco/geometry.hpp"
#include "gvoco/meta.hpp"
#include "gvoco/rng.hpp"
#include "gvoco/sea.hpp"
#include "gvoco/universal.hpp"
#include "oracles.hpp"

using namespace gvoco;
using Eigen::VectorXd;

// Acceptance gate: every case prints exactly one [PASS]/[FAIL] line with its
// pinned thresholds baked into the checks. Thresholds are frozen; experiment
// parameters were calibrated once and are fixed below.
namespace {

// Direct multiplicative replica of the combiner: linear-domain weights,
// explicit powers. Only safe on short bounded runs; used as an oracle.
struct DirectProd {
  VectorXd w, eta, sq;
  double B;

  explicit DirectProd(int n, double b0)
      : w(VectorXd::Ones(n)),
        eta(VectorXd::Constant(n, 1.0 / std::sqrt(1.0 + 4.0 * b0 * b0))),
        sq(VectorXd::Zero(n)), B(b0) {}

  VectorXd decide(const VectorXd& m) const {
    VectorXd tilted(w.size());
    for (int i = 0; i < w.size(); ++i)
      tilted[i] = eta[i] * w[i] * std::exp(eta[i] * m[i]);
    return tilted / tilted.sum();
  }

  void observe(const VectorXd& r, const VectorXd& m) {
    VectorXd dev = r - m;
    double b_prev = B;
    B = std::max(B, dev.lpNorm<Eigen::Infinity>());
    VectorXd rbar = m + (b_prev / B) * dev;
    for (int i = 0; i < w.size(); ++i) {
      double phi = (rbar[i] - m[i]) * (rbar[i] - m[i]);
      sq[i] += phi;
      double eta_new = 1.0 / std::sqrt(1.0 + sq[i] + 4.0 * B * B);
      w[i] = std::pow(w[i] * std::exp(eta[i] * rbar[i] - eta[i] * eta[i] * phi),
                      eta_new / eta[i]);
      eta[i] = eta_new;
    }
  }
};

bool conclude(const char* id, bool ok, const std::string& note) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ' ' << note << std::endl;
  return ok;
}

// Wraps a criterion body so invariant throws still produce the verdict line.
template <typename Body>
void criterion(const char* id, Body body) {
  bool ok = false;
  std::ostringstream note;
  try {
    ok = body(note);
  } catch (const std::exception& e) {
    ok = false;
    note << " exception: " << e.what();
  }
  REQUIRE(conclude(id, ok, note.str()));
}

StreamConfig flip_stream(int horizon, int dim, double variation,
                         std::uint64_t seed) {
  StreamConfig sc;
  sc.family = StreamConfig::Family::Quadratic;
  sc.schedule = StreamConfig::Schedule::AdversarialFlip;
  sc.horizon = horizon;
  sc.dim = dim;
  sc.target_variation = variation;
  sc.seed = seed;
  return sc;
}

struct OcoRun {
  double regret = 0.0;
  double lhat_max = 0.0;
  double ghat_max = 0.0;
  std::vector<double> cum_loss;
};

OcoRun drive(const Stream& s, const FeasibleDomain& dom, LearnerMode mode,
             double lambda = 0.0) {
  LearnerOptions opt;
  opt.mode = mode;
  opt.lambda = lambda;
  OmdLearner<> learner(dom, opt);
  OcoRun out;
  double cum = 0.0;
  for (int t = 1; t <= s.horizon(); ++t) {
    const Vector& x = learner.predict(s.at(t - 1));
    cum += s.at(t).value(x);
    out.cum_loss.push_back(cum);
    learner.update(s.at(t));
  }
  HindsightResult best = best_in_hindsight(s, dom);
  out.regret = cum - best.value;
  out.lhat_max = learner.lhat_max();
  out.ghat_max = learner.ghat_max();
  return out;
}

}  // namespace

TEST_CASE("clipped-step learner meets its explicit variation bound",
          "[acceptance][A1]") {
  criterion("A1", [](std::ostringstream& note) {
    const auto start = std::chrono::steady_clock::now();
    auto dom = FeasibleDomain::ball(5, 1.0);
    const double D = dom.diameter();
    bool all_hold = true;
    double worst_ratio = -1e300;
    int positive = 0;
    for (std::uint64_t seed = 101; seed <= 120; ++seed) {
      StreamConfig sc;
      sc.family = StreamConfig::Family::Quadratic;
      sc.schedule = StreamConfig::Schedule::LinearDrift;
      sc.horizon = 5000;
      sc.dim = 5;
      sc.target_variation = 64.0;
      sc.seed = seed;
      Stream s = make_stream(sc);
      OcoRun run = drive(s, dom, LearnerMode::ConvexClipped);
      VariationReport vr = gradient_variation(s, VariationEstimate::Exact);
      if (!vr.exact) return false;
      const double rhs = 2.5 * D * std::sqrt(2.0 * vr.total) +
                         4.0 * run.lhat_max * D * D + 5.0 * run.ghat_max * D;
      all_hold = all_hold && run.regret <= rhs + 1e-6 * std::abs(rhs);
      worst_ratio = std::max(worst_ratio, run.regret / rhs);
      if (run.regret > 0.0) ++positive;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    note << "explicit clipped bound on 20 drift streams: worst regret/bound "
         << worst_ratio << ", " << positive << " positive-regret runs, "
         << secs << "s";
    return all_hold && secs < 10.0;
  });
}

TEST_CASE("regret plateaus on stationary streams", "[acceptance][A2]") {
  criterion("A2", [](std::ostringstream& note) {
    auto dom = FeasibleDomain::ball(4, 1.0);
    const int T = 5000;
    bool all = true;
    double worst_delta = 0.0;
    for (std::uint64_t seed = 201; seed <= 205; ++seed) {
      StreamConfig sc;
      sc.family = StreamConfig::Family::Quadratic;
      sc.schedule = StreamConfig::Schedule::Stationary;
      sc.horizon = T;
      sc.dim = 4;
      sc.seed = seed;
      Stream s = make_stream(sc);
      OcoRun run = drive(s, dom, LearnerMode::Convex);
      HindsightResult best = best_in_hindsight(s, dom);
      const double per_round_best = best.value / T;
      const double reg_half =
          run.cum_loss[T / 2 - 1] - per_round_best * (T / 2);
      const double reg_full = run.cum_loss[T - 1] - per_round_best * T;
      const double delta = reg_full - reg_half;
      worst_delta = std::max(worst_delta, delta);
      all = all && delta <= 1e-3 * reg_half + 1e-6;
    }
    note << "five stationary runs at T=5000: worst late-half regret increase "
         << worst_delta;
    return all;
  });
}

TEST_CASE("regret grows like the square root of the variation level",
          "[acceptance][C2]") {
  criterion("C2", [](std::ostringstream& note) {
    auto dom = FeasibleDomain::ball(3, 1.0);
    const double levels[] = {1.0, 4.0, 16.0, 64.0, 256.0};
    std::vector<double> lx, ly;
    for (double v : levels)
      for (std::uint64_t seed = 31; seed <= 40; ++seed) {
        Stream s = make_stream(flip_stream(4000, 3, v, seed));
        OcoRun run = drive(s, dom, LearnerMode::Convex);
        if (!(run.regret > 0.0)) {
          note << "nonpositive regret at level " << v << " seed " << seed;
          return false;
        }
        lx.push_back(std::log(v));
        ly.push_back(std::log(run.regret));
      }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sx += lx[i];
      sy += ly[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    note << "log-log slope over 5 levels x 10 seeds: " << slope
         << " (window [0.30, 0.70])";
    return slope >= 0.30 && slope <= 0.70;
  });
}

TEST_CASE("strongly convex regret grows only logarithmically in the variation",
          "[acceptance][C3]") {
  criterion("C3", [](std::ostringstream& note) {
    auto dom = FeasibleDomain::ball(3, 1.0);
    const double lambda = 1.0;
    const double levels[] = {1.0, 4.0, 16.0, 64.0, 256.0};
    double mean_low = 0.0, mean_high = 0.0, ghat = 0.0;
    for (double v : levels) {
      double mean = 0.0;
      for (std::uint64_t seed = 31; seed <= 40; ++seed) {
        StreamConfig sc = flip_stream(4000, 3, v, seed);
        sc.strongly_convex = true;
        sc.lambda = lambda;
        Stream s = make_stream(sc);
        OcoRun run = drive(s, dom, LearnerMode::StronglyConvex, lambda);
        mean += run.regret / 10.0;
        ghat = std::max(ghat, run.ghat_max);
      }
      if (v == 1.0) mean_low = mean;
      if (v == 256.0) mean_high = mean;
    }
    const double growth = mean_high - mean_low;
    const double budget = 3.0 * (ghat * ghat / lambda) * std::log(256.0);
    note << "mean regret rise over a 256x variation range: " << growth
         << " within logarithmic budget " << budget;
    return growth <= budget;
  });
}

TEST_CASE("expert combiner tracks the best expert through a scale jump",
          "[acceptance][M1]") {
  criterion("M1", [](std::ostringstream& note) {
    const int n = 16;
    const int T = 10000;
    bool all = true;
    double worst_ratio = -1e300;
    for (std::uint64_t seed = 301; seed <= 320; ++seed) {
      ScaleAdaptiveProd meta(n, 1.0, /*check_invariants=*/true);
      VectorXd prev = VectorXd::Zero(n);
      VectorXd totals = VectorXd::Zero(n);
      VectorXd dev_sq = VectorXd::Zero(n);
      for (int t = 1; t <= T; ++t) {
        const VectorXd h = prev;
        auto mixer = [&](const VectorXd& p) { return p.dot(h); };
        const double span = h.maxCoeff() - h.minCoeff();
        const double tol = std::max(span, 1.0) / T;
        FixpointResult fix =
            solve_optimism_fixpoint(meta, h, mixer, h.minCoeff(), tol);
        if (span > 0.0) {
          const int cap = static_cast<int>(std::ceil(
                              std::log2(std::max(span * T, 2.0)))) + 2;
          if (fix.iterations > cap) {
            note << "fixpoint budget exceeded at round " << t;
            return false;
          }
        }
        const VectorXd& p = meta.decide(fix.optimism);
        const double scale = t > T / 2 ? 100.0 : 1.0;
        VectorXd l(n);
        for (int i = 0; i < n; ++i)
          l[i] = scale * rng::uniform(seed, 1000 + static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(t), -1.0, 1.0);
        const double loss = p.dot(l);
        const VectorXd r = VectorXd::Constant(n, loss) - l;
        meta.observe(r);
        if (p.dot(meta.last_clipped()) > 1e-9) {
          note << "prod condition violated at round " << t;
          return false;
        }
        totals += r;
        dev_sq += (r - fix.optimism).cwiseAbs2();
        prev = l;
      }
      Eigen::Index star = 0;
      const double regret = totals.maxCoeff(&star);
      const double b_final = meta.scale();
      const double rhs = 20.0 * std::sqrt(dev_sq[star]) *
                             (std::log(static_cast<double>(n)) +
                              std::log(b_final + std::log(static_cast<double>(T)))) +
                         b_final;
      all = all && regret <= rhs;
      worst_ratio = std::max(worst_ratio, regret / rhs);
    }
    note << "best-expert regret with a 100x loss-scale jump, 20 seeds: "
         << "worst regret/bound " << worst_ratio
         << ", invariants clean every round";
    return all;
  });
}

TEST_CASE("curvature-blind learner stays within reach of the matched base",
          "[acceptance][U1]") {
  criterion("U1", [](std::ostringstream& note) {
    auto dom = FeasibleDomain::ball(3, 1.0);
    const int T = 4096;
    bool all = true;
    double worst_gap = -1e300;
    for (int variant = 0; variant < 2; ++variant) {
      const bool strongly = variant == 1;
      for (std::uint64_t seed = 21; seed <= 30; ++seed) {
        StreamConfig sc = flip_stream(T, 3, 16.0, seed);
        sc.strongly_convex = strongly;
        sc.lambda = strongly ? 0.25 : 0.0;
        Stream s = make_stream(sc);

        UniversalConfig ucfg;
        ucfg.horizon = T;
        ucfg.lower_bound = s.lower_bound(dom);
        UniversalLearner uni(dom, ucfg);
        double cum = 0.0;
        for (int t = 1; t <= T; ++t) {
          const Vector& x = uni.predict(s.at(t - 1));
          cum += s.at(t).value(x);
          UniversalRound round = uni.observe(s.at(t));
          const double span = round.prev_values.maxCoeff() - ucfg.lower_bound;
          if (span > 0.0) {
            const int cap = static_cast<int>(std::ceil(
                                std::log2(std::max(span * T, 2.0)))) + 2;
            if (round.bisect_iters > cap) {
              note << "bisection budget exceeded at round " << t;
              return false;
            }
          }
        }
        HindsightResult best = best_in_hindsight(s, dom);
        const double reg_uni = cum - best.value;
        OcoRun base =
            drive(s, dom, strongly ? LearnerMode::StronglyConvex : LearnerMode::Convex,
                  strongly ? 0.25 : 0.0);
        const double b_final = uni.meta().scale();
        const double overhead =
            std::pow(std::log(b_final + std::log(static_cast<double>(T))), 2);
        const double rhs = 5.0 * base.regret + 50.0 * overhead;
        all = all && reg_uni <= rhs;
        worst_gap = std::max(worst_gap, reg_uni - rhs);
      }
    }
    note << "universal vs matched base on convex and strongly convex streams, "
         << "10 seeds each: worst lhs-rhs " << worst_gap
         << ", bisection within budget";
    return all;
  });
}

TEST_CASE("averaged game play closes the duality gap at the averaging rate",
          "[acceptance][G1]") {
  criterion("G1", [](std::ostringstream& note) {
    struct GameCase {
      SaddleProblem problem;
      const char* label;
    };
    Eigen::MatrixXd A1x1(1, 1);
    A1x1 << 0.034;
    Vector b1(1), c1(1);
    b1 << 0.034 * 0.85;
    c1 << -0.034 * 0.9;

    Eigen::MatrixXd base(3, 3);
    base << 1.0, -0.5, 0.25, 0.5, 2.0, -1.0, -0.25, 1.0, 1.5;
    Eigen::MatrixXd A3 = 0.014 * base;
    Vector xstar(3), ystar(3);
    xstar << 0.85, -0.8, 0.75;
    ystar << -0.8, 0.85, -0.7;
    Vector b3 = -(A3 * ystar);
    Vector c3 = -(A3.transpose() * xstar);

    std::vector<GameCase> games;
    games.push_back({SaddleProblem::bilinear(A1x1, b1, c1,
                                             FeasibleDomain::box(1, 1.0),
                                             FeasibleDomain::box(1, 1.0)),
                     "1x1"});
    games.push_back({SaddleProblem::bilinear(A3, b3, c3,
                                             FeasibleDomain::box(3, 1.0),
                                             FeasibleDomain::box(3, 1.0)),
                     "3x3"});

    bool all = true;
    for (const GameCase& g : games) {
      SaddleSolver solver(g.problem);
      solver.run(100);
      const double gap2 = solver.average_gap();
      solver.run(900);
      const double gap3 = solver.average_gap();
      solver.run(9000);
      const double gap4 = solver.average_gap();
      const bool steps = 1e3 * gap3 <= 1.25 * (1e2 * gap2) &&
                         1e4 * gap4 <= 1.25 * (1e3 * gap3);
      const bool decades = gap4 <= 1e-2 * gap2;
      all = all && steps && decades;
      note << g.label << " T*gap {" << 1e2 * gap2 << ", " << 1e3 * gap3 << ", "
           << 1e4 * gap4 << "} two-decade ratio " << gap4 / gap2 << "; ";
    }
    note << "(step factor <= 1.25, ratio <= 1e-2)";
    return all;
  });
}

TEST_CASE("stochastic regret scales with the noise level",
          "[acceptance][S1]") {
  criterion("S1", [](std::ostringstream& note) {
    auto dom = FeasibleDomain::ball(2, 1.0);
    const double levels[] = {0.1, 0.4, 1.6};
    double means[3] = {0, 0, 0};
    bool variance_ok = true;
    for (int k = 0; k < 3; ++k) {
      SeaConfig scfg;
      scfg.family = SeaConfig::Family::Linear;
      scfg.horizon = 400;
      scfg.dim = 2;
      scfg.noise = std::sqrt(levels[k]);
      scfg.mean_drift = 0.0;
      scfg.base_scale = 0.1;
      scfg.seed = 11;
      SeaEnvironment env(scfg, dom);
      SeaRunConfig run;
      run.repetitions = 200;
      run.learner = SeaLearner::Convex;
      SeaReport rep = sea_run(env, run);
      means[k] = rep.mean_regret;
      const double analytic = env.analytic_stochastic_variance();
      variance_ok = variance_ok &&
                    std::abs(rep.sigma_sq - analytic) <= 0.05 * analytic &&
                    rep.shift_sq == 0.0;
    }
    const double r1 = means[1] / means[0];
    const double r2 = means[2] / means[1];
    note << "mean regret over 200 repetitions at variance levels "
         << "{0.1, 0.4, 1.6}: ratios " << r1 << ", " << r2
         << " (window [1.4, 3.2]); analytic variance within 5% of sampled";
    const bool ratios_ok =
        r1 >= 1.4 && r1 <= 3.2 && r2 >= 1.4 && r2 <= 3.2;
    return ratios_ok && variance_ok;
  });
}

TEST_CASE("invariant and lemma suites hold on random instances",
          "[acceptance][P1]") {
  criterion("P1", [](std::ostringstream& note) {
    int violations = 0;

    // Weighted nonincreasing sums and self-confident steps on fresh draws.
    for (std::uint64_t trial = 0; trial < 10000; ++trial) {
      const int T = 1 + static_cast<int>(rng::uniform(71, trial, 0, 0.0, 60.0));
      const double a0 = rng::uniform(71, trial, 1, 0.01, 2.0);
      const double B = rng::uniform(71, trial, 2, 0.1, 3.0);
      double prefix = a0, lhs_inv = 0.0, lhs_sqrt = 0.0, total = a0;
      for (int t = 0; t < T; ++t) {
        const double at =
            rng::uniform(71, trial, 10 + static_cast<std::uint64_t>(t), 0.0, B);
        lhs_inv += at / prefix;
        lhs_sqrt += at / std::sqrt(prefix);
        prefix += at;
        total += at;
      }
      const double rhs_inv = B / a0 + std::log(total / a0);
      const double rhs_sqrt =
          B / std::sqrt(a0) + 2.0 * (std::sqrt(total) - std::sqrt(a0));
      if (lhs_inv > rhs_inv + 1e-9 * (1.0 + std::abs(rhs_inv))) ++violations;
      if (lhs_sqrt > rhs_sqrt + 1e-9 * (1.0 + std::abs(rhs_sqrt))) ++violations;

      double inc_prefix = 0.0, inc_lhs = 0.0, inc_total = 0.0;
      for (int t = 0; t < T; ++t) {
        double at =
            rng::uniform(73, trial, 10 + static_cast<std::uint64_t>(t), 0.0, 5.0);
        if (t == 0) at = std::max(at, 1e-6);
        inc_prefix += at;
        inc_lhs += at / std::sqrt(inc_prefix);
        inc_total += at;
      }
      if (inc_lhs > 2.0 * std::sqrt(inc_total) +
                        1e-9 * (1.0 + 2.0 * std::sqrt(inc_total)))
        ++violations;
    }

    // Segment gradients dominated by endpoint directional derivatives.
    auto seg_dom = FeasibleDomain::ball(2, 1.0);
    for (std::uint64_t trial = 0; trial < 1000; ++trial) {
      const double scale = rng::uniform(77, trial, 5, 0.5, 1.5);
      Vector b(2);
      b << 0.3 * scale, -0.2 * scale;
      const OnlineFunction f = [&] {
        if (trial % 3 == 0) {
          Eigen::MatrixXd A(2, 2);
          A << 2.0, 0.4, 0.4, 1.0;
          return OnlineFunction::quadratic(scale * A, b);
        }
        if (trial % 3 == 1) {
          Vector a(2);
          a << 0.8 * scale, -0.5 * scale;
          return OnlineFunction::exponential(a);
        }
        Vector m(2);
        m << 0.2, -0.1;
        return OnlineFunction::quartic(1.2 * scale, m, b);
      }();
      Vector x = seg_dom.grid_point(2 * trial);
      Vector y = seg_dom.grid_point(2 * trial + 1);
      const double lam = rng::uniform(77, trial, 0, 0.0, 1.0);
      Vector mid = lam * x + (1.0 - lam) * y;
      const double inner = std::abs(f.gradient(mid).dot(x - y));
      const double cap = std::max(std::abs(f.gradient(x).dot(x - y)),
                                  std::abs(f.gradient(y).dot(x - y)));
      if (inner > cap + 1e-9 * (1.0 + cap)) ++violations;
    }

    // Projection idempotence and nonexpansiveness.
    auto pdom_ball = FeasibleDomain::ball(3, 1.1);
    auto pdom_box = FeasibleDomain::box(3, 0.8);
    for (std::uint64_t k = 0; k < 2000; ++k) {
      for (const FeasibleDomain* dom : {&pdom_ball, &pdom_box}) {
        Vector x = 3.0 * rng::gauss_vector(79, k, 3);
        Vector y = 3.0 * rng::gauss_vector(79, k + 50000, 3);
        Vector px = dom->project(x), py = dom->project(y);
        if ((dom->project(px) - px).norm() > 1e-12) ++violations;
        if ((px - py).norm() > (x - y).norm() * (1.0 + 1e-12) + 1e-15)
          ++violations;
      }
    }

    // Curvature links: positive, nondecreasing, and locally honest.
    std::vector<OnlineFunction> family;
    {
      Eigen::MatrixXd A(3, 3);
      A << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 1.5;
      Vector b(3);
      b << 0.2, -0.1, 0.3;
      family.push_back(OnlineFunction::quadratic(A, b));
      Vector a(3);
      a << 0.7, -0.4, 0.2;
      family.push_back(OnlineFunction::exponential(a));
      Vector m(3);
      m << 0.1, 0.2, -0.3;
      family.push_back(OnlineFunction::quartic(0.9, m, b));
    }
    auto link_dom = FeasibleDomain::ball(3, 1.0);
    for (std::size_t i = 0; i < family.size(); ++i) {
      const OnlineFunction& f = family[i];
      for (std::uint64_t k = 0; k < 500; ++k) {
        const double u1 = rng::uniform(83, 10 * i + 1, k, 0.0, 5.0);
        const double u2 = u1 + rng::uniform(83, 10 * i + 2, k, 0.0, 5.0);
        if (!(f.link(0.0) > 0.0)) ++violations;
        if (f.link(u1) > f.link(u2) * (1.0 + 1e-12)) ++violations;
      }
      if (!oracle::certify_link(f, link_dom, 200, 87 + i)) ++violations;
    }

    // Learner-side invariants on an invariant-checked history.
    {
      Stream s = make_stream(flip_stream(600, 3, 8.0, 91));
      auto dom = FeasibleDomain::ball(3, 1.0);
      for (LearnerMode mode :
           {LearnerMode::Convex, LearnerMode::ConvexClipped}) {
        LearnerOptions opt;
        opt.mode = mode;
        opt.keep_history = true;
        OmdLearner<> learner(dom, opt);
        double prev_eta = 1e300;
        for (int t = 1; t <= s.horizon(); ++t) {
          learner.predict(s.at(t - 1));
          learner.update(s.at(t));
          if (learner.last().eta > prev_eta * (1.0 + 1e-12)) ++violations;
          prev_eta = learner.last().eta;
        }
        const auto& hist = learner.history();
        for (std::size_t t = 0; t + 1 < hist.size(); ++t) {
          const auto& row = hist[t];
          if ((row.x - row.xhat).norm() >
              row.eta * row.optimism.norm() + 1e-12)
            ++violations;
          if ((row.xhat_next - row.xhat).norm() >
              row.eta * row.update_grad.norm() + 1e-12)
            ++violations;
        }
        HindsightResult best = best_in_hindsight(s, dom);
        if (!audit_decomposition(hist, best.x).ok) ++violations;
      }
      {
        LearnerOptions opt;
        opt.mode = LearnerMode::StronglyConvex;
        opt.lambda = 0.5;
        StreamConfig sc = flip_stream(600, 3, 8.0, 91);
        sc.strongly_convex = true;
        sc.lambda = 0.5;
        Stream scs = make_stream(sc);
        OmdLearner<> learner(dom, opt);
        double prev_eta = 1e300;
        for (int t = 1; t <= scs.horizon(); ++t) {
          learner.predict(scs.at(t - 1));
          learner.update(scs.at(t));
          if (learner.last().eta > prev_eta * (1.0 + 1e-12)) ++violations;
          prev_eta = learner.last().eta;
        }
      }
    }

    // Combiner scale stays monotone under rough feeds.
    {
      ScaleAdaptiveProd meta(8, 1.0, /*check_invariants=*/true);
      double prev_scale = 0.0;
      for (int t = 1; t <= 2000; ++t) {
        VectorXd m(8), r(8);
        const double burst = t % 97 == 0 ? 50.0 : 1.0;
        for (int i = 0; i < 8; ++i) {
          m[i] = rng::uniform(93, static_cast<std::uint64_t>(i),
                              static_cast<std::uint64_t>(t), -1.0, 1.0);
          r[i] = burst * rng::uniform(93, 100 + static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(t), -1.0, 1.0);
        }
        meta.decide(m);
        meta.observe(r);
        if (meta.scale() < prev_scale) ++violations;
        prev_scale = meta.scale();
      }
    }

    note << "10000 weighted-sum sequences, 1000 segment instances, and the "
         << "projection/link/step/scale invariant battery: " << violations
         << " violations";
    return violations == 0;
  });
}

TEST_CASE("solvers agree with brute-force and linear-domain oracles",
          "[acceptance][O1]") {
  criterion("O1", [](std::ostringstream& note) {
    double worst_value_gap = 0.0;
    for (std::uint64_t k = 0; k < 50; ++k) {
      const int dim = 1 + static_cast<int>(k % 2);
      const double extent = rng::uniform(95, k, 0, 0.6, 1.4);
      FeasibleDomain dom = (k % 4 < 2) ? FeasibleDomain::ball(dim, extent)
                                       : FeasibleDomain::box(dim, extent);
      StreamConfig sc;
      sc.family = (k % 3 == 0) ? StreamConfig::Family::Exponential
                               : StreamConfig::Family::Quadratic;
      sc.schedule = (k % 2 == 0) ? StreamConfig::Schedule::LinearDrift
                                 : StreamConfig::Schedule::Stationary;
      sc.horizon = 6;
      sc.dim = dim;
      sc.seed = 500 + k;
      if (k % 5 == 0 && sc.family == StreamConfig::Family::Quadratic) {
        sc.strongly_convex = true;
        sc.lambda = 0.5;
      }
      Stream s = make_stream(sc);
      HindsightResult pgd = best_in_hindsight(s, dom);

      Vector lo(dim), hi(dim);
      if (dom.kind() == FeasibleDomain::Kind::Ball) {
        lo = dom.center().array() - dom.radius();
        hi = dom.center().array() + dom.radius();
      } else {
        lo = dom.lower();
        hi = dom.upper();
      }
      double grid_best = 1e300;
      Vector center = 0.5 * (lo + hi);
      Vector half = 0.5 * (hi - lo);
      const int steps = 33;
      for (int stage = 0; stage < 9; ++stage) {
        Vector arg = center;
        for (int a = 0; a < steps; ++a) {
          for (int b = 0; b < (dim == 2 ? steps : 1); ++b) {
            Vector p(dim);
            p[0] = center[0] + half[0] * (2.0 * a / (steps - 1) - 1.0);
            if (dim == 2)
              p[1] = center[1] + half[1] * (2.0 * b / (steps - 1) - 1.0);
            Vector q = dom.project(p);
            const double v = oracle::total_loss(s, q);
            if (v < grid_best) {
              grid_best = v;
              arg = q;
            }
          }
        }
        center = arg;
        half *= 0.3;
      }
      worst_value_gap =
          std::max(worst_value_gap, std::abs(pgd.value - grid_best));
    }

    double worst_weight_err = 0.0;
    for (std::uint64_t run = 0; run < 20; ++run) {
      const int n = run % 3 == 0 ? 2 : (run % 3 == 1 ? 5 : 16);
      ScaleAdaptiveProd meta(n, 1.0, /*check_invariants=*/true);
      DirectProd direct(n, 1.0);
      for (int t = 1; t <= 50; ++t) {
        VectorXd m(n), r(n);
        for (int i = 0; i < n; ++i) {
          m[i] = rng::uniform(97, run, 1000 * static_cast<std::uint64_t>(t) +
                                           static_cast<std::uint64_t>(i),
                              -1.0, 1.0);
          r[i] = rng::uniform(98, run, 1000 * static_cast<std::uint64_t>(t) +
                                           static_cast<std::uint64_t>(i),
                              -1.0, 1.0);
        }
        const VectorXd p_log = meta.decide(m);
        const VectorXd p_direct = direct.decide(m);
        for (int i = 0; i < n; ++i)
          worst_weight_err = std::max(
              worst_weight_err, std::abs(p_log[i] - p_direct[i]) /
                                    std::max(p_direct[i], 1e-300));
        meta.observe(r);
        direct.observe(r, m);
      }
    }

    note << "hindsight solver vs refined grid on 50 instances: worst value gap "
         << worst_value_gap << " (tol 1e-6); log-space vs direct weights on "
         << "20 runs of 50 rounds: worst relative error " << worst_weight_err
         << " (tol 1e-9)";
    return worst_value_gap <= 1e-6 && worst_weight_err <= 1e-9;
  });
}
