#include <doctest.h>

#include <cmath>

#include "imi/analysis/bootstrap.hpp"
#include "imi/analysis/conover.hpp"
#include "imi/analysis/correlation.hpp"
#include "imi/analysis/difficulty_analysis.hpp"
#include "imi/analysis/power.hpp"
#include "imi/analysis/predictors.hpp"
#include "imi/analysis/ranks.hpp"
#include "imi/analysis/scores.hpp"
#include "imi/common/errors.hpp"
#include "imi/common/random.hpp"
#include "oracles.hpp"

using namespace imi;
using namespace imi::analysis;

namespace {

store::ImiResponseRecord response(std::size_t channel, stimuli::Difficulty d, bool correct, int confidence = 2,
                                  stimuli::Condition c = stimuli::Condition::natural) {
  store::ImiResponseRecord r;
  r.model_id = "refcnn";
  r.layer_id = "conv3";
  r.channel_index = channel;
  r.condition = c;
  r.difficulty = d;
  r.correct = correct;
  r.confidence = confidence;
  r.quality_passed = true;
  return r;
}

UnitScore score(std::size_t channel, stimuli::Difficulty d, double value) {
  UnitScore s;
  s.unit = {"refcnn", "conv3", channel};
  s.difficulty = d;
  s.proportion_correct = value;
  return s;
}

}  // namespace

TEST_SUITE("ranks") {
  TEST_CASE("average ranks match the counting definition") {
    Rng rng(1);
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<double> v(1 + rng.below(30));
      for (auto& x : v) x = static_cast<double>(rng.below(8));
      CHECK(average_ranks(v) == imi::testing::naive_ranks(v));
    }
    CHECK(average_ranks({3, 1, 2, 2}) == std::vector<double>{4, 1, 2.5, 2.5});
    CHECK(tie_term({1, 1, 2, 2, 2}) == doctest::Approx(6 + 24));
  }
}

TEST_SUITE("scores") {
  TEST_CASE("proportion correct per unit and level") {
    std::vector<store::ImiResponseRecord> recs;
    for (int k = 0; k < 10; ++k) recs.push_back(response(0, stimuli::Difficulty::easy, k < 7));
    for (int k = 0; k < 4; ++k) recs.push_back(response(1, stimuli::Difficulty::easy, k < 1));
    const auto s = unit_scores(recs);
    REQUIRE(s.size() == 2);
    CHECK(s[0].proportion_correct == doctest::Approx(0.7));
    CHECK(s[0].n_responses == 10);
    CHECK(s[1].proportion_correct == doctest::Approx(0.25));
  }
}

TEST_SUITE("bootstrap") {
  TEST_CASE("constant scores give a degenerate interval") {
    const auto ci = bootstrap_ci({0.7, 0.7, 0.7}, 1000, 3);
    CHECK(ci.lower == 0.7);
    CHECK(ci.upper == 0.7);
  }

  TEST_CASE("interval brackets the mean and is reproducible") {
    Rng rng(4);
    std::vector<double> v(30);
    for (auto& x : v) x = 0.5 + 0.1 * rng.normal();
    const auto a = bootstrap_ci(v, 2000, 9), b = bootstrap_ci(v, 2000, 9);
    CHECK(a.lower == b.lower);
    CHECK(a.upper == b.upper);
    CHECK(a.lower < a.mean);
    CHECK(a.mean < a.upper);
    CHECK_THROWS_AS(bootstrap_ci({}, 10, 0), DegenerateError);
  }

  TEST_CASE("quantile interpolates between order statistics") {
    CHECK(quantile_sorted({0, 10}, 0.25) == doctest::Approx(2.5));
    CHECK(quantile_sorted({1, 2, 3, 4, 5}, 0.5) == 3);
  }

  TEST_CASE("coverage of the percentile interval is close to nominal") {
    Rng rng(2024);
    const int reps = 1000;
    int covered = 0;
    for (int r = 0; r < reps; ++r) {
      std::vector<double> v(60);
      for (auto& x : v) x = 0.8 + 0.12 * rng.normal();
      const auto ci = bootstrap_ci(v, 1000, rng.next());
      if (ci.lower <= 0.8 && 0.8 <= ci.upper) ++covered;
    }
    const double rate = static_cast<double>(covered) / reps;
    CAPTURE(rate);
    CHECK(rate >= 0.925);
    CHECK(rate <= 0.97);
  }
}

TEST_SUITE("rank tests") {
  TEST_CASE("Holm adjustment agrees with the definition and is monotone") {
    Rng rng(8);
    for (int rep = 0; rep < 300; ++rep) {
      std::vector<double> p(1 + rng.below(12));
      for (auto& x : p) x = rng.bernoulli(0.2) ? 0.04 : rng.uniform();
      const auto adj = holm_adjust(p);
      const auto oracle = imi::testing::holm_by_definition(p);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(adj[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
        CHECK(adj[i] >= p[i]);
        CHECK(adj[i] <= 1.0);
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (p[i] < p[j]) CHECK(adj[i] <= adj[j]);
        }
      }
    }
  }

  TEST_CASE("Kruskal-Wallis on a textbook example") {
    // H for three separated groups of three: mean ranks 2, 5, 8, N = 9.
    const auto kw = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    CHECK(kw.h == doctest::Approx(12.0 / 90.0 * 3 * (9 + 0 + 9)));
    CHECK(kw.p_value == doctest::Approx(std::exp(-kw.h / 2)));
  }

  TEST_CASE("Conover statistic matches the brute-force formula") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::vector<double>> groups(3);
      for (std::size_t g = 0; g < 3; ++g) {
        groups[g].resize(4 + rng.below(6));
        for (auto& x : groups[g]) x = rng.normal() + 0.5 * static_cast<double>(g);
      }
      std::vector<double> all;
      std::vector<std::size_t> label;
      for (std::size_t g = 0; g < 3; ++g) {
        for (double x : groups[g]) {
          all.push_back(x);
          label.push_back(g);
        }
      }
      const auto t = imi::testing::conover_abs_t(imi::testing::naive_ranks(all), label, 3);
      const auto res = conover_holm(groups);
      REQUIRE(res.pairs.size() == 3);
      for (std::size_t q = 0; q < 3; ++q) CHECK(std::fabs(res.pairs[q].t_statistic) == doctest::Approx(t[q]));
    }
  }

  TEST_CASE("Conover-Holm p-values track a permutation oracle") {
    Rng rng(77);
    double worst = 0.0;
    for (int rep = 0; rep < 6; ++rep) {
      std::vector<std::vector<double>> groups(3);
      for (std::size_t g = 0; g < 3; ++g) {
        groups[g].resize(10);
        for (auto& x : groups[g]) x = rng.normal() + 0.6 * static_cast<double>(g) * (rep % 2);
      }
      const auto res = conover_holm(groups);
      const auto oracle = imi::testing::conover_permutation(groups, 20000, 100 + rep);
      for (std::size_t q = 0; q < 3; ++q) worst = std::max(worst, std::fabs(res.pairs[q].p_adjusted - oracle[q]));
    }
    CAPTURE(worst);
    CHECK(worst <= 0.02);
  }

  TEST_CASE("identical data gives p = 1 everywhere") {
    const auto res = conover_holm({{0.5, 0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5, 0.5}});
    for (const auto& c : res.pairs) {
      CHECK(c.p_adjusted == 1.0);
      CHECK(c.stars == "ns");
    }
  }

  TEST_CASE("significance stars") {
    CHECK(significance_stars(0.0005) == "***");
    CHECK(significance_stars(0.005) == "**");
    CHECK(significance_stars(0.02) == "*");
    CHECK(significance_stars(0.05) == "ns");
  }
}

TEST_SUITE("correlation") {
  TEST_CASE("Spearman on small samples equals full enumeration") {
    Rng rng(5);
    for (int rep = 0; rep < 40; ++rep) {
      const std::size_t n = 4 + rng.below(4);
      std::vector<double> x(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] = static_cast<double>(rng.below(6));
        y[i] = rng.normal();
      }
      if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
      const auto got = spearman(x, y);
      const auto want = imi::testing::spearman_by_enumeration(x, y);
      CHECK(got.exact);
      CHECK(got.rho == doctest::Approx(want.rho).epsilon(1e-12));
      CHECK(got.p_value == doctest::Approx(want.p_value).epsilon(1e-12));
    }
  }

  TEST_CASE("perfect monotone relation with n = 5") {
    const auto r = spearman({1, 2, 3, 4, 5}, {2, 4, 8, 16, 32});
    CHECK(r.rho == doctest::Approx(1.0));
    CHECK(r.p_value == doctest::Approx(2.0 / 120.0));
  }

  TEST_CASE("constant input is undefined") {
    const auto r = spearman({1, 1, 1, 1}, {1, 2, 3, 4});
    CHECK_FALSE(r.defined);
  }

  TEST_CASE("large samples use the t approximation") {
    Rng rng(6);
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x[i] = rng.normal();
      y[i] = x[i] + rng.normal();
    }
    const auto r = spearman(x, y);
    CHECK_FALSE(r.exact);
    CHECK(r.rho > 0.4);
    CHECK(r.p_value < 0.01);
  }

  TEST_CASE("layer position follows the eligible order") {
    std::vector<UnitScore> scores;
    const std::vector<std::string> layers{"norm1", "conv2", "norm2", "conv3", "norm3"};
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t c = 0; c < 2; ++c) {
        UnitScore s;
        s.unit = {"refcnn", layers[l], c};
        s.proportion_correct = 0.9 - 0.05 * static_cast<double>(l);
        scores.push_back(s);
      }
    }
    const auto res = layer_position_analysis(scores, layers);
    REQUIRE(res.size() == 1);
    REQUIRE(res[0].layers.size() == 5);
    CHECK(res[0].layers[0].position == 0.0);
    CHECK(res[0].layers[4].position == 1.0);
    REQUIRE(res[0].correlation);
    CHECK(res[0].correlation->rho == doctest::Approx(-1.0));
  }
}

TEST_SUITE("power") {
  TEST_CASE("published parameters") {
    const auto r = power_analysis(PowerParams{});
    CHECK(r.units_required >= 83);
    CHECK(r.units_required <= 89);
    CHECK(r.trials_per_unit_formula == 25);
    CHECK(r.trials_per_unit == 30);
    CHECK(r.units_chosen == 84);
    CHECK(r.participants_required == 63);
  }

  TEST_CASE("invalid parameters") {
    PowerParams p;
    p.alpha = 0.0;
    CHECK_THROWS_AS(power_analysis(p), ConfigError);
    p = PowerParams{};
    p.cohens_d = 1.5;
    CHECK_THROWS_AS(power_analysis(p), ConfigError);
  }

  TEST_CASE("without override the formula value is used") {
    PowerParams p;
    p.trials_per_unit_override.reset();
    p.units_chosen.reset();
    const auto r = power_analysis(p);
    CHECK(r.trials_per_unit == 25);
    CHECK(r.units_chosen == r.units_required);
  }
}

TEST_SUITE("difficulty") {
  TEST_CASE("ordering, gaps and incomplete units") {
    using D = stimuli::Difficulty;
    std::vector<UnitScore> s{score(0, D::easy, 0.9), score(0, D::medium, 0.7), score(0, D::hard, 0.6),
                             score(1, D::easy, 0.8), score(1, D::medium, 0.8), score(1, D::hard, 0.5),
                             score(2, D::easy, 0.9), score(2, D::medium, 0.6)};
    const auto rep = difficulty_analysis(s, stimuli::Condition::natural);
    CHECK(rep.levels == std::vector<D>{D::easy, D::medium, D::hard});
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].strictly_decreasing);
    CHECK_FALSE(rep.rows[1].strictly_decreasing);
    CHECK(*rep.rows[0].gap_easy_medium == doctest::Approx(0.2));
    CHECK(*rep.rows[1].gap_easy_hard == doctest::Approx(0.3));
    CHECK(rep.fraction_strictly_decreasing == doctest::Approx(0.5));
    CHECK(rep.warnings.size() == 1);
    CHECK(*rep.level_means[0] == doctest::Approx(0.85));
  }

  TEST_CASE("confidence split") {
    std::vector<store::ImiResponseRecord> recs;
    for (int k = 0; k < 4; ++k) recs.push_back(response(0, stimuli::Difficulty::easy, k < 3, 3));
    recs.push_back(response(0, stimuli::Difficulty::easy, false, 1));
    const auto cs = confidence_split(recs);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].levels[0].count == 1);
    CHECK(*cs[0].levels[0].proportion_correct == 0.0);
    CHECK_FALSE(cs[0].levels[1].proportion_correct);
    CHECK(*cs[0].levels[2].proportion_correct == doctest::Approx(0.75));
  }
}

TEST_SUITE("predictors") {
  TEST_CASE("local contrast") {
    CHECK(local_contrast({2, 2, {1, 1, 1, 1}}) == 0.0);
    // Single peak in a 3x3 map: every window is the clipped neighbourhood.
    ActivationMap m{3, 3, {0, 0, 0, 0, 9, 0, 0, 0, 0}};
    double want = 0.0;
    for (std::size_t y = 0; y < 3; ++y) {
      for (std::size_t x = 0; x < 3; ++x) {
        double sum = 0, cnt = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = static_cast<int>(y) + dy, xx = static_cast<int>(x) + dx;
            if (yy < 0 || xx < 0 || yy > 2 || xx > 2) continue;
            sum += m.values[static_cast<std::size_t>(yy * 3 + xx)];
            ++cnt;
          }
        }
        want += std::fabs(m.values[y * 3 + x] - sum / cnt);
      }
    }
    CHECK(local_contrast(m) == doctest::Approx(want / 9.0));
    CHECK_THROWS_AS(local_contrast({2, 2, {1, 2, 3}}), ShapeError);
  }

  TEST_CASE("sparseness") {
    const auto s = predictor_sparseness({{1, 2, {0, 1}}, {1, 2, {-1, 0}}});
    CHECK(s.pixel == doctest::Approx(0.75));
    CHECK(s.channel == doctest::Approx(0.5));
  }
}
