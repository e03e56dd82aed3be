#include <doctest.h>

#include <vector>

#include "rulebo/diagnosis.hpp"
#include "rulebo/errors.hpp"
#include "rulebo/random.hpp"
#include "support/curves.hpp"

using namespace rulebo;

namespace {
const DiagnosisThresholds kDefaults{};

std::vector<IssueKind> kinds(const DiagnosisReport& r) {
  std::vector<IssueKind> k;
  for (const auto& i : r) k.push_back(i.kind);
  return k;
}
}  // namespace

TEST_CASE("tail_mean examples") {
  CHECK(tail_mean(std::vector<double>{1, 2, 3, 4}, 0.25) == 4.0);
  CHECK(tail_mean(std::vector<double>{1, 1, 1, 1}, 0.7) == 1.0);
  CHECK(tail_mean(std::vector<double>{0, 0, 2, 4}, 0.5) == 3.0);
  CHECK_THROWS_AS(tail_mean(std::vector<double>{}, 0.5), EmptyHistory);
}

TEST_CASE("overfitting detector") {
  History h;
  for (int e = 0; e < 4; ++e) h.push(0.1, 1.2, 0.99, 0.70);
  const auto issue = detect_overfitting(h, kDefaults);
  REQUIRE(issue);
  CHECK(issue->score == doctest::Approx(0.29));

  History same;
  for (int e = 0; e < 4; ++e) same.push(0.5, 0.5, 0.8, 0.8);
  CHECK_FALSE(detect_overfitting(same, kDefaults));

  // Accuracy gap alone is not enough when validation loss is lower.
  History odd;
  for (int e = 0; e < 4; ++e) odd.push(1.0, 0.5, 0.99, 0.70);
  CHECK_FALSE(detect_overfitting(odd, kDefaults));
}

TEST_CASE("underfitting detector") {
  History h;
  for (int e = 0; e < 4; ++e) h.push(2.0, 2.1, 0.3, 0.3);
  CHECK(detect_underfitting(h, {}, kDefaults));

  History good;
  for (int e = 0; e < 4; ++e) good.push(0.05, 0.1, 0.99, 0.97);
  CHECK_FALSE(detect_underfitting(good, {}, kDefaults));

  // Shape of a plain BO run stuck at chance level on a 10-class problem.
  History stuck;
  for (int e = 0; e < 10; ++e) stuck.push(2.3, 2.3, 0.114, 0.114);
  const auto issue = detect_underfitting(stuck, {}, kDefaults);
  REQUIRE(issue);
  CHECK(issue->score == doctest::Approx(2.3));
}

TEST_CASE("oscillation_score examples") {
  CHECK(oscillation_score(std::vector<double>{5, 4, 3, 2, 1}) == 0.0);
  CHECK(oscillation_score(std::vector<double>{1, 0, 1, 0, 1}) == 1.0);
  CHECK(oscillation_score(std::vector<double>{3, 2, 2.5, 1.5, 1.8, 1.0}) == 1.0);
  CHECK(oscillation_score(std::vector<double>{1, 1, 1, 1}) == 0.0);
  CHECK_THROWS_AS(oscillation_score(std::vector<double>{1, 2}), InsufficientHistory);
}

TEST_CASE("loss_slope examples") {
  CHECK(loss_slope(std::vector<double>{1, 2, 3, 4}, 1.0) == doctest::Approx(1.0));
  CHECK(loss_slope(std::vector<double>{2, 2, 2, 2}, 1.0) == 0.0);
  CHECK(loss_slope(std::vector<double>{4, 3, 2, 1}, 0.5) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(loss_slope(std::vector<double>{4, 3, 2, 1}, 0.25), InsufficientHistory);
}

TEST_CASE("diagnose on the fixture curves") {
  CHECK(diagnose(curves::clean(), curves::result_of(curves::clean()), kDefaults).empty());
  CHECK(kinds(diagnose(curves::gap(), curves::result_of(curves::gap()), kDefaults)) ==
        std::vector{IssueKind::overfitting});
  CHECK(kinds(diagnose(curves::high_loss(), curves::result_of(curves::high_loss()), kDefaults)) ==
        std::vector{IssueKind::underfitting});
  CHECK(kinds(diagnose(curves::alternating(), curves::result_of(curves::alternating()), kDefaults)) ==
        std::vector{IssueKind::fluctuating_loss});
  CHECK(kinds(diagnose(curves::rising(), curves::result_of(curves::rising()), kDefaults)) ==
        std::vector{IssueKind::increasing_loss_trend});
}

TEST_CASE("noisy validation loss with a flat accuracy gap") {
  History h;
  const double noise[] = {0.05, -0.05};
  for (int e = 0; e < 10; ++e) h.push(0.4, 0.45 + noise[e % 2], 0.8, 0.78);
  // A flat step removes three flips: score 5/8.
  h.val_loss[5] = h.val_loss[4];
  const auto r = diagnose(h, {}, kDefaults);
  CHECK(kinds(r) == std::vector{IssueKind::fluctuating_loss});
  CHECK(r[0].score > 0.6);
}

TEST_CASE("rising validation loss with a gap reports both in order") {
  History h;
  for (int e = 0; e < 20; ++e) {
    const double val = e < 6 ? 1.0 - 0.1 * e : 0.4 + 0.05 * (e - 5);
    h.push(0.8 * std::exp(-e / 4.0) + 0.02, val, 0.6 + 0.02 * e, 0.6);
  }
  CHECK(kinds(diagnose(h, {}, kDefaults)) ==
        std::vector{IssueKind::overfitting, IssueKind::increasing_loss_trend});
}

TEST_CASE("diagnose rejects short or empty histories") {
  CHECK_THROWS_AS(diagnose(History{}, {}, kDefaults), EmptyHistory);
  History h;
  h.push(1, 1, 0.5, 0.5);
  h.push(1, 1, 0.5, 0.5);
  CHECK_THROWS_AS(diagnose(h, {}, kDefaults), InsufficientHistory);
}

TEST_CASE("history validation") {
  History h;
  h.push(1, 1, 0.5, 1.5);
  CHECK_THROWS_AS(validate(h), InvalidInput);
  History uneven;
  uneven.train_loss = {1.0};
  CHECK_THROWS_AS(validate(uneven), InvalidInput);
}

TEST_CASE("threshold validation") {
  DiagnosisThresholds t;
  t.tail_fraction = 1.5;
  CHECK_THROWS_AS(validate(t), InvalidInput);
  t = {};
  t.noise_score = 0.0;
  CHECK_THROWS_AS(validate(t), InvalidInput);
}

TEST_CASE("format_report joins issue names") {
  CHECK(format_report({{IssueKind::overfitting, 0.2}, {IssueKind::fluctuating_loss, 0.5}}) ==
        "overfitting;fluctuating_loss");
  CHECK(parse_issue("underfitting") == IssueKind::underfitting);
}

namespace {

History random_history(Rng& rng, int n) {
  History h;
  for (int e = 0; e < n; ++e)
    h.push(rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(), rng.uniform());
  return h;
}

}  // namespace

TEST_CASE("property: diagnose is pure and over/underfitting exclusive") {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const auto h = random_history(rng, 5 + static_cast<int>(rng.below(30)));
    const auto a = diagnose(h, {}, kDefaults);
    CHECK(a == diagnose(h, {}, kDefaults));
    const auto k = kinds(a);
    const bool over = std::find(k.begin(), k.end(), IssueKind::overfitting) != k.end();
    const bool under = std::find(k.begin(), k.end(), IssueKind::underfitting) != k.end();
    CHECK_FALSE((over && under));
  }
}

TEST_CASE("property: shift and scale behaviour of the loss metrics") {
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> loss(10 + rng.below(20));
    for (auto& v : loss) v = rng.uniform(0, 2);
    const double c = rng.uniform(0.1, 5), s = rng.uniform(0.1, 5);
    std::vector<double> shifted = loss, scaled = loss;
    for (auto& v : shifted) v += c;
    for (auto& v : scaled) v *= s;
    CHECK(oscillation_score(shifted) == oscillation_score(loss));
    CHECK(loss_slope(shifted, 0.5) == doctest::Approx(loss_slope(loss, 0.5)).epsilon(1e-9));
    CHECK(loss_slope(scaled, 0.5) == doctest::Approx(s * loss_slope(loss, 0.5)).epsilon(1e-9));
  }
}

TEST_CASE("property: monotone decreasing validation loss triggers no trend issues") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    History h;
    double v = rng.uniform(1, 3);
    for (int e = 0; e < 5 + static_cast<int>(rng.below(30)); ++e) {
      v -= rng.uniform(1e-4, 0.05);
      h.push(std::max(v, 0.0), std::max(v, 0.0) + 1e-3, 0.9, 0.9);
    }
    bool ok = true;
    for (std::size_t i = 1; i < h.val_loss.size(); ++i) ok = ok && h.val_loss[i] < h.val_loss[i - 1];
    if (!ok) continue;
    for (const auto& issue : diagnose(h, {}, kDefaults)) {
      CHECK(issue.kind != IssueKind::fluctuating_loss);
      CHECK(issue.kind != IssueKind::increasing_loss_trend);
    }
  }
}
