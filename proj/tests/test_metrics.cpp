#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "doctest.h"
#include "metrics/metrics.hpp"
#include "metrics/score_io.hpp"

using namespace rwr;

namespace {

bool contains(const std::string& s, const std::string& sub) {
  return s.find(sub) != std::string::npos;
}

std::vector<ScoreRecord> make_records(const std::vector<double>& bona,
                                      const std::vector<double>& spoof) {
  std::vector<ScoreRecord> r;
  for (size_t i = 0; i < bona.size(); ++i) {
    r.push_back({"B" + std::to_string(i), bona[i], 1});
  }
  for (size_t i = 0; i < spoof.size(); ++i) {
    r.push_back({"S" + std::to_string(i), spoof[i], 0});
  }
  return r;
}

std::vector<ScoreRecord> random_records(uint64_t seed, int n_bona, int n_spoof,
                                        double separation) {
  Rng rng(seed);
  std::vector<double> bona, spoof;
  for (int i = 0; i < n_bona; ++i) {
    bona.push_back(separation + rng.normal());
  }
  for (int i = 0; i < n_spoof; ++i) {
    spoof.push_back(-separation + rng.normal());
  }
  return make_records(bona, spoof);
}

// Quadratic-time reference: evaluate both error rates by direct counting at
// every candidate threshold, then interpolate the crossing the same way the
// definition states it.
EerResult brute_force_eer(std::span<const ScoreRecord> records) {
  std::set<double> taus;
  double top = -std::numeric_limits<double>::infinity();
  size_t nb = 0, ns = 0;
  for (const ScoreRecord& r : records) {
    taus.insert(r.score);
    top = std::max(top, r.score);
    (r.label == 1 ? nb : ns) += 1;
  }
  taus.insert(top + 1.0);
  const auto rates = [&](double tau) {
    size_t miss = 0, fa = 0;
    for (const ScoreRecord& r : records) {
      if (r.label == 1 && r.score < tau) ++miss;
      if (r.label == 0 && r.score >= tau) ++fa;
    }
    return std::pair<double, double>(
        static_cast<double>(miss) / static_cast<double>(nb),
        static_cast<double>(fa) / static_cast<double>(ns));
  };
  double prev_tau = 0.0, prev_miss = 0.0, prev_fa = 0.0;
  bool have_prev = false;
  for (const double tau : taus) {
    const auto [miss, fa] = rates(tau);
    if (miss >= fa) {
      if (miss == fa) return {miss, tau};
      REQUIRE(have_prev);
      const double alpha =
          (prev_fa - prev_miss) / ((miss - prev_miss) - (fa - prev_fa));
      return {prev_miss + alpha * (miss - prev_miss),
              prev_tau + alpha * (tau - prev_tau)};
    }
    prev_tau = tau;
    prev_miss = miss;
    prev_fa = fa;
    have_prev = true;
  }
  FAIL("no crossing found");
  return {0.0, 0.0};
}

// Direct transcription of the tandem cost over the same sweep grid.
TdcfResult brute_force_min_tdcf(std::span<const ScoreRecord> records,
                                const TdcfCost& cost) {
  const double c1 =
      cost.p_target * (cost.c_miss_cm - cost.c_miss_asv * cost.p_miss_asv) -
      cost.p_nontarget * cost.c_fa_asv * cost.p_fa_asv;
  const double c2 = cost.c_fa_cm * cost.p_spoof * (1.0 - cost.p_miss_spoof_asv);
  std::set<double> taus;
  double top = -std::numeric_limits<double>::infinity();
  size_t nb = 0, ns = 0;
  for (const ScoreRecord& r : records) {
    taus.insert(r.score);
    top = std::max(top, r.score);
    (r.label == 1 ? nb : ns) += 1;
  }
  taus.insert(top + 1.0);
  double best = std::numeric_limits<double>::infinity();
  double best_tau = 0.0;
  for (const double tau : taus) {
    size_t miss = 0, fa = 0;
    for (const ScoreRecord& r : records) {
      if (r.label == 1 && r.score < tau) ++miss;
      if (r.label == 0 && r.score >= tau) ++fa;
    }
    const double value = (c1 * static_cast<double>(miss) / static_cast<double>(nb) +
                          c2 * static_cast<double>(fa) / static_cast<double>(ns)) /
                         std::min(c1, c2);
    if (value < best) {
      best = value;
      best_tau = tau;
    }
  }
  return {best, best_tau};
}

TdcfCost cost_with_rates() {
  TdcfCost c;
  c.p_miss_asv = 0.01;
  c.p_fa_asv = 0.02;
  c.p_miss_spoof_asv = 0.06;
  return c;
}

std::filesystem::path temp_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("llr score equals the log-softmax difference") {
  Rng rng(1);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(-60.0, 60.0);  // spoof logit
    const double b = rng.uniform(-60.0, 60.0);  // bonafide logit
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const double via_softmax = (b - lse) - (a - lse);
    worst = std::max(worst, std::abs(detection_score(a, b) - via_softmax));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("eer is zero for perfect separation") {
  const auto r = make_records({0.8, 1.2, 2.0}, {-1.0, -0.3, 0.1});
  const EerResult e = compute_eer(r);
  CHECK(e.eer == 0.0);
  // The crossing sits where both rates are zero: at the lowest bonafide.
  CHECK(e.threshold <= 0.8);
  CHECK(e.threshold > 0.1);
}

TEST_CASE("eer is one when the classes are swapped") {
  const auto r = make_records({-1.0, -0.5}, {0.5, 1.0});
  CHECK(compute_eer(r).eer == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eer is a half for fully interleaved scores") {
  // Identical score multisets: any threshold has miss + fa = 1.
  const auto r = make_records({0.0, 1.0}, {0.0, 1.0});
  CHECK(compute_eer(r).eer == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("eer agrees with the quadratic-time reference") {
  for (uint64_t seed = 1; seed <= 8; ++seed) {
    const auto r =
        random_records(seed, 60 + static_cast<int>(seed), 90, 0.4);
    const EerResult fast = compute_eer(r);
    const EerResult slow = brute_force_eer(r);
    CHECK(std::abs(fast.eer - slow.eer) < 1e-12);
    CHECK(std::abs(fast.threshold - slow.threshold) < 1e-12);
  }
}

TEST_CASE("eer survives ties and duplicate scores") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> bona, spoof;
    for (int i = 0; i < 40; ++i) {
      bona.push_back(static_cast<double>(rng.below(9)) * 0.25);
      spoof.push_back(static_cast<double>(rng.below(9)) * 0.25 - 1.0);
    }
    const auto r = make_records(bona, spoof);
    const EerResult fast = compute_eer(r);
    const EerResult slow = brute_force_eer(r);
    CHECK(std::abs(fast.eer - slow.eer) < 1e-12);
  }
}

TEST_CASE("eer is invariant under monotone score maps") {
  const auto base = random_records(31, 50, 70, 0.3);
  const double want = compute_eer(base).eer;
  const std::vector<std::function<double(double)>> maps = {
      [](double s) { return 3.0 * s + 2.0; },
      [](double s) { return std::tanh(s); },
      [](double s) { return s * s * s; },
      [](double s) { return std::exp(0.5 * s); },
      [](double s) { return std::atan(s); },
  };
  for (const auto& f : maps) {
    std::vector<ScoreRecord> mapped = base;
    for (ScoreRecord& r : mapped) r.score = f(r.score);
    CHECK(compute_eer(mapped).eer == want);
  }
}

TEST_CASE("eer threshold shifts with a constant offset") {
  const auto base = random_records(41, 40, 40, 0.5);
  const EerResult e0 = compute_eer(base);
  std::vector<ScoreRecord> shifted = base;
  for (ScoreRecord& r : shifted) r.score += 10.0;
  const EerResult e1 = compute_eer(shifted);
  CHECK(e1.eer == e0.eer);
  CHECK(e1.threshold == doctest::Approx(e0.threshold + 10.0).epsilon(1e-9));
}

TEST_CASE("label swap complements the eer when scores are distinct") {
  const auto base = random_records(51, 45, 55, 0.2);
  std::vector<ScoreRecord> swapped = base;
  for (ScoreRecord& r : swapped) r.label = 1 - r.label;
  const double a = compute_eer(base).eer;
  const double b = compute_eer(swapped).eer;
  CHECK(std::abs(a + b - 1.0) < 1e-12);
}

TEST_CASE("eer rejects degenerate inputs") {
  CHECK_THROWS_AS(compute_eer(make_records({1.0, 2.0}, {})), DataError);
  CHECK_THROWS_AS(compute_eer(make_records({}, {1.0})), DataError);
  std::vector<ScoreRecord> bad = make_records({1.0}, {0.0});
  bad[0].label = 7;
  CHECK_THROWS_AS(compute_eer(bad), DataError);
  bad = make_records({1.0}, {0.0});
  bad[1].score = std::nan("");
  CHECK_THROWS_AS(compute_eer(bad), DataError);
}

TEST_CASE("tdcf cost components match hand arithmetic") {
  const TdcfCost c = cost_with_rates();
  // C1 = 0.9405 * (1 - 1 * 0.01) - 0.0095 * 10 * 0.02
  CHECK(c.c1() == doctest::Approx(0.929195).epsilon(1e-12));
  // C2 = 10 * 0.05 * (1 - 0.06)
  CHECK(c.c2() == doctest::Approx(0.47).epsilon(1e-12));
}

TEST_CASE("min tdcf is zero for perfect separation") {
  const auto r = make_records({1.0, 2.0, 3.0}, {-3.0, -2.0, -1.0});
  const TdcfResult res = compute_min_tdcf(r, cost_with_rates());
  CHECK(res.min_tdcf == 0.0);
}

TEST_CASE("an accept-everything detector costs c2 over the normalizer") {
  // All spoof scores above all bonafide: the sweep's best is still a valid
  // operating point, but the accept-all end evaluates to C2/min(C1,C2).
  const TdcfCost c = cost_with_rates();
  const auto r = make_records({0.0}, {1.0});
  // At tau = 0.0 (accept all): miss 0, fa 1 -> C2 / min(C1, C2).
  // At tau = 1.0: miss 1, fa 1; at tau = 2.0 (reject all): miss 1, fa 0.
  // min over the sweep: min(C2, C1 + C2, C1) / min(C1, C2) = 1.
  const TdcfResult res = compute_min_tdcf(r, c);
  CHECK(res.min_tdcf == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("min tdcf agrees with the direct transcription") {
  for (uint64_t seed = 61; seed < 69; ++seed) {
    const auto r = random_records(seed, 50, 80, 0.25);
    const TdcfResult fast = compute_min_tdcf(r, cost_with_rates());
    const TdcfResult slow = brute_force_min_tdcf(r, cost_with_rates());
    CHECK(std::abs(fast.min_tdcf - slow.min_tdcf) < 1e-12);
  }
}

TEST_CASE("min tdcf ignores record duplication") {
  const auto r = random_records(71, 30, 30, 0.2);
  std::vector<ScoreRecord> doubled = r;
  doubled.insert(doubled.end(), r.begin(), r.end());
  const double a = compute_min_tdcf(r, cost_with_rates()).min_tdcf;
  const double b = compute_min_tdcf(doubled, cost_with_rates()).min_tdcf;
  CHECK(std::abs(a - b) < 1e-12);
}

TEST_CASE("tdcf validation catches missing rates and bad priors") {
  TdcfCost missing;  // ASV rates left at their -1 sentinels
  CHECK_THROWS_AS(missing.validate(), ConfigError);
  TdcfCost bad = cost_with_rates();
  bad.p_target = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cost_with_rates();
  bad.c_miss_cm = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("degenerate cost weights are rejected with both values named") {
  TdcfCost c = cost_with_rates();
  c.p_miss_asv = 1.0;  // drives C1 negative
  c.p_fa_asv = 0.5;
  const auto r = make_records({1.0}, {0.0});
  try {
    compute_min_tdcf(r, c);
    FAIL("expected degenerate cost rejection");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "C1"));
    CHECK(contains(e.what(), "C2"));
  }
}

TEST_CASE("cost file parsing round-trips and rejects junk") {
  const std::string text =
      "# operating point\n"
      "p_miss_asv = 0.01\n"
      "p_fa_asv=0.02\n"
      "p_miss_spoof_asv = 0.06  # tail comment\n"
      "\n"
      "c_fa_cm = 20\n";
  const TdcfCost c = parse_cost_file(text);
  CHECK(c.p_miss_asv == 0.01);
  CHECK(c.p_fa_asv == 0.02);
  CHECK(c.p_miss_spoof_asv == 0.06);
  CHECK(c.c_fa_cm == 20.0);
  CHECK(c.p_target == 0.9405);  // untouched default

  try {
    parse_cost_file("p_mis_asv = 0.01\n");
    FAIL("expected unknown-key rejection");
  } catch (const ConfigError& e) {
    CHECK(contains(e.what(), "p_mis_asv"));
    CHECK(contains(e.what(), "line 1"));
  }
  CHECK_THROWS_AS(parse_cost_file("p_fa_asv = banana\n"), ConfigError);
  CHECK_THROWS_AS(parse_cost_file("p_fa_asv\n"), ConfigError);
}

TEST_CASE("score files round-trip to 6 decimals") {
  Rng rng(81);
  std::vector<ScoreRecord> records;
  for (int i = 0; i < 1000; ++i) {
    records.push_back(
        {"LA_E_" + std::to_string(1000 + i), rng.uniform(-12.0, 12.0), -1});
  }
  const auto dir = temp_dir("rwr_scores_roundtrip");
  const std::string path = (dir / "scores.txt").string();
  write_scores_file(path, records);
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  const auto back = load_scores_file(path);
  REQUIRE(back.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(back[i].utt_id == records[i].utt_id);
    CHECK(std::abs(back[i].score - records[i].score) < 5e-7);
    CHECK(back[i].label == -1);
  }
}

TEST_CASE("score formatting is exact") {
  std::vector<ScoreRecord> records = {{"LA_E_1001", 2.5, -1},
                                      {"LA_E_1002", -0.1234567, -1}};
  CHECK(format_scores(records) ==
        "LA_E_1001 2.500000\nLA_E_1002 -0.123457\n");
  records[0].score = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(format_scores(records), DataError);
}

TEST_CASE("score parsing flags malformed lines by number") {
  const auto ok = parse_scores("A 1.0\nB -2.25\n");
  REQUIRE(ok.size() == 2);
  CHECK(ok[0].utt_id == "A");
  CHECK(ok[1].score == -2.25);
  try {
    parse_scores("A 1.0\nB\n");
    FAIL("expected missing-score rejection");
  } catch (const DataError& e) {
    CHECK(contains(e.what(), "line 2"));
  }
  try {
    parse_scores("A 1.0\nB zebra\n");
    FAIL("expected bad-number rejection");
  } catch (const DataError& e) {
    CHECK(contains(e.what(), "line 2"));
  }
}

TEST_CASE("metric report csv is stable") {
  const EerResult eer = {0.0425, 0.125};
  const TdcfResult tdcf = {0.1175, 0.25};
  CHECK(metrics_report_csv(eer, tdcf) ==
        "metric,value,threshold\n"
        "eer,4.250000,0.125000\n"
        "min_tdcf,0.117500,0.250000\n");
}
