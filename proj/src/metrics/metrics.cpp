#include "metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {
namespace {

// Rates of both error types at every candidate threshold (each distinct score
// plus one point past the maximum, which rejects everything). The rule
// "score >= tau => bonafide" makes miss nondecreasing and fa nonincreasing
// as tau grows.
struct Sweep {
  std::vector<double> tau;
  std::vector<double> miss;
  std::vector<double> fa;
};

Sweep build_sweep(std::span<const ScoreRecord> records) {
  int64_t n_bona = 0, n_spoof = 0;
  std::vector<std::pair<double, int>> sorted;
  sorted.reserve(records.size());
  for (const ScoreRecord& r : records) {
    if (r.label != 0 && r.label != 1) {
      throw DataError("metrics: record '" + r.utt_id +
                      "' has no bonafide/spoof label");
    }
    if (!std::isfinite(r.score)) {
      throw DataError("metrics: record '" + r.utt_id +
                      "' has non-finite score");
    }
    sorted.emplace_back(r.score, r.label);
    (r.label == 1 ? n_bona : n_spoof)++;
  }
  if (n_bona == 0 || n_spoof == 0) {
    throw DataError("metrics: need both classes, got " +
                    std::to_string(n_bona) + " bonafide and " +
                    std::to_string(n_spoof) + " spoof");
  }
  std::sort(sorted.begin(), sorted.end());

  Sweep s;
  int64_t bona_below = 0, spoof_below = 0;
  size_t i = 0;
  while (i < sorted.size()) {
    const double v = sorted[i].first;
    s.tau.push_back(v);
    s.miss.push_back(static_cast<double>(bona_below) /
                     static_cast<double>(n_bona));
    s.fa.push_back(static_cast<double>(n_spoof - spoof_below) /
                   static_cast<double>(n_spoof));
    while (i < sorted.size() && sorted[i].first == v) {
      (sorted[i].second == 1 ? bona_below : spoof_below)++;
      ++i;
    }
  }
  s.tau.push_back(sorted.back().first + 1.0);
  s.miss.push_back(1.0);
  s.fa.push_back(0.0);
  return s;
}

}  // namespace

EerResult compute_eer(std::span<const ScoreRecord> records) {
  const Sweep s = build_sweep(records);
  for (size_t k = 0; k < s.tau.size(); ++k) {
    const double d = s.miss[k] - s.fa[k];
    if (d < 0.0) continue;
    if (d == 0.0 || k == 0) {
      return {(s.miss[k] + s.fa[k]) / 2.0, s.tau[k]};
    }
    // The step functions cross strictly between k-1 and k; interpolate on the
    // rates alone, which keeps the crossing invariant under any monotone
    // rescoring.
    const double dm = s.miss[k] - s.miss[k - 1];
    const double df = s.fa[k] - s.fa[k - 1];
    const double alpha = (s.fa[k - 1] - s.miss[k - 1]) / (dm - df);
    return {s.miss[k - 1] + alpha * dm,
            s.tau[k - 1] + alpha * (s.tau[k] - s.tau[k - 1])};
  }
  throw Error("metrics: threshold sweep found no crossing");  // unreachable
}

void TdcfCost::validate() const {
  const auto prior_ok = [](double p) {
    return std::isfinite(p) && p > 0.0 && p < 1.0;
  };
  if (!prior_ok(p_target) || !prior_ok(p_nontarget) || !prior_ok(p_spoof)) {
    throw ConfigError("tdcf cost: priors must lie in (0, 1)");
  }
  if (std::abs(p_target + p_nontarget + p_spoof - 1.0) > 1e-9) {
    throw ConfigError("tdcf cost: priors must sum to 1");
  }
  for (double c : {c_miss_asv, c_fa_asv, c_miss_cm, c_fa_cm}) {
    if (!std::isfinite(c) || c < 0.0) {
      throw ConfigError("tdcf cost: costs must be finite and >= 0");
    }
  }
  for (double p : {p_miss_asv, p_fa_asv, p_miss_spoof_asv}) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ConfigError(
          "tdcf cost: ASV error rates must be supplied and lie in [0, 1]");
    }
  }
}

double TdcfCost::c1() const {
  return p_target * (c_miss_cm - c_miss_asv * p_miss_asv) -
         p_nontarget * c_fa_asv * p_fa_asv;
}

double TdcfCost::c2() const {
  return c_fa_cm * p_spoof * (1.0 - p_miss_spoof_asv);
}

TdcfResult compute_min_tdcf(std::span<const ScoreRecord> records,
                            const TdcfCost& cost) {
  cost.validate();
  const double c1 = cost.c1();
  const double c2 = cost.c2();
  const double norm = std::min(c1, c2);
  if (norm <= 0.0) {
    throw ConfigError(
        "tdcf cost: degenerate weights C1=" + std::to_string(c1) +
        ", C2=" + std::to_string(c2) + " (normalizer must be positive)");
  }
  const Sweep s = build_sweep(records);
  TdcfResult best{std::numeric_limits<double>::infinity(), 0.0};
  for (size_t k = 0; k < s.tau.size(); ++k) {
    const double t = (c1 * s.miss[k] + c2 * s.fa[k]) / norm;
    if (t < best.min_tdcf) {
      best.min_tdcf = t;
      best.threshold = s.tau[k];
    }
  }
  return best;
}

TdcfCost parse_cost_file(const std::string& text) {
  TdcfCost cost;
  std::map<std::string, double*> fields = {
      {"p_target", &cost.p_target},
      {"p_nontarget", &cost.p_nontarget},
      {"p_spoof", &cost.p_spoof},
      {"c_miss_asv", &cost.c_miss_asv},
      {"c_fa_asv", &cost.c_fa_asv},
      {"c_miss_cm", &cost.c_miss_cm},
      {"c_fa_cm", &cost.c_fa_cm},
      {"p_miss_asv", &cost.p_miss_asv},
      {"p_fa_asv", &cost.p_fa_asv},
      {"p_miss_spoof_asv", &cost.p_miss_spoof_asv},
  };
  std::istringstream is(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("cost file line " + std::to_string(line_no) +
                        ": expected key=value, got '" + line + "'");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    const auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(key);
    trim(value);
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw ConfigError("cost file line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    }
    try {
      size_t used = 0;
      *it->second = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::exception&) {
      throw ConfigError("cost file line " + std::to_string(line_no) +
                        ": non-numeric value '" + value + "' for '" + key +
                        "'");
    }
  }
  cost.validate();
  return cost;
}

TdcfCost load_cost_file(const std::string& path) {
  return parse_cost_file(read_file(path, "cost file"));
}

}  // namespace rwr
