#pragma once

#include <span>
#include <string>
#include <vector>

namespace rwr {

// Detection scores are oriented so that higher means more bonafide.
struct ScoreRecord {
  std::string utt_id;
  double score = 0.0;
  int label = -1;  // 1 bonafide, 0 spoof, -1 unknown
};

// Log-likelihood-ratio score from 2-class logits. The log-softmax difference
// collapses to the raw logit difference, which is the overflow-free form.
inline double detection_score(double spoof_logit, double bonafide_logit) {
  return bonafide_logit - spoof_logit;
}

struct EerResult {
  double eer;        // in [0, 1]
  double threshold;  // interpolated crossing point
};

// Threshold sweep with the decision rule "score >= tau => bonafide".
// miss = bonafide rejected, false alarm = spoof accepted; the crossing of the
// two step functions is located by linear interpolation between adjacent
// sweep points. Needs at least one record of each class.
EerResult compute_eer(std::span<const ScoreRecord> records);

// Cost model and fixed ASV operating point for the normalized tandem
// detection cost. Priors and costs default to the ASVspoof2019 LA evaluation
// values; the ASV error rates have no defaults and must be supplied.
struct TdcfCost {
  double p_target = 0.9405;
  double p_nontarget = 0.0095;
  double p_spoof = 0.05;
  double c_miss_asv = 1.0;
  double c_fa_asv = 10.0;
  double c_miss_cm = 1.0;
  double c_fa_cm = 10.0;
  double p_miss_asv = -1.0;
  double p_fa_asv = -1.0;
  double p_miss_spoof_asv = -1.0;

  void validate() const;
  // C1 weights the CM miss rate, C2 the CM false-alarm rate.
  double c1() const;
  double c2() const;
};

struct TdcfResult {
  double min_tdcf;
  double threshold;
};

// Minimum over the CM threshold sweep of
//   (C1 * p_miss_cm + C2 * p_fa_cm) / min(C1, C2).
// Degenerate costs (min(C1,C2) <= 0) are rejected.
TdcfResult compute_min_tdcf(std::span<const ScoreRecord> records,
                            const TdcfCost& cost);

// key=value lines with '#' comments; unknown keys rejected.
TdcfCost parse_cost_file(const std::string& text);
TdcfCost load_cost_file(const std::string& path);

}  // namespace rwr
