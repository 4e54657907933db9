#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metrics/metrics.hpp"

namespace rwr {

// One "utt_id score" line per record, score at 6 decimal places.
std::string format_scores(std::span<const ScoreRecord> records);

// Parses score lines; labels come back unknown. Malformed lines raise
// DataError with the line number.
std::vector<ScoreRecord> parse_scores(std::string_view text);

void write_scores_file(const std::string& path,
                       std::span<const ScoreRecord> records);
std::vector<ScoreRecord> load_scores_file(const std::string& path);

// "metric,value,threshold" CSV with eer (percent) and min_tdcf rows.
std::string metrics_report_csv(const EerResult& eer, const TdcfResult& tdcf);

}  // namespace rwr
