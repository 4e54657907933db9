#include "metrics/score_io.hpp"

#include <cmath>
#include <cstdio>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {

std::string format_scores(std::span<const ScoreRecord> records) {
  std::string out;
  char buf[64];
  for (const ScoreRecord& r : records) {
    if (!std::isfinite(r.score)) {
      throw DataError("scores: non-finite score for '" + r.utt_id + "'");
    }
    std::snprintf(buf, sizeof(buf), " %.6f\n", r.score);
    out += r.utt_id;
    out += buf;
  }
  return out;
}

std::vector<ScoreRecord> parse_scores(std::string_view text) {
  std::vector<ScoreRecord> records;
  size_t pos = 0;
  size_t line_no = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const size_t sep = line.find_last_of(" \t");
    if (sep == std::string_view::npos || sep == 0) {
      throw DataError("score file line " + std::to_string(line_no) +
                      ": expected 'utt_id score'");
    }
    ScoreRecord r;
    r.utt_id = std::string(line.substr(0, sep));
    const size_t id_end = r.utt_id.find_last_not_of(" \t");
    if (id_end == std::string::npos) {
      throw DataError("score file line " + std::to_string(line_no) +
                      ": empty utt_id");
    }
    r.utt_id.resize(id_end + 1);
    const std::string score_str(line.substr(sep + 1));
    try {
      size_t used = 0;
      r.score = std::stod(score_str, &used);
      if (used != score_str.size()) throw std::invalid_argument(score_str);
    } catch (const std::exception&) {
      throw DataError("score file line " + std::to_string(line_no) +
                      ": non-numeric score '" + score_str + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_scores_file(const std::string& path,
                       std::span<const ScoreRecord> records) {
  write_file_atomic(path, format_scores(records), "score file");
}

std::vector<ScoreRecord> load_scores_file(const std::string& path) {
  return parse_scores(read_file(path, "score file"));
}

std::string metrics_report_csv(const EerResult& eer, const TdcfResult& tdcf) {
  char buf[160];
  std::string out = "metric,value,threshold\n";
  std::snprintf(buf, sizeof(buf), "eer,%.6f,%.6f\n", eer.eer * 100.0,
                eer.threshold);
  out += buf;
  std::snprintf(buf, sizeof(buf), "min_tdcf,%.6f,%.6f\n", tdcf.min_tdcf,
                tdcf.threshold);
  out += buf;
  return out;
}

}  // namespace rwr
