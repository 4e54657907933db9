#include "audio/protocol.hpp"

#include <unordered_set>

#include "common/error.hpp"
#include "common/fileio.hpp"

namespace rwr {

TrialSet parse_protocol(std::string_view text) {
  TrialSet set;
  std::unordered_set<std::string> seen;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    std::vector<std::string> cols;
    size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
      if (i > start) cols.emplace_back(line.substr(start, i - start));
    }
    if (cols.empty()) continue;  // blank line
    if (cols.size() != 5) {
      throw DataError("protocol line " + std::to_string(line_no) + ": found " +
                      std::to_string(cols.size()) + " columns, want 5");
    }
    Trial t;
    t.utt_id = cols[1];
    t.attack_id = cols[3];
    if (cols[4] == "bonafide") {
      t.label = Label::kBonafide;
    } else if (cols[4] == "spoof") {
      t.label = Label::kSpoof;
    } else {
      throw DataError("protocol line " + std::to_string(line_no) + ": key '" +
                      cols[4] + "' is neither bonafide nor spoof");
    }
    if (t.utt_id.empty()) {
      throw DataError("protocol line " + std::to_string(line_no) +
                      ": empty utt_id");
    }
    if (!seen.insert(t.utt_id).second) {
      throw DataError("protocol line " + std::to_string(line_no) +
                      ": duplicate utt_id '" + t.utt_id + "'");
    }
    set.trials.push_back(std::move(t));
  }
  return set;
}

TrialSet load_protocol_file(const std::string& path) {
  return parse_protocol(read_file(path, "protocol"));
}

std::string format_protocol(const TrialSet& set,
                            const std::vector<std::string>& speaker_ids) {
  if (speaker_ids.size() != set.trials.size()) {
    throw DataError("protocol: " + std::to_string(speaker_ids.size()) +
                    " speaker ids for " + std::to_string(set.trials.size()) +
                    " trials");
  }
  std::string out;
  for (size_t i = 0; i < set.trials.size(); ++i) {
    const Trial& t = set.trials[i];
    out += speaker_ids[i];
    out += ' ';
    out += t.utt_id;
    out += " - ";
    out += t.attack_id;
    out += ' ';
    out += label_name(t.label);
    out += '\n';
  }
  return out;
}

}  // namespace rwr
