#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rwr {

enum class Label { kSpoof = 0, kBonafide = 1 };

// Class index used for logits/labels everywhere: spoof = 0, bonafide = 1.
inline int label_index(Label l) { return static_cast<int>(l); }

inline const char* label_name(Label l) {
  return l == Label::kBonafide ? "bonafide" : "spoof";
}

struct Trial {
  std::string utt_id;
  Label label = Label::kSpoof;
  std::string attack_id;  // "-" for bonafide
};

struct TrialSet {
  std::vector<Trial> trials;
  std::string root;  // path prefix for audio files, empty for in-memory sets
};

// Parses ASVspoof-style protocol text: one trial per line, five
// whitespace-separated columns (speaker_id utt_id unused attack_id key),
// key in {bonafide, spoof}. LF or CRLF line endings; blank lines skipped.
// Malformed lines and duplicate utt_ids raise DataError with the line number.
TrialSet parse_protocol(std::string_view text);

TrialSet load_protocol_file(const std::string& path);

// Emits the same 5-column format (speaker column written as given).
std::string format_protocol(const TrialSet& set,
                            const std::vector<std::string>& speaker_ids);

}  // namespace rwr
