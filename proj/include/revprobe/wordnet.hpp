#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace revprobe::corpus {

enum class Pos : std::uint8_t { noun, verb, adj, adv };

std::string_view to_string(Pos p);
char pos_letter(Pos p);

/// A synset is identified by its part of speech and its byte offset in
/// the matching data.<pos> file.
struct SynsetId {
  Pos pos = Pos::noun;
  std::uint32_t offset = 0;

  auto operator<=>(const SynsetId&) const = default;
  /// "n:02084071"
  std::string str() const;
};

/// Lemma <-> synset membership read from the WNDB database files.
/// Lemmas are stored case-folded with underscores replaced by spaces.
class WordNetIndex {
 public:
  using LemmaKey = std::pair<std::string, Pos>;

  const std::map<LemmaKey, std::set<SynsetId>>& lemma_to_synsets() const noexcept { return lemma_to_synsets_; }
  const std::map<SynsetId, std::set<std::string>>& synset_to_lemmas() const noexcept { return synset_to_lemmas_; }
  const std::map<SynsetId, std::string>& synset_gloss() const noexcept { return synset_gloss_; }

  std::optional<std::string> gloss(SynsetId id) const;
  std::size_t lemma_count() const noexcept { return lemma_to_synsets_.size(); }
  std::size_t synset_count() const noexcept { return synset_to_lemmas_.size(); }

  /// Returns an empty string when the membership maps are mutually
  /// consistent, otherwise a description of the first violation.
  std::string check_symmetry() const;

 private:
  friend WordNetIndex load_wordnet(const std::filesystem::path& db_dir);

  std::map<LemmaKey, std::set<SynsetId>> lemma_to_synsets_;
  std::map<SynsetId, std::set<std::string>> synset_to_lemmas_;
  std::map<SynsetId, std::string> synset_gloss_;
};

/// Parses index.<pos> and data.<pos> for every POS present; index.noun and
/// data.noun are required. Data-line offsets must equal their byte offset
/// and every index entry must reference a synset listing that lemma.
WordNetIndex load_wordnet(const std::filesystem::path& db_dir);

/// Case-insensitive lookup; pos = nullopt unions over all parts of speech.
/// Underscores in the query are treated as spaces.
std::set<SynsetId> synsets_of(const WordNetIndex& index, std::string_view token,
                              std::optional<Pos> pos = std::nullopt);

}  // namespace revprobe::corpus
