#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "revprobe/corpus.hpp"

namespace revprobe::promptgen {

/// Experimental condition carried by every trial.
///   Demo            description => word demonstrations
///   NL              "<description> can be called as", no demonstrations
///   Mis             demonstrations whose words are replaced by unrelated words
///   Rand            demonstrations and query paired with a dataset-wide permutation of words
///   W2W             word => word repetition demonstrations
///   WordOnly        the bare word
///   DescriptionOnly the bare description, cut before the delimiter
enum class Condition { Demo, NL, Mis, Rand, W2W, WordOnly, DescriptionOnly };

std::string_view to_string(Condition c);
Condition parse_condition(std::string_view s);

/// True for the conditions whose prompt consists of demonstration lines.
bool uses_demonstrations(Condition c);

struct DemoPair {
  std::string cue;
  std::string target;

  bool operator==(const DemoPair&) const = default;
};

/// Delimiter configuration. The default arrow is U+21D2; an ASCII "=>"
/// format exists for backends whose tokenizers handle it better.
struct PromptFormat {
  std::string arrow = "⇒";
  std::string nl_suffix = " can be called as";

  static PromptFormat ascii() { return PromptFormat{"=>", " can be called as"}; }
};

struct RenderedPrompt {
  std::string text;
  std::string query_id;
  Condition condition = Condition::Demo;
  std::uint64_t seed = 0;
  std::size_t n_demos = 0;
  /// Byte index of the final delimiter (its leading space); absent for
  /// NL, WordOnly and DescriptionOnly.
  std::optional<std::size_t> marker_offset;
};

/// Indices into `set` of n concepts drawn without replacement; exclusion
/// is by id. Draw order is the order of a partial Fisher-Yates pass over the
/// id-ordered candidates with SplitMix64(seed).
std::vector<std::size_t> sample_indices(const corpus::ConceptSet& set, std::size_t n, std::uint64_t seed,
                                        std::optional<std::string_view> exclude_id = std::nullopt);

/// n (description, lemma) pairs drawn as in sample_indices.
std::vector<DemoPair> sample_demonstrations(const corpus::ConceptSet& set, std::size_t n, std::uint64_t seed,
                                            std::optional<std::string_view> exclude_id = std::nullopt);

/// Replace each target with a distinct seeded draw from vocab minus every
/// original target.
std::vector<DemoPair> corrupt_mis(const std::vector<DemoPair>& pairs, const std::set<std::string>& vocab,
                                  std::uint64_t seed);

struct DatasetPermutation {
  std::map<std::string, std::string> target_of;  // concept id -> permuted word
  std::size_t fixed_points = 0;                   // ids that kept their own lemma
};

/// Seeded shuffle of all lemmas over all ids (not forced to be a derangement).
DatasetPermutation permute_dataset(const corpus::ConceptSet& set, std::uint64_t seed);

/// Builds the exact prompt bytes for a condition. Demonstration lines are
/// "<cue> <arrow> <target>", the query line is "<description> <arrow>"
/// (lemma for W2W) with no trailing space.
RenderedPrompt render_prompt(const std::vector<DemoPair>& pairs, const corpus::Concept& query, Condition condition,
                             const PromptFormat& format = {});

/// The text a condition puts on the query line before the delimiter.
std::string query_text(const corpus::Concept& query, Condition condition);

/// Shuffle ceil(ratio * W) seeded word positions among themselves. Words
/// are rejoined with single spaces; ratio 0 returns the input unchanged.
std::string permute_words(std::string_view description, double ratio, std::uint64_t seed);

}  // namespace revprobe::promptgen
