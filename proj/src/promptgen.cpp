#include "revprobe/promptgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "revprobe/error.hpp"
#include "revprobe/rng.hpp"
#include "revprobe/text.hpp"

namespace revprobe::promptgen {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::Demo: return "Demo";
    case Condition::NL: return "NL";
    case Condition::Mis: return "Mis";
    case Condition::Rand: return "Rand";
    case Condition::W2W: return "W2W";
    case Condition::WordOnly: return "WordOnly";
    case Condition::DescriptionOnly: return "DescriptionOnly";
  }
  return "Demo";
}

Condition parse_condition(std::string_view s) {
  for (auto c : {Condition::Demo, Condition::NL, Condition::Mis, Condition::Rand, Condition::W2W,
                 Condition::WordOnly, Condition::DescriptionOnly})
    if (text::casefold(s) == text::casefold(to_string(c))) return c;
  if (s == "Word") return Condition::WordOnly;
  if (s == "Description" || s == "Descr") return Condition::DescriptionOnly;
  throw Error(ErrorCode::InvalidArgument, "unknown condition '" + std::string(s) + "'");
}

bool uses_demonstrations(Condition c) {
  return c == Condition::Demo || c == Condition::Mis || c == Condition::Rand || c == Condition::W2W;
}

std::vector<std::size_t> sample_indices(const corpus::ConceptSet& set, std::size_t n, std::uint64_t seed,
                                        std::optional<std::string_view> exclude_id) {
  std::vector<std::size_t> candidates;
  candidates.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    if (!exclude_id || set[i].id != *exclude_id) candidates.push_back(i);
  if (n > candidates.size())
    throw Error(ErrorCode::NotEnoughConcepts,
                "requested " + std::to_string(n) + " of " + std::to_string(candidates.size()) + " concepts");
  SplitMix64 rng(seed);
  seeded_prefix_sample(std::span(candidates), n, rng);
  candidates.resize(n);
  return candidates;
}

std::vector<DemoPair> sample_demonstrations(const corpus::ConceptSet& set, std::size_t n, std::uint64_t seed,
                                            std::optional<std::string_view> exclude_id) {
  std::vector<DemoPair> out;
  for (auto i : sample_indices(set, n, seed, exclude_id)) out.push_back({set[i].description, set[i].lemma});
  return out;
}

std::vector<DemoPair> corrupt_mis(const std::vector<DemoPair>& pairs, const std::set<std::string>& vocab,
                                  std::uint64_t seed) {
  std::set<std::string> originals;
  for (const auto& p : pairs) originals.insert(p.target);
  std::vector<std::string> pool;
  for (const auto& w : vocab)
    if (!originals.contains(w)) pool.push_back(w);
  if (pool.size() < pairs.size())
    throw Error(ErrorCode::VocabTooSmall, std::to_string(pool.size()) + " replacement words for " +
                                              std::to_string(pairs.size()) + " demonstrations");
  SplitMix64 rng(seed);
  seeded_prefix_sample(std::span(pool), pairs.size(), rng);
  std::vector<DemoPair> out;
  out.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out.push_back({pairs[i].cue, pool[i]});
  return out;
}

DatasetPermutation permute_dataset(const corpus::ConceptSet& set, std::uint64_t seed) {
  if (set.size() < 2) throw Error(ErrorCode::NotEnoughConcepts, "permutation needs at least 2 concepts");
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  seeded_shuffle(std::span(order), rng);
  DatasetPermutation out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& word = set[order[i]].lemma;
    out.target_of[set[i].id] = word;
    if (word == set[i].lemma) ++out.fixed_points;
  }
  return out;
}

std::string query_text(const corpus::Concept& query, Condition condition) {
  switch (condition) {
    case Condition::W2W:
    case Condition::WordOnly: return query.lemma;
    default: return query.description;
  }
}

RenderedPrompt render_prompt(const std::vector<DemoPair>& pairs, const corpus::Concept& query, Condition condition,
                             const PromptFormat& format) {
  const bool demos = uses_demonstrations(condition);
  if (demos == pairs.empty())
    throw Error(ErrorCode::ConditionMismatch, std::string(to_string(condition)) +
                                                  (demos ? " requires demonstrations" : " takes no demonstrations"));
  RenderedPrompt out;
  out.query_id = query.id;
  out.condition = condition;
  out.n_demos = pairs.size();

  switch (condition) {
    case Condition::NL: out.text = query.description + format.nl_suffix; return out;
    case Condition::WordOnly: out.text = query.lemma; return out;
    case Condition::DescriptionOnly: out.text = query.description; return out;
    default: break;
  }

  for (const auto& p : pairs) {
    out.text += p.cue;
    out.text += ' ';
    out.text += format.arrow;
    out.text += ' ';
    out.text += p.target;
    out.text += '\n';
  }
  out.text += query_text(query, condition);
  out.marker_offset = out.text.size();
  out.text += ' ';
  out.text += format.arrow;
  return out;
}

std::string permute_words(std::string_view description, double ratio, std::uint64_t seed) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorCode::InvalidArgument, "ratio must lie in [0, 1]");
  if (ratio == 0.0) return std::string(description);
  auto words = text::split_ws(description);
  const std::size_t total = words.size();
  // The epsilon keeps products such as 0.3 * 10 from rounding up to 4.
  const auto k = std::min(total, static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(total) - 1e-9)));

  std::vector<std::size_t> positions(total);
  std::iota(positions.begin(), positions.end(), 0);
  SplitMix64 rng(seed);
  seeded_prefix_sample(std::span(positions), k, rng);
  positions.resize(k);
  std::sort(positions.begin(), positions.end());

  std::vector<std::string> chosen;
  chosen.reserve(k);
  for (auto p : positions) chosen.push_back(words[p]);
  seeded_shuffle(std::span(chosen), rng);
  for (std::size_t i = 0; i < k; ++i) words[positions[i]] = std::move(chosen[i]);
  return text::join(words, " ");
}

}  // namespace revprobe::promptgen
