#include <algorithm>
#include <set>

#include "revprobe/error.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/rng.hpp"
#include "revprobe/text.hpp"

namespace revprobe::lm {

void OracleSpec::validate() const {
  if (!(correct_prob >= 0.0 && correct_prob <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "correct_prob must lie in [0, 1]");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_sigma must be >= 0");
  if (!(token_logprob <= 0.0)) throw Error(ErrorCode::InvalidArgument, "token_logprob must be <= 0");
  std::size_t dim = 0;
  for (const auto& [name, c] : centroids) {
    if (c.empty()) throw Error(ErrorCode::InvalidArgument, "centroid '" + name + "' is empty");
    if (dim != 0 && c.size() != dim) throw Error(ErrorCode::InvalidArgument, "centroids differ in dimension");
    dim = c.size();
  }
  for (const auto& [w, weight] : sample_answers)
    if (!(weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "sample weight for '" + w + "' must be > 0");
}

std::size_t OracleSpec::hidden_size() const { return centroids.empty() ? 1 : centroids.begin()->second.size(); }

std::vector<std::string> oracle_tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '\n') {
      out.emplace_back("\n");
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && s[j] != '\n' && text::is_space(s[j])) ++j;
    while (j < s.size() && !text::is_space(s[j])) ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

OracleBackend::OracleBackend(OracleSpec spec, std::string id) : spec_(std::move(spec)) {
  spec_.validate();
  descriptor_.id = std::move(id);
  descriptor_.kind = BackendKind::oracle;
  descriptor_.hidden_size = spec_.hidden_size();
  descriptor_.max_context = 1u << 20;
  std::set<std::string> vocab;
  for (const auto& [q, target] : spec_.answer_map) vocab.insert(target);
  vocabulary_.assign(vocab.begin(), vocab.end());
}

std::string OracleBackend::query_of(std::string_view prompt) const {
  if (auto nl = prompt.rfind('\n'); nl != std::string_view::npos) prompt = prompt.substr(nl + 1);
  if (prompt.starts_with(kBosSentinel)) prompt.remove_prefix(kBosSentinel.size());
  const std::string arrow_suffix = " " + spec_.arrow;
  if (prompt.ends_with(arrow_suffix)) {
    prompt.remove_suffix(arrow_suffix.size());
  } else if (!spec_.nl_suffix.empty() && prompt.ends_with(spec_.nl_suffix)) {
    prompt.remove_suffix(spec_.nl_suffix.size());
  }
  return std::string(text::trim(prompt));
}

std::string OracleBackend::answer_for(const std::string& query, const DecodingParams& params) const {
  std::uint64_t stream = fnv1a(query);
  if (params.mode == DecodingMode::sample) stream = derive_seed(stream, static_cast<std::uint64_t>(params.seed));
  SplitMix64 rng(derive_seed(spec_.seed, stream));

  if (params.mode == DecodingMode::sample && !spec_.sample_answers.empty()) {
    double total = 0.0;
    for (const auto& [w, weight] : spec_.sample_answers) total += weight;
    double u = rng.uniform() * total;
    for (const auto& [w, weight] : spec_.sample_answers) {
      if (u < weight) return w;
      u -= weight;
    }
    return spec_.sample_answers.back().first;
  }

  auto it = spec_.answer_map.find(query);
  if (it == spec_.answer_map.end()) return "unknown";
  if (rng.uniform() < spec_.correct_prob) return it->second;
  std::vector<const std::string*> distractors;
  for (const auto& w : vocabulary_)
    if (w != it->second) distractors.push_back(&w);
  if (distractors.empty()) return it->second + "s";
  return *distractors[rng.below(distractors.size())];
}

GenerationResult OracleBackend::generate(std::string_view prompt, const DecodingParams& params) {
  params.validate();
  const auto word = answer_for(query_of(prompt), params);

  std::vector<std::string> pieces = oracle_tokenize(word);
  pieces.emplace_back("\n");
  while (pieces.size() < static_cast<std::size_t>(params.max_tokens)) pieces.emplace_back(" next");

  GenerationResult out;
  for (const auto& piece : pieces) {
    if (out.tokens.size() == static_cast<std::size_t>(params.max_tokens)) break;
    out.text += piece;
    out.tokens.push_back({piece, spec_.token_logprob});
    if (auto cut = find_stop(out.text, params.stop)) {
      const auto excess = out.text.size() - *cut;
      out.text.resize(*cut);
      out.tokens.back().text.resize(out.tokens.back().text.size() - excess);
      out.finish = FinishReason::stop;
      return out;
    }
  }
  out.finish = FinishReason::length;
  return out;
}

ScoreResult OracleBackend::score_continuation(std::string_view, std::string_view continuation) {
  if (continuation.empty()) throw Error(ErrorCode::InvalidArgument, "continuation must be nonempty");
  ScoreResult out;
  for (std::size_t i = 0, n = oracle_tokenize(continuation).size(); i < n; ++i) {
    out.per_token.push_back(spec_.token_logprob);
    out.total += spec_.token_logprob;
  }
  return out;
}

HiddenVector OracleBackend::final_hidden(std::string_view prompt) {
  if (prompt.empty()) throw Error(ErrorCode::InvalidArgument, "prompt must be nonempty");
  const auto query = query_of(prompt);
  auto cat = spec_.category_map.find(query);
  if (cat == spec_.category_map.end())
    throw Error(ErrorCode::ProtocolError, "oracle has no category for query '" + query + "'");
  auto centroid = spec_.centroids.find(cat->second);
  if (centroid == spec_.centroids.end())
    throw Error(ErrorCode::ProtocolError, "oracle has no centroid for category '" + cat->second + "'");

  HiddenVector out;
  out.values = centroid->second;
  if (spec_.noise_sigma > 0.0) {
    SplitMix64 rng(derive_seed(spec_.seed ^ 0x6869646465ULL, fnv1a(query)));
    for (auto& v : out.values) v += spec_.noise_sigma * rng.normal();
  }
  return out;
}

}  // namespace revprobe::lm
