#include "revprobe/protoqa.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <thread>

#include "revprobe/error.hpp"
#include "revprobe/probe.hpp"
#include "revprobe/stats.hpp"
#include "revprobe/text.hpp"

namespace revprobe::protoqa {

extern const char* const kStopwordsData;

using nlohmann::json;

namespace {

struct Pattern {
  std::string_view prefix;
  std::string_view replacement;
};

constexpr Pattern kPatterns[] = {
    {"Name something ", "One thing "}, {"Tell me something ", "One thing "}, {"Name an ", "One "},
    {"Name a ", "One "},               {"How can you tell ", "One way to tell "}, {"Give me an ", "One "},
    {"Give me a ", "One "},
};

std::set<std::string> parse_stopwords(std::string_view data) {
  std::set<std::string> out;
  std::size_t start = 0;
  while (start < data.size()) {
    auto end = data.find('\n', start);
    if (end == std::string_view::npos) end = data.size();
    auto line = text::trim(data.substr(start, end - start));
    if (!line.empty() && line.front() != '#') out.insert(text::casefold(line));
    start = end + 1;
  }
  return out;
}

}  // namespace

std::string nl_translate(std::string_view question) {
  const auto q = text::trim(question);
  for (const auto& p : kPatterns) {
    if (!text::starts_with_ci(q, p.prefix)) continue;
    std::string_view rest = q.substr(p.prefix.size());
    while (!rest.empty() && (rest.back() == '?' || rest.back() == '.' || rest.back() == '!' || text::is_space(rest.back())))
      rest.remove_suffix(1);
    return std::string(p.replacement) + std::string(rest) + " is";
  }
  return std::string(q) + " The answer is";
}

lm::DecodingParams sampling_params(std::int64_t base_seed) {
  lm::DecodingParams p;
  p.mode = lm::DecodingMode::sample;
  p.max_tokens = 28;
  p.temperature = 1.0;
  p.top_p = 1.0;
  p.repetition_penalty = 1.0;
  p.stop = {"\n"};
  p.seed = base_seed;
  return p;
}

std::vector<std::string> collect_answers(lm::Backend& backend, std::string_view prompt, std::size_t n,
                                         const lm::DecodingParams& params, std::size_t max_in_flight) {
  if (params.mode != lm::DecodingMode::sample) throw Error(ErrorCode::InvalidArgument, "answer collection samples");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
  std::vector<std::string> out(n);
  std::vector<std::optional<Error>> failures(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      auto p = params;
      p.seed = params.seed + static_cast<std::int64_t>(i);
      try {
        out[i] = probe::normalize(probe::extract_answer(backend.generate(prompt, p).text));
      } catch (const Error& e) {
        failures[i] = e;
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(max_in_flight, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures)
    if (f) throw *f;
  return out;
}

RankedAnswers rank_answers(const std::vector<std::string>& samples, std::size_t limit) {
  std::map<std::string, int> counts;
  for (const auto& s : samples) {
    auto n = probe::normalize(s);
    if (!n.empty()) ++counts[n];
  }
  std::vector<std::pair<std::string, int>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  RankedAnswers out;
  for (std::size_t i = 0; i < order.size() && i < limit; ++i) {
    out.answers.push_back(order[i].first);
    out.counts.push_back(order[i].second);
  }
  return out;
}

std::string_view to_string(MatchMode m) { return m == MatchMode::exact ? "exact" : "wordnet"; }

MatchMode parse_match_mode(std::string_view s) {
  if (s == "exact") return MatchMode::exact;
  if (s == "wordnet") return MatchMode::wordnet;
  throw Error(ErrorCode::ConfigInvalid, "unknown match mode '" + std::string(s) + "'");
}

std::string_view to_string(Metric m) { return m == Metric::max_answers ? "max_answers" : "max_incorrect"; }

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = parse_stopwords(kStopwordsData);
  return words;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_stopwords(data);
}

// ---------------------------------------------------------------------------

Matcher::Matcher(const corpus::WordNetIndex* wn, std::set<std::string> stopwords)
    : wn_(wn), stopwords_(std::move(stopwords)) {}

std::vector<std::string> Matcher::content_tokens(std::string_view s) const {
  std::vector<std::string> out;
  for (auto& tok : text::split_ws(probe::normalize(s))) {
    auto t = probe::normalize(tok);
    if (!t.empty() && !stopwords_.contains(t)) out.push_back(std::move(t));
  }
  return out;
}

bool Matcher::share_synset(const std::string& a, const std::string& b) const {
  for (auto pos : {corpus::Pos::noun, corpus::Pos::verb}) {
    const auto sa = corpus::synsets_of(*wn_, a, pos);
    if (sa.empty()) continue;
    const auto sb = corpus::synsets_of(*wn_, b, pos);
    for (const auto& id : sb)
      if (sa.contains(id)) return true;
  }
  return false;
}

bool Matcher::matches(std::string_view answer, const corpus::AnswerCluster& cluster, MatchMode mode) const {
  const auto a = probe::normalize(answer);
  if (a.empty()) return false;
  for (const auto& s : cluster.answers)
    if (probe::normalize(s) == a) return true;
  if (mode == MatchMode::exact) return false;
  if (!wn_) throw Error(ErrorCode::InvalidArgument, "wordnet matching needs a WordNet index");
  const auto answer_tokens = content_tokens(a);
  for (const auto& s : cluster.answers)
    for (const auto& ct : content_tokens(s))
      for (const auto& at : answer_tokens)
        if (at == ct || share_synset(at, ct)) return true;
  return false;
}

// ---------------------------------------------------------------------------

ScoreReport score_max_answers(const RankedAnswers& ranked, const corpus::ClusterSet& clusters, std::size_t k,
                              MatchMode mode, const Matcher& matcher) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  ScoreReport r;
  r.metric = Metric::max_answers;
  r.k = k;
  r.mode = mode;
  const std::size_t n = std::min(k, ranked.answers.size());
  stats::RewardMatrix m(n, clusters.size());
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = 0; c < clusters.size(); ++c)
      if (matcher.matches(ranked.answers[a], clusters[c], mode)) m.set(a, c, clusters[c].count);
  const auto assignment = stats::max_weight_assignment(m);
  r.matched_pairs = assignment.pairs;
  r.earned = assignment.total;

  std::vector<int> counts;
  for (const auto& c : clusters) counts.push_back(c.count);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  for (std::size_t i = 0; i < counts.size() && i < k; ++i) r.attainable += counts[i];
  r.score = r.attainable > 0 ? r.earned / r.attainable : 0.0;
  return r;
}

ScoreReport score_max_incorrect(const RankedAnswers& ranked, const corpus::ClusterSet& clusters, std::size_t k,
                                MatchMode mode, const Matcher& matcher) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  ScoreReport r;
  r.metric = Metric::max_incorrect;
  r.k = k;
  r.mode = mode;
  std::vector<bool> consumed(clusters.size(), false);
  std::size_t misses = 0;
  for (std::size_t a = 0; a < ranked.answers.size() && misses < k; ++a) {
    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      if (consumed[c] || !matcher.matches(ranked.answers[a], clusters[c], mode)) continue;
      if (!best || clusters[c].count > clusters[*best].count) best = c;
    }
    if (!best) {
      ++misses;
      continue;
    }
    consumed[*best] = true;
    r.earned += clusters[*best].count;
    r.matched_pairs.emplace_back(a, *best);
  }
  for (const auto& c : clusters) r.attainable += c.count;
  r.score = r.attainable > 0 ? r.earned / r.attainable : 0.0;
  return r;
}

json to_json(const ScoreReport& r) {
  nlohmann::ordered_json j;
  j["question_id"] = r.question_id;
  j["metric"] = to_string(r.metric);
  j["k"] = r.k;
  j["mode"] = to_string(r.mode);
  j["score"] = r.score;
  j["earned"] = r.earned;
  j["attainable"] = r.attainable;
  j["matched_pairs"] = r.matched_pairs;
  return j;
}

json to_json(const AnswerRecord& r) {
  nlohmann::ordered_json j;
  j["question_id"] = r.question_id;
  j["prompt"] = r.prompt;
  j["answers"] = r.ranked.answers;
  j["counts"] = r.ranked.counts;
  return j;
}

AnswerRecord answer_record_from_json(const json& j) {
  AnswerRecord r;
  try {
    r.question_id = j.at("question_id").get<std::string>();
    r.prompt = j.value("prompt", std::string());
    r.ranked.answers = j.at("answers").get<std::vector<std::string>>();
    r.ranked.counts = j.at("counts").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  if (r.ranked.answers.size() != r.ranked.counts.size())
    throw Error(ErrorCode::MalformedRecord, r.question_id + ": answers and counts differ in length");
  return r;
}

std::vector<AnswerRecord> load_answer_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
  std::vector<AnswerRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(answer_record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::vector<AnswerRecord> run_protoqa(lm::Backend& backend, const std::vector<corpus::ProtoQAItem>& items,
                                      std::size_t samples, std::int64_t base_seed, std::size_t max_in_flight) {
  std::vector<AnswerRecord> out;
  const auto params = sampling_params(base_seed);
  for (const auto& item : items) {
    AnswerRecord r;
    r.question_id = item.id;
    r.prompt = nl_translate(item.question);
    r.ranked = rank_answers(collect_answers(backend, r.prompt, samples, params, max_in_flight));
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ScoreReport> score_all(const std::vector<AnswerRecord>& answers,
                                   const std::vector<corpus::ProtoQAItem>& items, const std::vector<std::size_t>& ks,
                                   const std::vector<MatchMode>& modes, const Matcher& matcher) {
  std::map<std::string, const corpus::ProtoQAItem*> by_id;
  for (const auto& item : items) by_id[item.id] = &item;
  std::vector<ScoreReport> out;
  for (const auto& rec : answers) {
    auto it = by_id.find(rec.question_id);
    if (it == by_id.end()) throw Error(ErrorCode::MissingRow, "no ProtoQA item '" + rec.question_id + "'");
    for (auto metric : {Metric::max_answers, Metric::max_incorrect})
      for (auto k : ks)
        for (auto mode : modes) {
          auto r = metric == Metric::max_answers ? score_max_answers(rec.ranked, it->second->clusters, k, mode, matcher)
                                                 : score_max_incorrect(rec.ranked, it->second->clusters, k, mode, matcher);
          r.question_id = rec.question_id;
          out.push_back(std::move(r));
        }
  }
  return out;
}

std::string aggregate_csv(const std::vector<ScoreReport>& reports) {
  std::map<std::tuple<int, std::size_t, int>, std::pair<double, std::size_t>> groups;
  for (const auto& r : reports) {
    auto& [sum, n] = groups[{static_cast<int>(r.metric), r.k, static_cast<int>(r.mode)}];
    sum += r.score;
    ++n;
  }
  std::string out = "metric,k,mode,score,n\n";
  char buf[64];
  for (const auto& [key, agg] : groups) {
    std::snprintf(buf, sizeof buf, ",%.6f,%zu\n", agg.first / static_cast<double>(agg.second), agg.second);
    out += std::string(to_string(static_cast<Metric>(std::get<0>(key)))) + "," + std::to_string(std::get<1>(key)) +
           "," + std::string(to_string(static_cast<MatchMode>(std::get<2>(key)))) + buf;
  }
  return out;
}

}  // namespace revprobe::protoqa
