#include "revprobe/probe.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <thread>

#include "revprobe/rng.hpp"
#include "revprobe/stats.hpp"
#include "revprobe/text.hpp"

namespace revprobe::probe {

using nlohmann::json;
using nlohmann::ordered_json;
using promptgen::Condition;

std::string extract_answer(std::string_view raw) {
  if (auto nl = raw.find('\n'); nl != std::string_view::npos) raw = raw.substr(0, nl);
  return std::string(text::trim(raw));
}

namespace {

bool is_edge_punct(char c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?' || c == '"' || c == '\'';
}

}  // namespace

std::string normalize(std::string_view s) {
  const auto folded = text::casefold(s);
  std::string_view v = folded;
  while (!v.empty() && (text::is_space(v.front()) || is_edge_punct(v.front()))) v.remove_prefix(1);
  while (!v.empty() && (text::is_space(v.back()) || is_edge_punct(v.back()))) v.remove_suffix(1);
  return text::join(text::split_ws(v), " ");
}

bool is_match(std::string_view answer, const std::set<std::string>& expected) {
  const auto a = normalize(answer);
  if (a.empty()) return false;
  return std::any_of(expected.begin(), expected.end(), [&](const std::string& e) { return normalize(e) == a; });
}

// ---------------------------------------------------------------------------

json to_json(const TrialRecord& r) {
  ordered_json j;
  j["model_id"] = r.model_id;
  j["condition"] = promptgen::to_string(r.condition);
  j["n_demos"] = r.n_demos;
  j["run_seed"] = r.run_seed;
  j["permute_ratio"] = r.permute_ratio;
  j["concept_id"] = r.concept_id;
  j["prompt_digest"] = r.prompt_digest;
  j["raw_completion"] = r.raw_completion;
  j["answer"] = r.answer;
  j["matched"] = r.matched;
  j["expected"] = r.expected;
  return j;
}

TrialRecord trial_from_json(const json& j) {
  TrialRecord r;
  try {
    r.model_id = j.at("model_id").get<std::string>();
    r.condition = promptgen::parse_condition(j.at("condition").get<std::string>());
    r.n_demos = j.at("n_demos").get<std::size_t>();
    r.run_seed = j.at("run_seed").get<std::uint64_t>();
    r.permute_ratio = j.value("permute_ratio", 0.0);
    r.concept_id = j.at("concept_id").get<std::string>();
    r.prompt_digest = j.value("prompt_digest", std::string());
    r.raw_completion = j.value("raw_completion", std::string());
    r.answer = j.at("answer").get<std::string>();
    r.matched = j.at("matched").get<bool>();
    r.expected = j.at("expected").get<std::set<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  return r;
}

std::string to_jsonl(const std::vector<TrialRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<TrialRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
  std::vector<TrialRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(trial_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.string() + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

RunDemonstrations::RunDemonstrations(const corpus::ConceptSet& set, Condition condition, std::size_t n_demos,
                                     std::uint64_t run_seed, const promptgen::DatasetPermutation* permutation)
    : n_demos_(n_demos) {
  if (!promptgen::uses_demonstrations(condition) || n_demos == 0) return;
  const std::size_t draw = std::min(n_demos + 1, set.size());
  if (draw < n_demos) throw Error(ErrorCode::NotEnoughConcepts, "fewer concepts than demonstrations");
  for (auto i : promptgen::sample_indices(set, draw, run_seed)) {
    const auto& c = set[i];
    ids_.push_back(c.id);
    switch (condition) {
      case Condition::W2W: pairs_.push_back({c.lemma, c.lemma}); break;
      case Condition::Rand:
        if (!permutation) throw Error(ErrorCode::InvalidArgument, "Rand demonstrations need a permutation");
        pairs_.push_back({c.description, permutation->target_of.at(c.id)});
        break;
      default: pairs_.push_back({c.description, c.lemma}); break;
    }
  }
  if (condition == Condition::Mis) {
    std::set<std::string> vocab;
    for (const auto& c : set) vocab.insert(c.lemma);
    pairs_ = promptgen::corrupt_mis(pairs_, vocab, derive_seed(run_seed, 1));
  }
}

std::vector<promptgen::DemoPair> RunDemonstrations::for_query(const corpus::Concept& query) const {
  std::vector<promptgen::DemoPair> out;
  out.reserve(n_demos_);
  for (std::size_t i = 0; i < ids_.size() && out.size() < n_demos_; ++i)
    if (ids_[i] != query.id) out.push_back(pairs_[i]);
  if (out.size() < n_demos_ && !ids_.empty())
    throw Error(ErrorCode::NotEnoughConcepts, "not enough concepts to exclude the query from its demonstrations");
  return out;
}

std::vector<TrialRecord> run_probe(lm::Backend& backend, const corpus::ConceptSet& set, const ProbeConfig& config) {
  const bool demos = promptgen::uses_demonstrations(config.condition);
  if (demos != (config.n_demos > 0))
    throw Error(ErrorCode::ConditionMismatch, std::string(promptgen::to_string(config.condition)) +
                                                  (demos ? " requires n_demos >= 1" : " requires n_demos = 0"));
  if (!(config.permute_ratio >= 0.0 && config.permute_ratio <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "permute_ratio must lie in [0, 1]");

  const std::string model_id = config.model_id.value_or(backend.descriptor().id);
  lm::DecodingParams params;
  params.max_tokens = 28;
  params.stop = {"\n"};
  params.mode = lm::DecodingMode::greedy;

  std::vector<TrialRecord> all;
  all.reserve(set.size() * config.runs);
  for (std::size_t r = 0; r < config.runs; ++r) {
    const std::uint64_t run_seed = config.base_seed + r;
    std::optional<promptgen::DatasetPermutation> permutation;
    if (config.condition == Condition::Rand) permutation = promptgen::permute_dataset(set, run_seed);
    const RunDemonstrations demonstrations(set, config.condition, config.n_demos, run_seed,
                                           permutation ? &*permutation : nullptr);

    // Prompts are built up front so rendering errors surface before any
    // backend call.
    std::vector<promptgen::RenderedPrompt> prompts;
    std::vector<std::set<std::string>> expected;
    prompts.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
      corpus::Concept query = set[i];
      if (config.permute_ratio > 0.0)
        query.description =
            promptgen::permute_words(query.description, config.permute_ratio, derive_seed(derive_seed(run_seed, 2), i));
      auto prompt = promptgen::render_prompt(demonstrations.for_query(query), query, config.condition, config.format);
      prompt.seed = run_seed;
      prompts.push_back(std::move(prompt));
      if (permutation) {
        expected.push_back({permutation->target_of.at(query.id)});
      } else {
        expected.push_back(query.expected_answers());
      }
    }

    std::vector<std::optional<TrialRecord>> slots(set.size());
    std::vector<std::optional<Error>> failures(set.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= set.size()) return;
        try {
          auto gen = backend.generate(prompts[i].text, params);
          TrialRecord rec;
          rec.model_id = model_id;
          rec.condition = config.condition;
          rec.n_demos = config.n_demos;
          rec.run_seed = run_seed;
          rec.permute_ratio = config.permute_ratio;
          rec.concept_id = set[i].id;
          rec.prompt_digest = lm::sha256_hex(prompts[i].text);
          rec.raw_completion = gen.text;
          rec.answer = extract_answer(gen.text);
          rec.expected = expected[i];
          rec.matched = is_match(rec.answer, rec.expected);
          slots[i] = std::move(rec);
        } catch (const Error& e) {
          failures[i] = e;
          failed = true;
        }
      }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(config.max_in_flight, set.size()));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    for (std::size_t i = 0; i < set.size(); ++i) {
      if (failures[i]) {
        throw ProbeAborted(*failures[i], "run " + std::to_string(r) + " concept " + set[i].id, std::move(all));
      }
      if (!slots[i]) {
        // Skipped after another trial failed; the failing trial follows.
        continue;
      }
      all.push_back(std::move(*slots[i]));
    }
  }
  return all;
}

// ---------------------------------------------------------------------------

std::vector<AccuracyReport> accuracy_report(const std::vector<TrialRecord>& records, std::size_t resamples,
                                            double level, std::uint64_t seed) {
  if (records.empty()) throw Error(ErrorCode::EmptyGroup, "no records to report");
  using Key = std::tuple<std::string, int, std::size_t>;
  std::map<Key, std::map<std::string, std::pair<std::size_t, std::size_t>>> groups;
  for (const auto& r : records) {
    auto& [matched, total] = groups[{r.model_id, static_cast<int>(r.condition), r.n_demos}][r.concept_id];
    matched += r.matched ? 1 : 0;
    total += 1;
  }
  std::vector<AccuracyReport> out;
  for (const auto& [key, per_concept] : groups) {
    std::vector<double> matched, totals;
    for (const auto& [id, mt] : per_concept) {
      matched.push_back(static_cast<double>(mt.first));
      totals.push_back(static_cast<double>(mt.second));
    }
    AccuracyReport rep;
    rep.model_id = std::get<0>(key);
    rep.condition = static_cast<Condition>(std::get<1>(key));
    rep.n_demos = std::get<2>(key);
    double m = 0.0, t = 0.0;
    for (std::size_t i = 0; i < matched.size(); ++i) {
      m += matched[i];
      t += totals[i];
    }
    rep.mean = m / t;
    rep.n_trials = static_cast<std::size_t>(t);
    const auto ci = stats::bootstrap_percentile(
        matched.size(),
        [&](std::span<const std::size_t> idx) {
          double mm = 0.0, tt = 0.0;
          for (auto i : idx) {
            mm += matched[i];
            tt += totals[i];
          }
          return mm / tt;
        },
        resamples, level, seed);
    rep.ci_lo = std::min(ci.lo, rep.mean);
    rep.ci_hi = std::max(ci.hi, rep.mean);
    out.push_back(rep);
  }
  return out;
}

std::string to_csv(const std::vector<AccuracyReport>& reports) {
  std::string out = "model,condition,n_demos,mean,ci_lo,ci_hi,n\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, ",%zu,%.6f,%.6f,%.6f,%zu\n", r.n_demos, r.mean, r.ci_lo, r.ci_hi, r.n_trials);
    out += r.model_id;
    out += ',';
    out += promptgen::to_string(r.condition);
    out += buf;
  }
  return out;
}

// ---------------------------------------------------------------------------

void MCItem::validate() const {
  if (candidates.size() < 2) throw Error(ErrorCode::InvalidArgument, "an MC item needs at least two candidates");
  if (gold >= candidates.size()) throw Error(ErrorCode::InvalidArgument, "gold index out of range");
}

const std::map<std::string, std::string>& mc_templates() {
  static const std::map<std::string, std::string> templates{
      {"csqa", "Question: {question}\nAnswer: {answer}"},
      {"arc", "Question: {question}\nAnswer: {answer}"},
      {"hellaswag", "Question: {question}\nAnswer: {answer}"},
      {"piqa", "Goal: {question}\nAnswer: {answer}"},
      {"siqa", "{context}\nQuestion: {question}\nAnswer: {answer}"},
      {"openbookqa", "Question: {question}\nAnswer: {answer}"},
      {"boolq", "{context}\nQuestion: {question}\nAnswer: {answer}"},
  };
  return templates;
}

MCScore score_mc(lm::Backend& backend, const MCItem& item, std::string_view template_text) {
  item.validate();
  std::string rendered = text::replace_all(std::string(template_text), "{context}", item.context.value_or(""));
  rendered = text::replace_all(std::move(rendered), "{question}", item.question);
  const auto slot = rendered.find("{answer}");
  if (slot == std::string::npos) throw Error(ErrorCode::InvalidArgument, "template lacks an {answer} slot");
  std::string prefix = rendered.substr(0, slot);
  std::string lead;
  while (!prefix.empty() && prefix.back() == ' ') {
    prefix.pop_back();
    lead = " ";
  }

  MCScore out;
  for (const auto& cand : item.candidates) out.scores.push_back(backend.score_continuation(prefix, lead + cand).total);
  for (std::size_t i = 1; i < out.scores.size(); ++i)
    if (out.scores[i] > out.scores[out.chosen]) out.chosen = i;
  return out;
}

std::vector<MCItem> load_mc_items(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<MCItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      MCItem item;
      item.template_id = j.value("template_id", std::string("csqa"));
      if (j.contains("context") && j["context"].is_string()) item.context = j["context"].get<std::string>();
      item.question = j.at("question").get<std::string>();
      item.candidates = j.at("candidates").get<std::vector<std::string>>();
      item.gold = j.at("gold").get<std::size_t>();
      item.validate();
      out.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

bool score_minimal_pair(lm::Backend& backend, const MinimalPair& pair) {
  if (pair.good.empty() || pair.bad.empty()) throw Error(ErrorCode::InvalidArgument, "empty sentence in minimal pair");
  const std::string bos(lm::kBosSentinel);
  const double good = backend.score_continuation(bos, pair.good).total;
  const double bad = backend.score_continuation(bos, pair.bad).total;
  return good > bad;
}

std::vector<MinimalPair> load_minimal_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, path.string());
  std::vector<MinimalPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      MinimalPair p;
      p.good = j.contains("good") ? j["good"].get<std::string>() : j.at("sentence_good").get<std::string>();
      p.bad = j.contains("bad") ? j["bad"].get<std::string>() : j.at("sentence_bad").get<std::string>();
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::MalformedRecord, path.filename().string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(QueryFactor f) {
  switch (f) {
    case QueryFactor::word_freq: return "word_freq";
    case QueryFactor::num_senses: return "num_senses";
    case QueryFactor::desc_length: return "desc_length";
  }
  return "word_freq";
}

PropertyCorrelations property_correlations(const std::vector<TrialRecord>& records,
                                           const corpus::FrequencyTable& freq, const corpus::WordNetIndex& wn,
                                           const corpus::ConceptSet& set) {
  std::map<std::string, std::pair<double, double>> per_concept;
  for (const auto& r : records) {
    if (!set.find(r.concept_id)) continue;
    auto& [m, t] = per_concept[r.concept_id];
    m += r.matched ? 1.0 : 0.0;
    t += 1.0;
  }
  if (per_concept.size() < 2)
    throw Error(ErrorCode::InsufficientData, "records cover fewer than two known concepts");

  PropertyCorrelations out;
  out.concepts = per_concept.size();
  std::map<QueryFactor, std::pair<std::vector<double>, std::vector<double>>> series;
  std::map<QueryFactor, std::size_t> excluded;
  for (const auto& [id, mt] : per_concept) {
    const auto& c = *set.find(id);
    const double acc = mt.first / mt.second;
    if (auto f = freq.lookup(c.lemma)) {
      series[QueryFactor::word_freq].first.push_back(acc);
      series[QueryFactor::word_freq].second.push_back(*f);
    } else {
      ++excluded[QueryFactor::word_freq];
    }
    series[QueryFactor::num_senses].first.push_back(acc);
    series[QueryFactor::num_senses].second.push_back(static_cast<double>(corpus::synsets_of(wn, c.lemma).size()));
    series[QueryFactor::desc_length].first.push_back(acc);
    series[QueryFactor::desc_length].second.push_back(static_cast<double>(text::split_ws(c.description).size()));
  }
  for (auto factor : {QueryFactor::word_freq, QueryFactor::num_senses, QueryFactor::desc_length}) {
    FactorCorrelation fc;
    const auto& [acc, values] = series[factor];
    fc.n = acc.size();
    fc.excluded = excluded[factor];
    try {
      if (fc.n < 2) throw Error(ErrorCode::InsufficientData, "fewer than two concepts with a value");
      fc.rho = stats::spearman(acc, values);
    } catch (const Error& e) {
      fc.error = e.code() == ErrorCode::ZeroVariance ? "InsufficientData: zero variance" : e.what();
    }
    out.factors[factor] = fc;
  }
  return out;
}

}  // namespace revprobe::probe
