#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "revprobe/corpus.hpp"
#include "revprobe/error.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/promptgen.hpp"
#include "revprobe/wordnet.hpp"

namespace revprobe::probe {

/// First line of a completion with surrounding whitespace removed.
std::string extract_answer(std::string_view raw);

/// Case fold, strip surrounding whitespace and the punctuation . , ; : ! ? " '
/// from both ends, collapse internal whitespace runs. No stemming.
std::string normalize(std::string_view s);

bool is_match(std::string_view answer, const std::set<std::string>& expected);

struct TrialRecord {
  std::string model_id;
  promptgen::Condition condition = promptgen::Condition::Demo;
  std::size_t n_demos = 0;
  std::uint64_t run_seed = 0;
  std::string concept_id;
  std::string prompt_digest;
  std::string raw_completion;
  std::string answer;
  bool matched = false;
  std::set<std::string> expected;
  double permute_ratio = 0.0;

  bool operator==(const TrialRecord&) const = default;
};

nlohmann::json to_json(const TrialRecord& r);
TrialRecord trial_from_json(const nlohmann::json& j);
std::string to_jsonl(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> load_records(const std::filesystem::path& path);

struct ProbeConfig {
  promptgen::Condition condition = promptgen::Condition::Demo;
  std::size_t n_demos = 24;
  std::size_t runs = 5;
  std::uint64_t base_seed = 0;
  double permute_ratio = 0.0;
  std::size_t max_in_flight = 4;
  std::optional<std::string> model_id;  // defaults to the backend id
  promptgen::PromptFormat format;
};

/// A backend failure during a run. Carries the records that completed
/// before the failing trial, in output order.
class ProbeAborted : public Error {
 public:
  ProbeAborted(const Error& cause, std::string where, std::vector<TrialRecord> partial)
      : Error(cause.code(), where + ": " + cause.what()), partial_(std::move(partial)) {}

  const std::vector<TrialRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<TrialRecord> partial_;
};

/// The demonstrations used for one query of one run. One demonstration set
/// of n concepts is shared by every query of a run; a query that is itself
/// in that set gets the run's spare (n+1-th) draw in its place.
class RunDemonstrations {
 public:
  RunDemonstrations(const corpus::ConceptSet& set, promptgen::Condition condition, std::size_t n_demos,
                    std::uint64_t run_seed, const promptgen::DatasetPermutation* permutation = nullptr);

  std::vector<promptgen::DemoPair> for_query(const corpus::Concept& query) const;

 private:
  std::vector<std::string> ids_;
  std::vector<promptgen::DemoPair> pairs_;
  std::size_t n_demos_;
};

/// Runs the reverse-dictionary probe. Run r uses seed base_seed + r for its
/// demonstrations (and, under Rand, for the dataset permutation). Records
/// come back ordered by (run, concept id).
std::vector<TrialRecord> run_probe(lm::Backend& backend, const corpus::ConceptSet& set, const ProbeConfig& config);

struct AccuracyReport {
  std::string model_id;
  promptgen::Condition condition = promptgen::Condition::Demo;
  std::size_t n_demos = 0;
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n_trials = 0;
};

/// Grouped by (model, condition, n_demos). Means are match fractions; the
/// interval is a percentile bootstrap over concepts, where each resample
/// pools all runs of the drawn concepts. The interval is widened to
/// contain the mean if resampling noise would exclude it.
std::vector<AccuracyReport> accuracy_report(const std::vector<TrialRecord>& records, std::size_t resamples = 1000,
                                            double level = 0.95, std::uint64_t seed = 0);

std::string to_csv(const std::vector<AccuracyReport>& reports);

// ---------------------------------------------------------------------------

struct MCItem {
  std::string template_id;
  std::optional<std::string> context;
  std::string question;
  std::vector<std::string> candidates;
  std::size_t gold = 0;

  void validate() const;
};

/// Zero-shot templates per benchmark, with {context}, {question} and
/// {answer} slots.
const std::map<std::string, std::string>& mc_templates();

struct MCScore {
  std::size_t chosen = 0;
  std::vector<double> scores;
};

/// Renders the template up to the {answer} slot as the prompt (trailing
/// spaces move into the continuation) and scores " <candidate>" for every
/// candidate by summed token log-probability. Ties go to the lowest index.
MCScore score_mc(lm::Backend& backend, const MCItem& item, std::string_view template_text);

std::vector<MCItem> load_mc_items(const std::filesystem::path& path);

struct MinimalPair {
  std::string good;
  std::string bad;
};

/// True iff the good sentence scores strictly higher after a BOS sentinel.
bool score_minimal_pair(lm::Backend& backend, const MinimalPair& pair);

std::vector<MinimalPair> load_minimal_pairs(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

enum class QueryFactor { word_freq, num_senses, desc_length };

std::string_view to_string(QueryFactor f);

struct FactorCorrelation {
  std::optional<double> rho;  // empty when undefined (see error)
  std::size_t n = 0;          // concepts used
  std::size_t excluded = 0;   // concepts without a value for this factor
  std::string error;
};

struct PropertyCorrelations {
  std::map<QueryFactor, FactorCorrelation> factors;
  std::size_t concepts = 0;
};

/// Spearman correlation between per-concept accuracy and log word
/// frequency, WordNet sense count, and description length in words.
PropertyCorrelations property_correlations(const std::vector<TrialRecord>& records,
                                           const corpus::FrequencyTable& freq, const corpus::WordNetIndex& wn,
                                           const corpus::ConceptSet& set);

}  // namespace revprobe::probe
