#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "revprobe/corpus.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/wordnet.hpp"

namespace revprobe::protoqa {

/// Rewrites a ProtoQA question as a sentence to be continued:
///   "Name something ..."      -> "One thing ... is"
///   "Tell me something ..."   -> "One thing ... is"
///   "Name a/an ..."           -> "One ... is"
///   "How can you tell ..."    -> "One way to tell ... is"
///   "Give me a/an ..."        -> "One ... is"
/// Other questions get " The answer is" appended.
std::string nl_translate(std::string_view question);

/// n samples with seeds params.seed .. params.seed + n - 1, each cut at the
/// first newline and normalized. Output order follows the seed index.
std::vector<std::string> collect_answers(lm::Backend& backend, std::string_view prompt, std::size_t n,
                                         const lm::DecodingParams& params, std::size_t max_in_flight = 4);

/// Generation settings for answer sampling: sample mode, 28 tokens,
/// temperature = top_p = repetition penalty = 1, stop at newline.
lm::DecodingParams sampling_params(std::int64_t base_seed = 0);

struct RankedAnswers {
  std::vector<std::string> answers;
  std::vector<int> counts;

  bool operator==(const RankedAnswers&) const = default;
};

/// Up to `limit` distinct non-empty answers by descending count, ties in
/// ascending byte order.
RankedAnswers rank_answers(const std::vector<std::string>& samples, std::size_t limit = 10);

enum class MatchMode { exact, wordnet };

std::string_view to_string(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

/// The shipped 50-word function-word list.
const std::set<std::string>& default_stopwords();
std::set<std::string> load_stopwords(const std::filesystem::path& path);

/// Answer matching against the strings of one cluster. wordnet mode adds
/// matches where a content token of the answer shares a noun or verb synset
/// with a content token of a cluster string.
class Matcher {
 public:
  explicit Matcher(const corpus::WordNetIndex* wn = nullptr, std::set<std::string> stopwords = default_stopwords());

  bool matches(std::string_view answer, const corpus::AnswerCluster& cluster, MatchMode mode) const;
  std::vector<std::string> content_tokens(std::string_view s) const;

 private:
  bool share_synset(const std::string& a, const std::string& b) const;

  const corpus::WordNetIndex* wn_;
  std::set<std::string> stopwords_;
};

enum class Metric { max_answers, max_incorrect };

std::string_view to_string(Metric m);

struct ScoreReport {
  std::string question_id;
  Metric metric = Metric::max_answers;
  std::size_t k = 1;
  MatchMode mode = MatchMode::exact;
  double score = 0.0;
  double earned = 0.0;
  double attainable = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> matched_pairs;  // (answer index, cluster index)
};

/// Optimal one-to-one assignment of the first k answers to clusters, each
/// match earning the cluster count, divided by the sum of the k largest
/// cluster counts.
ScoreReport score_max_answers(const RankedAnswers& ranked, const corpus::ClusterSet& clusters, std::size_t k,
                              MatchMode mode, const Matcher& matcher);

/// Walks the answers in order. An answer consumes the highest-count
/// unconsumed cluster it matches (ties by cluster order); one that consumes
/// nothing is a miss, and the walk halts at the k-th miss. Divided by the
/// total cluster count.
ScoreReport score_max_incorrect(const RankedAnswers& ranked, const corpus::ClusterSet& clusters, std::size_t k,
                                MatchMode mode, const Matcher& matcher);

nlohmann::json to_json(const ScoreReport& r);

/// Ranked answers for one question, as persisted between `protoqa run` and
/// `protoqa score`.
struct AnswerRecord {
  std::string question_id;
  std::string prompt;
  RankedAnswers ranked;
};

nlohmann::json to_json(const AnswerRecord& r);
AnswerRecord answer_record_from_json(const nlohmann::json& j);
std::vector<AnswerRecord> load_answer_records(const std::filesystem::path& path);

/// Samples and ranks answers for every item.
std::vector<AnswerRecord> run_protoqa(lm::Backend& backend, const std::vector<corpus::ProtoQAItem>& items,
                                      std::size_t samples = 100, std::int64_t base_seed = 0,
                                      std::size_t max_in_flight = 4);

/// Every (metric, k, mode) combination over the items that have answers.
std::vector<ScoreReport> score_all(const std::vector<AnswerRecord>& answers,
                                   const std::vector<corpus::ProtoQAItem>& items, const std::vector<std::size_t>& ks,
                                   const std::vector<MatchMode>& modes, const Matcher& matcher);

/// metric,k,mode,score,n with the mean score over questions.
std::string aggregate_csv(const std::vector<ScoreReport>& reports);

}  // namespace revprobe::protoqa
