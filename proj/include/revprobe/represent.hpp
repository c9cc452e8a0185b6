#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "revprobe/corpus.hpp"
#include "revprobe/lmclient.hpp"
#include "revprobe/promptgen.hpp"

namespace revprobe::represent {

/// Summary representations, one row per concept id.
struct ReprDataset {
  corpus::EmbeddingTable table;
  promptgen::Condition condition = promptgen::Condition::Demo;
  std::size_t n_demos = 0;
  std::string model_id;
  std::uint64_t run_seed = 0;
};

/// Renders each concept's prompt under `condition` and stores the backend's
/// final hidden vector. Rand is not accepted. Zero vectors are rejected.
ReprDataset extract_reprs(lm::Backend& backend, const corpus::ConceptSet& set, promptgen::Condition condition,
                          std::size_t n_demos = 24, std::uint64_t seed = 0, std::size_t max_in_flight = 4,
                          const promptgen::PromptFormat& format = {});

/// <stem>.bin holds little-endian float32 rows in id order; <stem>.json
/// holds {"ids", "dim", "meta"}.
void save_reprs(const ReprDataset& ds, const std::filesystem::path& stem);
ReprDataset load_reprs(const std::filesystem::path& stem);

// ---------------------------------------------------------------------------

struct CategoryAssignment {
  std::map<std::string, std::string> assignment;  // concept id -> category
  std::set<std::string> categories;

  std::map<std::string, std::size_t> sizes() const;
};

using Memberships = std::map<std::string, std::set<std::string>>;
using SubcategoryPairs = std::set<std::pair<std::string, std::string>>;  // (child, parent)

/// Drops child categories, then concepts left with other than one category,
/// then categories with fewer than min_size concepts, repeated until nothing
/// changes. Memberships for ids outside `set` are ignored.
CategoryAssignment filter_categories(const corpus::ConceptSet& set, const Memberships& raw,
                                     const SubcategoryPairs& subcategories, std::size_t min_size = 10);

/// Two-column TSVs with headers "concept_id\tcategory" and "child\tparent".
Memberships load_memberships(const std::filesystem::path& path);
SubcategoryPairs load_subcategories(const std::filesystem::path& path);

struct Categorization {
  double accuracy = 0.0;
  std::map<std::string, std::string> predictions;
};

/// 1 - cos(a, b); 1 when either vector is zero.
double cosine_distance(std::span<const double> a, std::span<const double> b);

/// Leave-one-out nearest-centroid classification under cosine distance.
/// Ties go to the lexicographically smallest category.
Categorization nearest_centroid_loocv(const ReprDataset& ds, const CategoryAssignment& cats);

std::string to_csv(const Categorization& result, const CategoryAssignment& cats);

// ---------------------------------------------------------------------------

struct LogisticModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double l2 = 1.0;
  std::size_t iterations_run = 0;
  bool converged = false;
  std::vector<double> loss_trace;  // objective after each accepted step, starting at the initial point

  double predict_proba(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_proba_rows(const Eigen::MatrixXd& X) const;
};

/// Mean log-loss plus (l2/2)|w|^2; fills the gradient when requested.
double logistic_objective(const Eigen::MatrixXd& X, const std::vector<bool>& y, const Eigen::VectorXd& w, double b,
                          double l2, Eigen::VectorXd* grad_w = nullptr, double* grad_b = nullptr);

/// Full-batch gradient descent with backtracking line search from w = 0,
/// b = 0; stops when the gradient max-norm drops below tol.
LogisticModel train_logistic(const Eigen::MatrixXd& X, const std::vector<bool>& y, double l2 = 1.0,
                             std::size_t max_iter = 500, double tol = 1e-6);

/// Fold index per example. Positives and negatives are shuffled
/// separately and dealt round-robin, negatives continuing where the
/// positives stopped.
std::vector<std::size_t> stratified_folds(const std::vector<bool>& labels, std::size_t k, std::uint64_t seed);

struct FoldScore {
  double f1 = 0.0;
  double auc = 0.0;
};

struct DecodeResult {
  std::string feature_id;
  corpus::FeatureType feature_type = corpus::FeatureType::other_perceptual;
  std::vector<FoldScore> per_fold;
  double mean_f1 = 0.0;
  double mean_auc = 0.0;
};

/// Stratified k-fold logistic decoding of one feature from the summary
/// representations; f1 at probability threshold 0.5.
DecodeResult decode_feature(const ReprDataset& ds, const corpus::FeatureNorm& feature, std::size_t k = 10,
                            std::uint64_t seed = 0, double l2 = 1.0, std::size_t max_iter = 500);

struct DecodeBatch {
  std::vector<DecodeResult> results;                        // ordered by feature id
  std::vector<std::pair<std::string, std::string>> skipped;  // (feature id, reason)
};

/// Decodes every feature, in parallel up to `threads`.
DecodeBatch decode_features(const ReprDataset& ds, const corpus::FeatureNormSet& norms, std::size_t k = 10,
                            std::uint64_t seed = 0, double l2 = 1.0, std::size_t threads = 4,
                            std::size_t max_iter = 500);

std::string to_csv(const std::vector<DecodeResult>& results);

// ---------------------------------------------------------------------------

struct Projection {
  std::map<std::string, std::vector<double>> coords;
  std::vector<double> explained_variance;
  bool rank_deficient = false;
};

/// Mean-centred projection onto the top `dims` principal axes. Each axis is
/// oriented so that its largest-magnitude loading is positive; components
/// beyond the data's rank are zero.
Projection pca_project(const corpus::EmbeddingTable& table, std::size_t dims = 2);

std::string to_csv(const Projection& p);

}  // namespace revprobe::represent
