#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "revprobe/error.hpp"
#include "revprobe/harness.hpp"
#include "revprobe/represent.hpp"
#include "revprobe/stats.hpp"
#include "support.hpp"

using namespace revprobe;
using namespace revprobe::represent;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

ReprDataset dataset_of(const std::map<std::string, std::vector<double>>& rows) {
  ReprDataset ds;
  for (const auto& [id, v] : rows) ds.table.add_row(id, v);
  return ds;
}

// Concepts spread over `cats` categories, each row a category centre plus
// Gaussian noise of scale sigma.
struct Clustered {
  std::map<std::string, std::vector<double>> rows;
  CategoryAssignment cats;
};

Clustered clustered(std::size_t cats, std::size_t per_cat, std::size_t dim, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<std::vector<double>> centres;
  for (std::size_t c = 0; c < cats; ++c) {
    std::vector<double> v(dim, 0.0);
    v[c % dim] = 1.0;
    if (c >= dim) v[(c + 1) % dim] = 1.0;
    centres.push_back(v);
  }
  Clustered out;
  for (std::size_t c = 0; c < cats; ++c) {
    const auto cat = "k" + std::to_string(c);
    out.cats.categories.insert(cat);
    for (std::size_t i = 0; i < per_cat; ++i) {
      const auto id = cat + "-" + std::to_string(i);
      auto v = centres[c];
      for (auto& x : v) x += noise(gen);
      out.rows[id] = v;
      out.cats.assignment[id] = cat;
    }
  }
  return out;
}

Eigen::MatrixXd matrix_of(const corpus::EmbeddingTable& t) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.dim));
  Eigen::Index r = 0;
  for (const auto& [id, v] : t.rows) X.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(v.data(), X.cols());
  return X;
}

}  // namespace

TEST_SUITE("represent") {
  TEST_CASE("extract_reprs returns centroids without noise") {
    const auto set = testing::synthetic_concepts(30, 3);
    harness::OracleOptions opt;
    opt.hidden_size = 8;
    const auto spec = harness::make_oracle_spec(set, opt);
    lm::OracleBackend be(spec);
    const auto ds = extract_reprs(be, set, promptgen::Condition::Demo, 4, 1);
    CHECK(ds.table.rows.size() == 30);
    CHECK(ds.table.dim == 8);
    for (const auto& c : set) CHECK(ds.table.rows.at(c.id) == spec.centroids.at(*c.category));

    auto noisy = opt;
    noisy.noise_sigma = 0.2;
    lm::OracleBackend nb(harness::make_oracle_spec(set, noisy));
    const auto a = extract_reprs(nb, set, promptgen::Condition::NL, 0, 1, 1);
    const auto b = extract_reprs(nb, set, promptgen::Condition::NL, 0, 1, 4);
    CHECK(a.table.rows == b.table.rows);

    CHECK(code_of([&] { extract_reprs(be, set, promptgen::Condition::Rand, 4); }) == ErrorCode::ConditionMismatch);
  }

  TEST_CASE("save and load round trip") {
    testing::TempDir dir;
    ReprDataset ds = dataset_of({{"a", {0.5, -1.25, 3.0}}, {"b", {1e-3, 2.0, -7.5}}});
    ds.condition = promptgen::Condition::NL;
    ds.model_id = "m";
    ds.run_seed = 9;
    save_reprs(ds, dir / "r");
    const auto back = load_reprs(dir / "r");
    CHECK(back.condition == promptgen::Condition::NL);
    CHECK(back.model_id == "m");
    CHECK(back.run_seed == 9);
    REQUIRE(back.table.rows.size() == 2);
    for (const auto& [id, v] : ds.table.rows)
      for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(back.table.rows.at(id)[i] == static_cast<double>(static_cast<float>(v[i])));

    testing::write_file(dir / "r.bin", "abc");
    CHECK(code_of([&] { load_reprs(dir / "r"); }) == ErrorCode::MalformedMatrix);
    CHECK(code_of([&] { load_reprs(dir / "none"); }) == ErrorCode::MissingArtifact);
  }

  TEST_CASE("filter_categories") {
    const auto set = testing::synthetic_concepts(40, 0);
    Memberships raw;
    for (std::size_t i = 0; i < 10; ++i) raw[set[i].id] = {"animal"};
    for (std::size_t i = 10; i < 19; ++i) raw[set[i].id] = {"tool"};  // 9 members
    for (std::size_t i = 19; i < 30; ++i) raw[set[i].id] = {"food"};
    raw[set[30].id] = {"food", "plant"};
    for (std::size_t i = 31; i < 34; ++i) raw[set[i].id] = {"animal", "bird"};
    raw["not-in-set"] = {"animal"};

    const auto out = filter_categories(set, raw, {{"bird", "animal"}});
    CHECK(out.categories == std::set<std::string>{"animal", "food"});
    CHECK(out.sizes().at("animal") == 13);
    CHECK(out.sizes().at("food") == 11);
    CHECK(!out.assignment.contains(set[30].id));
    CHECK(!out.assignment.contains(set[12].id));
    CHECK(!out.assignment.contains("not-in-set"));

    // without the subcategory pair the bird rows carry two labels
    CHECK(filter_categories(set, raw, {}).sizes().at("animal") == 10);
  }

  TEST_CASE("cosine distance") {
    const std::vector<double> a{1, 0}, b{0, 2}, z{0, 0};
    CHECK(cosine_distance(a, a) == doctest::Approx(0.0));
    CHECK(cosine_distance(a, b) == doctest::Approx(1.0));
    CHECK(cosine_distance(a, z) == 1.0);
  }

  TEST_CASE("loocv agrees with the reference on small data") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto c = clustered(4, 12, 5, 0.8, seed);
      const auto got = nearest_centroid_loocv(dataset_of(c.rows), c.cats);
      const auto want = oracle::loocv(c.rows, c.cats.assignment);
      CHECK(got.predictions == want);
      double correct = 0;
      for (const auto& [id, p] : want) correct += p == c.cats.assignment.at(id) ? 1 : 0;
      CHECK(got.accuracy == doctest::Approx(correct / static_cast<double>(want.size())));
    }
  }

  TEST_CASE("well separated categories are recovered") {
    const auto c = clustered(18, 60, 24, 0.01, 3);
    const auto r = nearest_centroid_loocv(dataset_of(c.rows), c.cats);
    CHECK(r.accuracy >= 0.99);
    const auto csv = to_csv(r, c.cats);
    CHECK(csv.rfind("concept_id,category,predicted,correct\n", 0) == 0);
  }

  TEST_CASE("loocv errors") {
    auto c = clustered(2, 3, 3, 0.1, 1);
    c.cats.assignment["ghost"] = "k0";
    CHECK(code_of([&] { nearest_centroid_loocv(dataset_of(c.rows), c.cats); }) == ErrorCode::MissingRow);
    auto single = clustered(2, 3, 3, 0.1, 1);
    single.cats.assignment.erase("k1-1");
    single.cats.assignment.erase("k1-2");
    CHECK(code_of([&] { nearest_centroid_loocv(dataset_of(single.rows), single.cats); }) ==
          ErrorCode::DegenerateCategory);
  }

  TEST_CASE("logistic gradient matches finite differences") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(50, 16);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(gen);
    std::vector<bool> y;
    for (int i = 0; i < 50; ++i) y.push_back(i % 3 == 0);
    Eigen::VectorXd w(16);
    for (auto& v : w) v = 0.3 * nd(gen);
    const double b = 0.2, l2 = 0.5, h = 1e-5;
    Eigen::VectorXd gw;
    double gb = 0;
    logistic_objective(X, y, w, b, l2, &gw, &gb);
    double worst = 0;
    for (Eigen::Index j = 0; j < 16; ++j) {
      Eigen::VectorXd wp = w, wm = w;
      wp[j] += h;
      wm[j] -= h;
      const double fd = (logistic_objective(X, y, wp, b, l2) - logistic_objective(X, y, wm, b, l2)) / (2 * h);
      worst = std::max(worst, std::abs(fd - gw[j]) / std::max(1e-8, std::abs(fd)));
    }
    const double fdb = (logistic_objective(X, y, w, b + h, l2) - logistic_objective(X, y, w, b - h, l2)) / (2 * h);
    worst = std::max(worst, std::abs(fdb - gb) / std::max(1e-8, std::abs(fdb)));
    CHECK(worst < 1e-4);
  }

  TEST_CASE("logistic training") {
    Eigen::MatrixXd X(8, 2);
    X << -2, -1, -1, -2, -1.5, -1.5, -3, 0, 2, 1, 1, 2, 1.5, 1.5, 3, 0;
    const std::vector<bool> y{false, false, false, false, true, true, true, true};
    const auto m = train_logistic(X, y, 0.01);
    CHECK(m.converged);
    for (std::size_t i = 1; i < m.loss_trace.size(); ++i) CHECK(m.loss_trace[i] <= m.loss_trace[i - 1]);
    const auto p = m.predict_proba_rows(X);
    for (Eigen::Index i = 0; i < 8; ++i) CHECK((p[i] >= 0.5) == y[static_cast<std::size_t>(i)]);

    CHECK(code_of([&] { train_logistic(X, std::vector<bool>(8, true)); }) == ErrorCode::OneClassOnly);
    CHECK(code_of([&] { train_logistic(X, std::vector<bool>(3, true)); }) == ErrorCode::LengthMismatch);
  }

  TEST_CASE("stratified folds") {
    std::vector<bool> labels;
    for (int i = 0; i < 53; ++i) labels.push_back(i % 4 == 0);
    const auto f = stratified_folds(labels, 5, 2);
    CHECK(f == stratified_folds(labels, 5, 2));
    std::vector<int> pos(5, 0), all(5, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      REQUIRE(f[i] < 5);
      ++all[f[i]];
      if (labels[i]) ++pos[f[i]];
    }
    for (int k = 0; k < 5; ++k) {
      CHECK(pos[k] >= 2);
      CHECK(pos[k] <= 3);
      CHECK(all[k] >= 10);
      CHECK(all[k] <= 11);
    }
    CHECK_THROWS_AS(stratified_folds(labels, 1, 0), Error);
  }

  TEST_CASE("decoding a planted feature") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nd;
    ReprDataset ds;
    corpus::FeatureNorm planted{"visual:is red", "is red", corpus::FeatureType::visual, {}};
    corpus::FeatureNorm shuffled{"visual:is blue", "is blue", corpus::FeatureType::visual, {}};
    std::vector<bool> labels;
    for (int i = 0; i < 200; ++i) labels.push_back(i % 2 == 0);
    auto perm = labels;
    std::shuffle(perm.begin(), perm.end(), gen);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> v(8);
      for (auto& x : v) x = nd(gen);
      v[0] = labels[i] ? 4.0 + 0.1 * nd(gen) : -4.0 + 0.1 * nd(gen);
      const auto id = "c" + std::to_string(i);
      ds.table.add_row(id, v);
      planted.values[id] = labels[i];
      shuffled.values[id] = perm[i];
    }
    const auto r = decode_feature(ds, planted, 10, 0);
    CHECK(r.per_fold.size() == 10);
    CHECK(r.mean_f1 == doctest::Approx(1.0));
    CHECK(r.mean_auc == doctest::Approx(1.0));

    const auto control = decode_feature(ds, shuffled, 10, 0);
    CHECK(control.mean_auc > 0.4);
    CHECK(control.mean_auc < 0.6);

    const auto again = decode_feature(ds, shuffled, 10, 0);
    CHECK(again.mean_auc == control.mean_auc);
    CHECK(again.mean_f1 == control.mean_f1);

    corpus::FeatureNorm rare{"visual:x", "x", corpus::FeatureType::visual, {}};
    for (int i = 0; i < 200; ++i) rare.values["c" + std::to_string(i)] = i < 5;
    CHECK(code_of([&] { decode_feature(ds, rare, 10, 0); }) == ErrorCode::TooFewExamples);

    corpus::FeatureNormSet set;
    set.features = {shuffled, rare, planted};
    const auto batch = decode_features(ds, set, 10, 0, 1.0, 3);
    CHECK(batch.results.size() == 2);
    REQUIRE(batch.skipped.size() == 1);
    CHECK(batch.skipped[0].first == "visual:x");
    CHECK(to_csv(batch.results).rfind("feature_id,feature_type,folds,mean_f1,mean_auc\n", 0) == 0);
  }

  TEST_CASE("pca of a plane preserves distances") {
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(10, [&] { return nd(gen); });
    Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(10, [&] { return nd(gen); });
    corpus::EmbeddingTable t;
    for (int i = 0; i < 30; ++i) {
      const Eigen::VectorXd x = nd(gen) * u + nd(gen) * v;
      t.add_row("p" + std::to_string(100 + i), std::vector<double>(x.data(), x.data() + 10));
    }
    t.add_row("p200", t.rows.at("p100"));
    const auto p = pca_project(t, 2);
    CHECK(!p.rank_deficient);
    CHECK(p.coords.at("p200") == p.coords.at("p100"));
    for (const auto& [a, xa] : t.rows)
      for (const auto& [b, xb] : t.rows) {
        double d_in = 0, d_out = 0;
        for (std::size_t k = 0; k < 10; ++k) d_in += (xa[k] - xb[k]) * (xa[k] - xb[k]);
        for (std::size_t k = 0; k < 2; ++k)
          d_out += std::pow(p.coords.at(a)[k] - p.coords.at(b)[k], 2);
        CHECK(std::sqrt(d_out) == doctest::Approx(std::sqrt(d_in)).epsilon(1e-8));
      }
    CHECK(pca_project(t, 3).rank_deficient);
    CHECK(to_csv(p).rfind("concept_id,pc1,pc2\n", 0) == 0);
  }

  TEST_CASE("pca residual matches the eigen reference") {
    std::mt19937_64 gen(9);
    corpus::EmbeddingTable t;
    for (int i = 0; i < 100; ++i) t.add_row("r" + std::to_string(1000 + i), testing::random_vector(gen, 16));
    const auto X = matrix_of(t);
    const Eigen::MatrixXd C = X.rowwise() - X.colwise().mean();
    for (std::size_t dims : {1, 3, 8}) {
      const auto p = pca_project(t, dims);
      // reconstruction from the coordinates: residual = |C|^2 - |coords|^2 for orthonormal axes
      double kept = 0;
      for (const auto& [id, row] : p.coords)
        for (double x : row) kept += x * x;
      CHECK(C.squaredNorm() - kept == doctest::Approx(oracle::pca_residual(X, dims)).epsilon(1e-8));
      double ev = 0;
      for (double e : p.explained_variance) ev += e;
      CHECK(ev * 99.0 == doctest::Approx(kept).epsilon(1e-8));
    }
    CHECK(code_of([&] { pca_project(t, 0); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { pca_project(t, 100); }) == ErrorCode::InsufficientData);
  }
}
