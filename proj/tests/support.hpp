#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <unistd.h>

#include "revprobe/corpus.hpp"

namespace testing {

inline std::filesystem::path fixtures_dir() { return REVPROBE_FIXTURES_DIR; }

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("revprobe-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, std::string_view content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// n concepts "c0000".."c{n-1}" with lemma "word<i>", a distinct description
// and a category cycling through `categories` labels.
inline revprobe::corpus::ConceptSet synthetic_concepts(std::size_t n, std::size_t categories = 6) {
  std::vector<revprobe::corpus::Concept> v;
  for (std::size_t i = 0; i < n; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "c%04zu", i);
    revprobe::corpus::Concept c;
    c.id = id;
    c.lemma = "word" + std::to_string(i);
    c.description = "the thing numbered " + std::to_string(i) + " in the list";
    if (categories > 0) c.category = "cat" + std::to_string(i % categories);
    v.push_back(std::move(c));
  }
  return revprobe::corpus::ConceptSet("synthetic", std::move(v));
}

inline std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

}  // namespace testing
