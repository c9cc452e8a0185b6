#include "revprobe/wordnet.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "revprobe/error.hpp"
#include "revprobe/text.hpp"

namespace revprobe::corpus {

std::string_view to_string(Pos p) {
  switch (p) {
    case Pos::noun: return "noun";
    case Pos::verb: return "verb";
    case Pos::adj: return "adj";
    case Pos::adv: return "adv";
  }
  return "noun";
}

char pos_letter(Pos p) {
  switch (p) {
    case Pos::noun: return 'n';
    case Pos::verb: return 'v';
    case Pos::adj: return 'a';
    case Pos::adv: return 'r';
  }
  return 'n';
}

std::string SynsetId::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c:%08u", pos_letter(pos), offset);
  return buf;
}

std::optional<std::string> WordNetIndex::gloss(SynsetId id) const {
  if (auto it = synset_gloss_.find(id); it != synset_gloss_.end()) return it->second;
  return std::nullopt;
}

std::string WordNetIndex::check_symmetry() const {
  for (const auto& [key, synsets] : lemma_to_synsets_) {
    for (const auto& s : synsets) {
      auto it = synset_to_lemmas_.find(s);
      if (it == synset_to_lemmas_.end()) return "lemma '" + key.first + "' lists unknown synset " + s.str();
      if (!it->second.contains(key.first))
        return "synset " + s.str() + " does not list lemma '" + key.first + "'";
    }
  }
  for (const auto& [s, lemmas] : synset_to_lemmas_) {
    for (const auto& l : lemmas) {
      auto it = lemma_to_synsets_.find({l, s.pos});
      if (it == lemma_to_synsets_.end() || !it->second.contains(s))
        return "lemma '" + l + "' does not list synset " + s.str();
    }
  }
  return {};
}

namespace {

constexpr std::array<Pos, 4> kAllPos{Pos::noun, Pos::verb, Pos::adj, Pos::adv};

std::string normalize_lemma(std::string_view raw) {
  return text::casefold(text::replace_all(std::string(raw), "_", " "));
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

[[noreturn]] void parse_fail(const std::filesystem::path& file, std::size_t offset, std::string_view what) {
  throw Error(ErrorCode::ParseError,
              file.filename().string() + " @" + std::to_string(offset) + ": " + std::string(what));
}

/// Whitespace tokenizer over one line that remembers where it is.
class Fields {
 public:
  explicit Fields(std::string_view line) : line_(line) {}

  std::optional<std::string_view> next() {
    while (pos_ < line_.size() && line_[pos_] == ' ') ++pos_;
    if (pos_ >= line_.size()) return std::nullopt;
    const auto start = pos_;
    while (pos_ < line_.size() && line_[pos_] != ' ') ++pos_;
    return line_.substr(start, pos_ - start);
  }

  std::string_view rest() const { return pos_ < line_.size() ? line_.substr(pos_) : std::string_view{}; }

 private:
  std::string_view line_;
  std::size_t pos_ = 0;
};

template <typename T>
std::optional<T> to_int(std::string_view s, int base = 10) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c < '0' || c > '9') return false;
  return true;
}

/// Strips the adjective syntactic marker "(a)", "(p)" or "(ip)".
std::string_view strip_adj_marker(std::string_view w) {
  for (std::string_view m : {"(a)", "(p)", "(ip)"})
    if (w.size() > m.size() && w.ends_with(m)) return w.substr(0, w.size() - m.size());
  return w;
}

void parse_data_file(const std::filesystem::path& file, Pos pos,
                     std::map<SynsetId, std::set<std::string>>& lemmas,
                     std::map<SynsetId, std::string>& glosses) {
  const std::string content = read_file(file);
  std::size_t line_start = 0;
  // Offsets are defined over LF-terminated files; CRLF copies are accepted
  // by discounting the carriage returns seen so far.
  std::size_t carriage_returns = 0;
  while (line_start < content.size()) {
    auto nl = content.find('\n', line_start);
    if (nl == std::string::npos) nl = content.size();
    std::string_view line(content.data() + line_start, nl - line_start);
    const auto at = line_start - carriage_returns;
    if (!line.empty() && line.back() == '\r') {
      line.remove_suffix(1);
      ++carriage_returns;
    }
    line_start = nl + 1;
    if (line.empty() || line.front() == ' ') continue;  // licence header

    Fields f(line);
    auto offset_tok = f.next();
    if (!offset_tok || offset_tok->size() != 8 || !all_digits(*offset_tok))
      parse_fail(file, at, "synset_offset must be 8 digits");
    const auto offset = *to_int<std::uint32_t>(*offset_tok);
    if (offset != at) parse_fail(file, at, "synset_offset does not match byte offset");

    auto lex_filenum = f.next();
    if (!lex_filenum || lex_filenum->size() != 2 || !all_digits(*lex_filenum))
      parse_fail(file, at, "lex_filenum must be 2 digits");
    auto ss_type = f.next();
    if (!ss_type || ss_type->size() != 1 || std::string_view("nvasr").find((*ss_type)[0]) == std::string_view::npos)
      parse_fail(file, at, "bad ss_type");
    const char expected = pos_letter(pos);
    const char got = (*ss_type)[0] == 's' ? 'a' : (*ss_type)[0];
    if (got != expected) parse_fail(file, at, "ss_type does not match file part of speech");

    auto w_cnt_tok = f.next();
    auto w_cnt = w_cnt_tok && w_cnt_tok->size() == 2 ? to_int<unsigned>(*w_cnt_tok, 16) : std::nullopt;
    if (!w_cnt || *w_cnt == 0) parse_fail(file, at, "w_cnt must be 2 hex digits > 0");

    const SynsetId id{pos, offset};
    auto& members = lemmas[id];
    for (unsigned i = 0; i < *w_cnt; ++i) {
      auto word = f.next();
      auto lex_id = f.next();
      if (!word || !lex_id || !to_int<unsigned>(*lex_id, 16)) parse_fail(file, at, "bad word/lex_id pair");
      auto w = pos == Pos::adj ? strip_adj_marker(*word) : *word;
      members.insert(normalize_lemma(w));
    }

    auto p_cnt_tok = f.next();
    auto p_cnt = p_cnt_tok && p_cnt_tok->size() == 3 && all_digits(*p_cnt_tok) ? to_int<unsigned>(*p_cnt_tok)
                                                                                : std::nullopt;
    if (!p_cnt) parse_fail(file, at, "p_cnt must be 3 digits");
    for (unsigned i = 0; i < *p_cnt; ++i) {
      auto sym = f.next();
      auto target = f.next();
      auto tpos = f.next();
      auto src_tgt = f.next();
      if (!sym || !target || target->size() != 8 || !all_digits(*target) || !tpos || tpos->size() != 1 ||
          !src_tgt || src_tgt->size() != 4 || !to_int<unsigned>(*src_tgt, 16))
        parse_fail(file, at, "bad pointer");
    }

    auto tok = f.next();
    if (pos == Pos::verb && tok && *tok != "|") {
      auto f_cnt = to_int<unsigned>(*tok);
      if (!f_cnt) parse_fail(file, at, "bad f_cnt");
      for (unsigned i = 0; i < *f_cnt; ++i) {
        auto plus = f.next();
        auto f_num = f.next();
        auto w_num = f.next();
        if (!plus || *plus != "+" || !f_num || !to_int<unsigned>(*f_num) || !w_num || !to_int<unsigned>(*w_num, 16))
          parse_fail(file, at, "bad verb frame");
      }
      tok = f.next();
    }
    if (!tok || *tok != "|") parse_fail(file, at, "missing gloss separator");
    glosses[id] = std::string(text::trim(f.rest()));
  }
}

void parse_index_file(const std::filesystem::path& file, Pos pos,
                      std::map<WordNetIndex::LemmaKey, std::set<SynsetId>>& out) {
  const std::string content = read_file(file);
  std::size_t line_start = 0;
  while (line_start < content.size()) {
    auto nl = content.find('\n', line_start);
    if (nl == std::string::npos) nl = content.size();
    std::string_view line(content.data() + line_start, nl - line_start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto at = line_start;
    line_start = nl + 1;
    if (line.empty() || line.front() == ' ') continue;

    Fields f(line);
    auto lemma = f.next();
    auto pos_tok = f.next();
    if (!lemma || !pos_tok || pos_tok->size() != 1 || (*pos_tok)[0] != pos_letter(pos))
      parse_fail(file, at, "bad lemma/pos");
    auto synset_cnt_tok = f.next();
    unsigned synset_cnt = 0;
    if (synset_cnt_tok) synset_cnt = to_int<unsigned>(*synset_cnt_tok).value_or(0);
    auto p_cnt_tok = f.next();
    auto p_cnt = p_cnt_tok ? to_int<unsigned>(*p_cnt_tok) : std::nullopt;
    if (synset_cnt == 0 || !p_cnt) parse_fail(file, at, "bad synset_cnt/p_cnt");
    for (unsigned i = 0; i < *p_cnt; ++i)
      if (!f.next()) parse_fail(file, at, "missing ptr_symbol");
    auto sense_cnt = f.next();
    auto tagsense_cnt = f.next();
    if (!sense_cnt || !to_int<unsigned>(*sense_cnt) || !tagsense_cnt || !to_int<unsigned>(*tagsense_cnt))
      parse_fail(file, at, "bad sense_cnt/tagsense_cnt");
    auto& synsets = out[{normalize_lemma(*lemma), pos}];
    for (unsigned i = 0; i < synset_cnt; ++i) {
      auto off = f.next();
      if (!off || off->size() != 8 || !all_digits(*off)) parse_fail(file, at, "bad synset_offset");
      synsets.insert(SynsetId{pos, *to_int<std::uint32_t>(*off)});
    }
    if (f.next()) parse_fail(file, at, "trailing fields after synset offsets");
  }
}

}  // namespace

WordNetIndex load_wordnet(const std::filesystem::path& db_dir) {
  for (const char* required : {"index.noun", "data.noun"})
    if (!std::filesystem::exists(db_dir / required))
      throw Error(ErrorCode::MissingFile, (db_dir / required).string());

  WordNetIndex idx;
  for (Pos pos : kAllPos) {
    const auto suffix = std::string(to_string(pos));
    const auto data = db_dir / ("data." + suffix);
    const auto index = db_dir / ("index." + suffix);
    if (!std::filesystem::exists(data) && !std::filesystem::exists(index)) continue;
    parse_data_file(data, pos, idx.synset_to_lemmas_, idx.synset_gloss_);
    parse_index_file(index, pos, idx.lemma_to_synsets_);
  }
  if (auto problem = idx.check_symmetry(); !problem.empty())
    throw Error(ErrorCode::ParseError, db_dir.string() + ": " + problem);
  return idx;
}

std::set<SynsetId> synsets_of(const WordNetIndex& index, std::string_view token, std::optional<Pos> pos) {
  std::set<SynsetId> out;
  const auto key = normalize_lemma(text::trim(token));
  if (key.empty()) return out;
  for (Pos p : kAllPos) {
    if (pos && *pos != p) continue;
    if (auto it = index.lemma_to_synsets().find({key, p}); it != index.lemma_to_synsets().end())
      out.insert(it->second.begin(), it->second.end());
  }
  return out;
}

}  // namespace revprobe::corpus
