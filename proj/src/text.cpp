#include "revprobe/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <cctype>

#include "revprobe/error.hpp"

namespace revprobe {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MalformedMatrix: return "MalformedMatrix";
    case ErrorCode::UnknownFeatureType: return "UnknownFeatureType";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::NonPositiveCount: return "NonPositiveCount";
    case ErrorCode::InconsistentDim: return "InconsistentDim";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NotEnoughConcepts: return "NotEnoughConcepts";
    case ErrorCode::VocabTooSmall: return "VocabTooSmall";
    case ErrorCode::ConditionMismatch: return "ConditionMismatch";
    case ErrorCode::BackendUnreachable: return "BackendUnreachable";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::UnsupportedByBackend: return "UnsupportedByBackend";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::MissingRow: return "MissingRow";
    case ErrorCode::DegenerateCategory: return "DegenerateCategory";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidVector: return "InvalidVector";
    case ErrorCode::TooFewExamples: return "TooFewExamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::TooFewModels: return "TooFewModels";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

namespace text {

std::string casefold(std::string_view s) {
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase(U_FOLD_CASE_DEFAULT);
  std::string out;
  u.toUTF8String(out);
  return out;
}

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

}  // namespace text
}  // namespace revprobe
