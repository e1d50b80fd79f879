#include "lite/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace lite::text {

namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr)
    throw std::runtime_error("ICU NFC normalizer unavailable");
  return *n;
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

icu::UnicodeString from_utf8(std::string_view s) {
  return icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

icu::UnicodeString normalize(const icu::UnicodeString& u) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc_instance().normalize(u, status);
  if (U_FAILURE(status)) return u;
  return out;
}

bool is_edge_punct(char c) {
  return c == '?' || c == '!' || c == '.' || c == ',';
}

}  // namespace

std::string nfc(std::string_view s) { return to_utf8(normalize(from_utf8(s))); }

std::string lowercase(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  u.toLower(icu::Locale::getRoot());
  return to_utf8(normalize(u));
}

std::vector<std::string> split_whitespace(std::string_view s) {
  icu::UnicodeString u = from_utf8(s);
  std::vector<std::string> out;
  int32_t start = -1;
  for (int32_t i = 0; i < u.length();) {
    UChar32 c = u.char32At(i);
    int32_t next = u.moveIndex32(i, 1);
    if (u_isUWhiteSpace(c)) {
      if (start >= 0) {
        out.push_back(to_utf8(icu::UnicodeString(u, start, i - start)));
        start = -1;
      }
    } else if (start < 0) {
      start = i;
    }
    i = next;
  }
  if (start >= 0) out.push_back(to_utf8(icu::UnicodeString(u, start)));
  return out;
}

std::string strip_edge_punctuation(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_edge_punct(s[b])) ++b;
  while (e > b && is_edge_punct(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string match_form(std::string_view display) {
  return strip_edge_punctuation(lowercase(display));
}

std::string trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

bool is_blank(std::string_view s) { return trim(s).empty(); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace lite::text
