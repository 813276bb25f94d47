#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace trustgate {

// Decoded view of a UTF-8 string. Offsets exposed to callers are code point
// indices; byte_offset() maps them back into the original bytes so edits can
// splice the source without re-encoding untouched text. Malformed bytes decode
// to U+FFFD, one code point per byte.
class Utf8Text {
 public:
  explicit Utf8Text(std::string_view bytes) : bytes_(bytes) {
    wide_.reserve(bytes.size());
    offsets_.reserve(bytes.size() + 1);
    std::size_t i = 0;
    while (i < bytes.size()) {
      offsets_.push_back(i);
      std::size_t len = 0;
      char32_t cp = decode_one(bytes, i, len);
      wide_.push_back(static_cast<wchar_t>(cp));
      i += len;
    }
    offsets_.push_back(bytes.size());
  }

  const std::wstring& wide() const noexcept { return wide_; }
  std::string_view bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return wide_.size(); }

  std::size_t byte_offset(std::size_t cp_index) const { return offsets_.at(cp_index); }

  std::string_view slice(std::size_t start, std::size_t end) const {
    auto b = byte_offset(start);
    return bytes_.substr(b, byte_offset(end) - b);
  }

 private:
  static char32_t decode_one(std::string_view s, std::size_t i, std::size_t& len) {
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
    unsigned char c = byte(i);
    len = 1;
    if (c < 0x80) return c;
    std::size_t need = 0;
    char32_t cp = 0;
    if ((c & 0xE0) == 0xC0) {
      need = 1;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      need = 2;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      need = 3;
      cp = c & 0x07;
    } else {
      return 0xFFFD;
    }
    if (i + need >= s.size()) return 0xFFFD;
    for (std::size_t k = 1; k <= need; ++k) {
      unsigned char cc = byte(i + k);
      if ((cc & 0xC0) != 0x80) return 0xFFFD;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
    if (cp < kMin[need] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0xFFFD;
    len = need + 1;
    return cp;
  }

  std::string_view bytes_;
  std::wstring wide_;
  std::vector<std::size_t> offsets_;
};

inline std::string encode_utf8(std::wstring_view w) {
  std::string out;
  out.reserve(w.size());
  for (wchar_t wc : w) {
    auto cp = static_cast<char32_t>(wc);
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

inline std::wstring decode_utf8(std::string_view s) { return Utf8Text(s).wide(); }

}  // namespace trustgate
