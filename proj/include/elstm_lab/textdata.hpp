#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "elstm_lab/error.hpp"

namespace elstm_lab {

class MissingFileError : public InputError {
 public:
  using InputError::InputError;
};
class EmptyCorpusError : public InputError {
 public:
  using InputError::InputError;
};
class InvalidUtf8Error : public InputError {
 public:
  using InputError::InputError;
};

/// Decodes UTF-8 into code points; throws InvalidUtf8Error on malformed input
/// (overlong forms, surrogates and values above U+10FFFF included).
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view text);
std::string encode_utf8(char32_t ch);

/// Character set of a corpus, ordered by code point.
class Vocab {
 public:
  Vocab() = default;
  /// Distinct characters of text, sorted.
  static Vocab from_text(std::u32string_view text);
  /// Characters must be distinct; they are sorted on construction.
  static Vocab from_chars(std::u32string chars);

  std::size_t size() const { return chars_.size(); }
  const std::u32string& chars() const { return chars_; }
  char32_t at(std::size_t index) const { return chars_.at(index); }
  /// Throws ShapeError for a character outside the vocabulary.
  std::size_t index_of(char32_t ch) const;
  bool contains(char32_t ch) const { return index_.contains(ch); }

 private:
  std::u32string chars_;
  std::unordered_map<char32_t, std::size_t> index_;
};

struct CharDataset {
  std::u32string text;
  Vocab vocab;
  std::vector<std::size_t> ids;  // text mapped through vocab
  double split = 1.0;            // train fraction; everything trains by default

  /// Builds the vocabulary from the text. Requires at least 2 characters.
  static CharDataset from_text(std::u32string text);
  /// Uses a given vocabulary, which must cover the text.
  static CharDataset from_text(std::u32string text, Vocab vocab);

  std::size_t size() const { return text.size(); }
  std::string utf8() const { return encode_utf8(text); }
};

/// n letters drawn uniformly from a-z using substream "data".
CharDataset gen_random_letters(std::size_t n, std::uint64_t seed);

/// Reads a UTF-8 text file. Distinct errors for a missing or unreadable file,
/// an empty file and invalid UTF-8.
CharDataset load_corpus(const std::filesystem::path& path);

/// Writes the corpus text as UTF-8. Throws InputError if the file cannot be
/// written.
void write_corpus(const CharDataset& ds, const std::filesystem::path& path);

struct Segment {
  std::span<const std::size_t> inputs;
  std::span<const std::size_t> targets;  // inputs shifted by one character
};

/// Consecutive non-overlapping training segments of at most seg_len steps
/// covering every next-character prediction in the corpus once.
std::vector<Segment> segments(const CharDataset& ds, std::size_t seg_len);

}  // namespace elstm_lab
