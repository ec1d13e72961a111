#include "elstm_lab/textdata.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "elstm_lab/rng.hpp"

namespace elstm_lab {

std::u32string decode_utf8(std::string_view bytes) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  auto fail = [&](const char* why) {
    throw InvalidUtf8Error("invalid UTF-8 at byte " + std::to_string(i) + ": " + why);
  };
  while (i < bytes.size()) {
    const auto lead = static_cast<unsigned char>(bytes[i]);
    std::size_t len;
    char32_t cp;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      fail("bad lead byte");
    }
    if (i + len > bytes.size()) fail("truncated sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(bytes[i + k]);
      if ((cont & 0xC0) != 0x80) fail("bad continuation byte");
      cp = (cp << 6) | (cont & 0x3F);
    }
    static constexpr char32_t kMinForLength[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMinForLength[len]) fail("overlong encoding");
    if (cp > 0x10FFFF) fail("code point above U+10FFFF");
    if (cp >= 0xD800 && cp <= 0xDFFF) fail("surrogate code point");
    out.push_back(cp);
    i += len;
  }
  return out;
}

std::string encode_utf8(char32_t ch) {
  std::string out;
  if (ch < 0x80) {
    out.push_back(static_cast<char>(ch));
  } else if (ch < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (ch >> 6)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else if (ch < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (ch >> 12)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (ch >> 18)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((ch >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (ch & 0x3F)));
  }
  return out;
}

std::string encode_utf8(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t ch : text) out += encode_utf8(ch);
  return out;
}

Vocab Vocab::from_text(std::u32string_view text) {
  std::u32string chars(text);
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  return from_chars(std::move(chars));
}

Vocab Vocab::from_chars(std::u32string chars) {
  std::sort(chars.begin(), chars.end());
  if (std::adjacent_find(chars.begin(), chars.end()) != chars.end()) {
    throw ShapeError("Vocab: duplicate character");
  }
  Vocab v;
  v.chars_ = std::move(chars);
  for (std::size_t k = 0; k < v.chars_.size(); ++k) v.index_.emplace(v.chars_[k], k);
  return v;
}

std::size_t Vocab::index_of(char32_t ch) const {
  auto it = index_.find(ch);
  if (it == index_.end()) {
    throw ShapeError("Vocab: character U+" + std::to_string(static_cast<unsigned>(ch)) +
                     " not in vocabulary");
  }
  return it->second;
}

CharDataset CharDataset::from_text(std::u32string text) {
  Vocab vocab = Vocab::from_text(text);
  return from_text(std::move(text), std::move(vocab));
}

CharDataset CharDataset::from_text(std::u32string text, Vocab vocab) {
  if (text.size() < 2) {
    throw ShapeError("CharDataset: need at least 2 characters, got " +
                     std::to_string(text.size()));
  }
  CharDataset ds;
  ds.ids.reserve(text.size());
  for (char32_t ch : text) ds.ids.push_back(vocab.index_of(ch));
  ds.text = std::move(text);
  ds.vocab = std::move(vocab);
  return ds;
}

CharDataset gen_random_letters(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw ShapeError("gen_random_letters: n must be >= 2");
  Substream rng(seed, "data");
  std::u32string text(n, U'a');
  for (char32_t& ch : text) ch = U'a' + static_cast<char32_t>(rng.below(26));
  return CharDataset::from_text(std::move(text));
}

CharDataset load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open corpus file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw MissingFileError("cannot read corpus file '" + path.string() + "'");
  if (bytes.empty()) throw EmptyCorpusError("corpus file '" + path.string() + "' is empty");
  std::u32string text;
  try {
    text = decode_utf8(bytes);
  } catch (const InvalidUtf8Error& e) {
    throw InvalidUtf8Error(path.string() + ": " + e.what());
  }
  if (text.size() < 2) {
    throw EmptyCorpusError("corpus file '" + path.string() +
                           "' needs at least 2 characters");
  }
  return CharDataset::from_text(std::move(text));
}

void write_corpus(const CharDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  const std::string bytes = ds.utf8();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

std::vector<Segment> segments(const CharDataset& ds, std::size_t seg_len) {
  if (seg_len == 0) throw ShapeError("segments: seg_len must be >= 1");
  std::vector<Segment> out;
  const std::size_t predictions = ds.ids.size() - 1;
  const std::span<const std::size_t> ids(ds.ids);
  for (std::size_t start = 0; start < predictions; start += seg_len) {
    const std::size_t len = std::min(seg_len, predictions - start);
    out.push_back({ids.subspan(start, len), ids.subspan(start + 1, len)});
  }
  return out;
}

}  // namespace elstm_lab
