#include <doctest.h>

#include <array>
#include <filesystem>
#include <fstream>

#include "elstm_lab/error.hpp"
#include "elstm_lab/textdata.hpp"

using namespace elstm_lab;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& bytes) {
  const fs::path dir = fs::temp_directory_path() / "elstm_lab_textdata_tests";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << bytes;
  return p;
}

}  // namespace

TEST_SUITE("textdata") {
  TEST_CASE("random letters: size, alphabet and determinism") {
    const CharDataset a = gen_random_letters(11000, 0);
    CHECK(a.size() == 11000);
    CHECK(a.vocab.size() == 26);
    CHECK(a.vocab.at(0) == U'a');
    CHECK(a.vocab.at(25) == U'z');
    CHECK(gen_random_letters(11000, 0).text == a.text);
    CHECK(gen_random_letters(11000, 1).text != a.text);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      CHECK(gen_random_letters(30, seed).vocab.size() <= 26);
    }
    CHECK_THROWS_AS(gen_random_letters(1, 0), ShapeError);
  }

  TEST_CASE("random letters pass a chi-square uniformity test") {
    // 25 degrees of freedom, p = 0.001 critical value.
    constexpr double kCritical = 52.62;
    for (std::uint64_t seed : {0u, 7u, 42u}) {
      const CharDataset ds = gen_random_letters(11000, seed);
      std::array<double, 26> counts{};
      for (char32_t ch : ds.text) counts[ch - U'a'] += 1.0;
      const double expected = 11000.0 / 26.0;
      double chi2 = 0.0;
      for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
      CHECK(chi2 < kCritical);
    }
  }

  TEST_CASE("load_corpus builds a sorted vocabulary and round-trips") {
    const CharDataset ds = load_corpus(temp_file("abab.txt", "abab"));
    CHECK(ds.vocab.size() == 2);
    CHECK(ds.vocab.chars() == U"ab");
    CHECK(ds.ids == std::vector<std::size_t>{0, 1, 0, 1});
    CHECK(load_corpus(temp_file("ba.txt", "bbaa")).vocab.chars() == U"ab");

    const std::string text = "na\xc3\xafve caf\xc3\xa9\n\xe2\x82\xac";
    const CharDataset u = load_corpus(temp_file("utf8.txt", text));
    CHECK(u.utf8() == text);
    CHECK(u.text.size() == 12);
    for (std::size_t k = 0; k < u.size(); ++k) CHECK(u.vocab.at(u.ids[k]) == u.text[k]);

    const fs::path out = fs::temp_directory_path() / "elstm_lab_textdata_tests" / "w.txt";
    write_corpus(u, out);
    CHECK(load_corpus(out).text == u.text);
  }

  TEST_CASE("load_corpus distinguishes its failures") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/elstm/corpus.txt"), MissingFileError);
    CHECK_THROWS_AS(load_corpus(temp_file("empty.txt", "")), EmptyCorpusError);
    CHECK_THROWS_AS(load_corpus(temp_file("bad.txt", "ab\xff" "cd")), InvalidUtf8Error);
    CHECK_THROWS_AS(load_corpus(temp_file("overlong.txt", "a\xc0\xafz")), InvalidUtf8Error);
    CHECK_THROWS_AS(load_corpus(temp_file("surrogate.txt", "a\xed\xa0\x80z")),
                    InvalidUtf8Error);
    try {
      load_corpus("/nonexistent/elstm/corpus.txt");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("/nonexistent/elstm/corpus.txt") != std::string::npos);
    }
  }

  TEST_CASE("vocab contracts") {
    const Vocab v = Vocab::from_chars(U"cab");
    CHECK(v.chars() == U"abc");
    CHECK(v.index_of(U'c') == 2);
    CHECK(v.contains(U'a'));
    CHECK_FALSE(v.contains(U'z'));
    CHECK_THROWS_AS(v.index_of(U'z'), ShapeError);
    CHECK_THROWS_AS(Vocab::from_chars(U"aa"), ShapeError);
    CHECK_THROWS_AS(CharDataset::from_text(U"q"), ShapeError);
    CHECK_THROWS_AS(CharDataset::from_text(U"abz", v), ShapeError);
  }

  TEST_CASE("segments shift by one") {
    const CharDataset ds = CharDataset::from_text(U"abcd");
    const auto segs = segments(ds, 3);
    REQUIRE(segs.size() == 1);
    CHECK(std::vector<std::size_t>(segs[0].inputs.begin(), segs[0].inputs.end()) ==
          std::vector<std::size_t>{0, 1, 2});
    CHECK(std::vector<std::size_t>(segs[0].targets.begin(), segs[0].targets.end()) ==
          std::vector<std::size_t>{1, 2, 3});
    CHECK_THROWS_AS(segments(ds, 0), ShapeError);
  }

  TEST_CASE("segment lengths and coverage") {
    const CharDataset ten = CharDataset::from_text(U"abcdefghij");
    const auto segs = segments(ten, 3);
    REQUIRE(segs.size() == 3);
    for (const auto& s : segs) CHECK(s.inputs.size() == 3);

    for (std::size_t seg_len : {1u, 4u, 25u, 1000u}) {
      const CharDataset ds = gen_random_letters(503, seg_len);
      std::vector<std::size_t> inputs, targets;
      for (const auto& s : segments(ds, seg_len)) {
        CHECK(s.inputs.size() == s.targets.size());
        CHECK(s.inputs.size() >= 1);
        CHECK(s.inputs.size() <= seg_len);
        inputs.insert(inputs.end(), s.inputs.begin(), s.inputs.end());
        targets.insert(targets.end(), s.targets.begin(), s.targets.end());
      }
      CHECK(targets == std::vector<std::size_t>(ds.ids.begin() + 1, ds.ids.end()));
      CHECK(inputs == std::vector<std::size_t>(ds.ids.begin(), ds.ids.end() - 1));
    }
  }
}
