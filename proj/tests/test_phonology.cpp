#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "oracles.hpp"
#include "sylcat/phonology.hpp"

using namespace sylcat;

namespace {

std::vector<Phone> phones_of(const std::string& s) {
  std::vector<Phone> out;
  for (char c : s) out.emplace_back(c);
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sylcat::Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("parse_annotated splits phones and boundary bits", "[phonology]") {
  const auto w = parse_annotated("{b-sEnt");
  CHECK(phones_to_string(w.phones()) == "{bsEnt");
  const std::vector<std::uint8_t> bits(w.boundaries().begin(), w.boundaries().end());
  CHECK(bits == std::vector<std::uint8_t>{0, 1, 0, 0, 0});

  const auto single = parse_annotated("a");
  CHECK(single.phones().size() == 1);
  CHECK(single.boundaries().empty());
}

TEST_CASE("parse_annotated rejects malformed input", "[phonology]") {
  CHECK(code_of([] { parse_annotated("-ab"); }) == ErrorCode::MalformedBoundary);
  CHECK(code_of([] { parse_annotated("ab-"); }) == ErrorCode::MalformedBoundary);
  CHECK(code_of([] { parse_annotated("a--b"); }) == ErrorCode::MalformedBoundary);
  CHECK(code_of([] { parse_annotated(""); }) == ErrorCode::EmptyWord);
  CHECK(code_of([] { parse_annotated("-"); }) == ErrorCode::MalformedBoundary);
  CHECK(code_of([] { parse_annotated("a b"); }) == ErrorCode::ReservedCharacter);
  CHECK(code_of([] { parse_annotated("a#b"); }) == ErrorCode::ReservedCharacter);
  CHECK(code_of([] { parse_annotated("a\tb"); }) == ErrorCode::ReservedCharacter);
}

TEST_CASE("render is the inverse of parse_annotated", "[phonology]") {
  CHECK(render(Syllabification(phones_of("{bsEnt"), {0, 1, 0, 0, 0})) == "{b-sEnt");
  CHECK(render(Syllabification(phones_of("a"), {})) == "a");
  CHECK(render(Syllabification(phones_of("ab"), {1})) == "a-b");

  std::mt19937_64 rng(7);
  const std::string symbols = "{bsEntI@pkr123";
  for (int trial = 0; trial < 500; ++trial) {
    for (const auto& w : oracle::random_words(rng, symbols, 1, 12)) {
      const auto text = render(w.syllabification);
      CHECK(render(parse_annotated(text).syllabification) == text);
      CHECK(w.boundaries().size() == w.phones().size() - 1);
    }
  }
}

TEST_CASE("Syllabification enforces its shape", "[phonology]") {
  CHECK(code_of([] { Syllabification(phones_of("ab"), {1, 0}); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([] { Syllabification({}, {}); }) == ErrorCode::EmptyWord);
  CHECK(Syllabification(phones_of("abc"), {1, 1}).syllable_count() == 3);
}

TEST_CASE("Phone rejects reserved characters", "[phonology]") {
  CHECK_NOTHROW(Phone('{'));
  CHECK(code_of([] { Phone('-'); }) == ErrorCode::ReservedCharacter);
  CHECK(code_of([] { Phone('#'); }) == ErrorCode::ReservedCharacter);
  CHECK(code_of([] { Phone(' '); }) == ErrorCode::ReservedCharacter);
}

TEST_CASE("PhoneAlphabet keeps first-seen order without duplicates", "[phonology]") {
  const auto alphabet = PhoneAlphabet::from(phones_of("{bsEntsb"));
  REQUIRE(alphabet.size() == 6);
  CHECK(alphabet[0] == Phone('{'));
  CHECK(alphabet[3] == Phone('E'));
  CHECK(alphabet.index_of(Phone('t')) == 5u);
  CHECK_FALSE(alphabet.contains(Phone('z')));
}

TEST_CASE("categorize maps the worked example", "[phonology]") {
  const auto map = oracle::absent_map();
  CHECK(categorize(phones_of("{bsEnt"), map) == std::vector<CategoryId>{0, 1, 2, 0, 2, 2});
  CHECK(code_of([&] { categorize(phones_of("z"), map); }) == ErrorCode::UnknownPhone);
}

TEST_CASE("identity map gives each phone its own category", "[phonology]") {
  const auto alphabet = PhoneAlphabet::from(phones_of("{bsEnt"));
  const auto id = CategoryMap::identity(alphabet);
  CHECK(id.k() == 6);
  const auto cats = categorize(phones_of("{bsEnt"), id);
  CHECK(cats == std::vector<CategoryId>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("CategoryMap validates genes", "[phonology]") {
  const auto alphabet = PhoneAlphabet::from(phones_of("ab"));
  CHECK(code_of([&] { CategoryMap(alphabet, 2, {0, 2}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { CategoryMap(alphabet, 2, {0}); }) == ErrorCode::ShapeMismatch);
  CHECK(code_of([&] { CategoryMap(alphabet, 0, {0, 0}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("categorize commutes with category relabeling", "[phonology][property]") {
  std::mt19937_64 rng(11);
  const std::string symbols = "{bsEntI@pkr";
  const auto alphabet = PhoneAlphabet::from(phones_of(symbols));
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng() % 6;
    std::vector<CategoryId> genes(alphabet.size());
    for (auto& g : genes) g = static_cast<CategoryId>(rng() % k);
    std::vector<CategoryId> sigma(k);
    std::iota(sigma.begin(), sigma.end(), 0u);
    std::shuffle(sigma.begin(), sigma.end(), rng);
    std::vector<CategoryId> permuted(genes.size());
    for (std::size_t i = 0; i < genes.size(); ++i) permuted[i] = sigma[genes[i]];
    const CategoryMap map(alphabet, k, genes), relabeled(alphabet, k, permuted);

    for (const auto& w : oracle::random_words(rng, symbols, 3, 10)) {
      auto plain = categorize(w.phones(), map);
      for (auto& c : plain) c = sigma[c];
      CHECK(categorize(w.phones(), relabeled) == plain);
    }
    CHECK(map.canonical_genes() == relabeled.canonical_genes());
  }
}
