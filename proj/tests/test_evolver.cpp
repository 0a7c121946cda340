#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "sylcat/evolver.hpp"

using namespace sylcat;
using Catch::Approx;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected sylcat::Error");
  return ErrorCode::InvalidArgument;
}

std::vector<AnnotatedWord> words_of(std::initializer_list<const char*> texts) {
  std::vector<AnnotatedWord> out;
  for (const char* t : texts) out.push_back(parse_annotated(t, t));
  return out;
}

/// Generator whose first uniform01() draw is exactly `u`.
struct FixedStart {
  double u;
  std::uint64_t operator()() const { return static_cast<std::uint64_t>(u * 0x1.0p53) << 11; }
};

std::vector<std::size_t> copies(std::span<const std::size_t> picks, std::size_t n) {
  std::vector<std::size_t> out(n, 0);
  for (auto p : picks) ++out[p];
  return out;
}

PhoneAlphabet alphabet_of(const std::string& symbols) { return PhoneAlphabet::from(parse_phones(symbols)); }

std::vector<AnnotatedWord> mini_corpus_head(std::size_t n) {
  std::ifstream in(std::string(SYLCAT_DATA_DIR) + "/minicorpus.tsv");
  std::vector<AnnotatedWord> out;
  std::string line;
  while (out.size() < n && std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    out.push_back(parse_annotated(line.substr(tab + 1), line.substr(0, tab)));
  }
  return out;
}

}  // namespace

TEST_CASE("random_population draws uniform genes deterministically", "[evolver]") {
  GaConfig config;
  config.population_size = 10;
  const auto alphabet = alphabet_of("{bsEnt");

  config.k = 1;
  auto rng = SplitMix64(5);
  for (const auto& c : random_population(alphabet, config, rng)) {
    for (auto g : c.genes()) CHECK(g == 0);
  }

  config.k = 12;
  auto r1 = SplitMix64(77), r2 = SplitMix64(77);
  CHECK(random_population(alphabet, config, r1) == random_population(alphabet, config, r2));

  // 100 loci x 100 chromosomes = 10 000 genes; each category within 5 sigma.
  std::string symbols;
  for (char ch = '!'; symbols.size() < 100 && ch < 0x7f; ++ch)
    if (is_phone_symbol(ch)) symbols.push_back(ch);
  // Only 92 usable ASCII symbols; take 100 chromosomes x 92 loci and scale.
  const auto big = alphabet_of(symbols);
  config.population_size = 10000 / big.size() + 1;
  auto r3 = SplitMix64(123);
  std::vector<std::size_t> freq(12, 0);
  std::size_t total = 0;
  for (const auto& c : random_population(big, config, r3)) {
    for (auto g : c.genes()) {
      ++freq[g];
      ++total;
    }
  }
  REQUIRE(total >= 10000);
  const double p = 1.0 / 12.0;
  const double mean = total * p, sigma = std::sqrt(total * p * (1 - p));
  for (auto f : freq) CHECK(std::abs(static_cast<double>(f) - mean) <= 5 * sigma);
}

TEST_CASE("fitness is word accuracy on the holdout", "[evolver]") {
  const auto word = words_of({"{b-sEnt"});
  const auto map = oracle::absent_map();
  CHECK(fitness(map, word, word, 0.1) == 1.0);

  // Relabeled chromosome: same fitness.
  const CategoryMap relabeled(map.alphabet(), 3, {2, 0, 1, 2, 1, 1});
  const auto train = words_of({"{b-sEnt", "sE-bE", "bE-n{t", "s{-tEn"});
  const auto holdout = words_of({"tE-b{s", "n{-sEt", "bEs"});
  CHECK(fitness(map, train, holdout, 0.1) == fitness(relabeled, train, holdout, 0.1));

  CHECK(fitness(map, train, words_of({"s", "E"}), 0.1) == 1.0);
}

TEST_CASE("SUS gives equal shares for equal fitness", "[evolver]") {
  const std::vector<double> fits{0.25, 0.25, 0.25, 0.25};
  for (double u : {0.0, 0.3, 0.999}) {
    FixedStart rng{u};
    CHECK(copies(sus_select(fits, 4, rng), 4) == std::vector<std::size_t>{1, 1, 1, 1});
  }
}

TEST_CASE("SUS copy counts for [2,1,1,0] at every start offset", "[evolver]") {
  const std::vector<double> fits{2, 1, 1, 0};
  for (int i = 0; i < 1000; ++i) {
    FixedStart rng{i / 1000.0};
    CHECK(copies(sus_select(fits, 4, rng), 4) == std::vector<std::size_t>{2, 1, 1, 0});
  }
}

TEST_CASE("SUS stays within floor/ceil of expected copies", "[evolver][property]") {
  std::mt19937_64 gen(41);
  auto rng = SplitMix64(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen() % 30;
    const std::size_t count = 1 + gen() % 40;
    std::vector<double> fits(n);
    for (auto& f : fits) f = (gen() % 4 == 0) ? 0.0 : std::uniform_real_distribution<double>(0, 1)(gen);
    if (std::accumulate(fits.begin(), fits.end(), 0.0) == 0.0) fits[0] = 1.0;
    const double total = std::accumulate(fits.begin(), fits.end(), 0.0);
    const auto got = copies(sus_select(fits, count, rng), n);
    for (std::size_t i = 0; i < n; ++i) {
      const double e = count * fits[i] / total;
      CHECK(static_cast<double>(got[i]) >= std::floor(e - 1e-9));
      CHECK(static_cast<double>(got[i]) <= std::ceil(e + 1e-9));
    }
  }
}

TEST_CASE("SUS falls back to uniform selection for zero fitness", "[evolver]") {
  const std::vector<double> zeros(5, 0.0);
  auto rng = SplitMix64(1);
  const auto picks = sus_select(zeros, 1000, rng);
  CHECK(picks.size() == 1000);
  for (auto c : copies(picks, 5)) CHECK(c > 100);
  CHECK(code_of([&] { sus_select(std::vector<double>{-1.0, 2.0}, 2, rng); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("scattered crossover applies the mask and its complement", "[evolver]") {
  const auto alphabet = alphabet_of("abcd");
  const CategoryMap zeros(alphabet, 2, {0, 0, 0, 0}), ones(alphabet, 2, {1, 1, 1, 1});
  const std::vector<std::uint8_t> mask{1, 0, 1, 0};
  const auto [c0, c1] = scattered_crossover_with_mask(zeros, ones, mask);
  CHECK(std::vector<CategoryId>(c0.genes().begin(), c0.genes().end()) == std::vector<CategoryId>{1, 0, 1, 0});
  CHECK(std::vector<CategoryId>(c1.genes().begin(), c1.genes().end()) == std::vector<CategoryId>{0, 1, 0, 1});

  auto rng = SplitMix64(3);
  const auto [s0, s1] = scattered_crossover(ones, ones, rng);
  CHECK(s0 == ones);
  CHECK(s1 == ones);

  const CategoryMap other(alphabet_of("abce"), 2, {0, 0, 0, 0});
  CHECK(code_of([&] { scattered_crossover(zeros, other, rng); }) == ErrorCode::AlphabetMismatch);
  const CategoryMap wider(alphabet, 3, {0, 0, 0, 0});
  CHECK(code_of([&] { scattered_crossover(zeros, wider, rng); }) == ErrorCode::AlphabetMismatch);
}

TEST_CASE("scattered crossover conserves genes at every locus", "[evolver][property]") {
  std::mt19937_64 gen(9);
  auto rng = SplitMix64(9);
  const auto alphabet = alphabet_of("{bsEntI@pkrlmz");
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + gen() % 12;
    std::vector<CategoryId> g0(alphabet.size()), g1(alphabet.size());
    for (auto& g : g0) g = static_cast<CategoryId>(gen() % k);
    for (auto& g : g1) g = static_cast<CategoryId>(gen() % k);
    const CategoryMap p0(alphabet, k, g0), p1(alphabet, k, g1);
    const auto [c0, c1] = scattered_crossover(p0, p1, rng);
    for (std::size_t i = 0; i < alphabet.size(); ++i) {
      const bool took_p0 = c0.gene(i) == p0.gene(i) && c1.gene(i) == p1.gene(i);
      const bool took_p1 = c0.gene(i) == p1.gene(i) && c1.gene(i) == p0.gene(i);
      CHECK((took_p0 || took_p1));
    }
  }
}

TEST_CASE("rank scaling uses 1/sqrt(rank) and averages ties", "[evolver]") {
  const std::vector<double> fits{0.1, 0.5, 0.3, 0.3};
  const auto w = scale_fitness(fits, FitnessScaling::Rank);
  const double tie = (1.0 / std::sqrt(2.0) + 1.0 / std::sqrt(3.0)) / 2.0;
  CHECK(w == std::vector<double>{0.5, 1.0, tie, tie});
  CHECK(scale_fitness(fits, FitnessScaling::Raw) == fits);
  // Order-preserving and strictly positive, so SUS stays well defined.
  const auto flat = scale_fitness(std::vector<double>{0.0, 0.0}, FitnessScaling::Rank);
  CHECK(flat[0] == flat[1]);
  CHECK(flat[0] > 0.0);
}

TEST_CASE("adaptive mutation rate endpoints and midpoint", "[evolver]") {
  GaConfig config;  // rate_min 0.01, rate_max 0.15, sigma_ref 0.02
  CHECK(adaptive_mutation_rate(std::vector<double>{0.5, 0.5, 0.5}, config) == Approx(0.15));
  // population stddev of {0.5 - d, 0.5 + d} is d.
  CHECK(adaptive_mutation_rate(std::vector<double>{0.48, 0.52}, config) == Approx(0.01));
  CHECK(adaptive_mutation_rate(std::vector<double>{0.1, 0.9}, config) == Approx(0.01));
  CHECK(adaptive_mutation_rate(std::vector<double>{0.49, 0.51}, config) == Approx(0.08));
  CHECK(code_of([&] { adaptive_mutation_rate(std::vector<double>{0.5}, config); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("adaptive mutation rate is bounded and non-increasing in spread", "[evolver][property]") {
  GaConfig config;
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 300; ++trial) {
    const double d1 = std::uniform_real_distribution<double>(0, 0.05)(gen);
    const double d2 = std::uniform_real_distribution<double>(0, 0.05)(gen);
    const double r1 = adaptive_mutation_rate(std::vector<double>{0.5 - d1, 0.5 + d1}, config);
    const double r2 = adaptive_mutation_rate(std::vector<double>{0.5 - d2, 0.5 + d2}, config);
    CHECK(r1 >= config.rate_min);
    CHECK(r1 <= config.rate_max);
    if (d1 <= d2) CHECK(r1 >= r2);
  }
}

TEST_CASE("mutate respects rate and k", "[evolver]") {
  std::string symbols;
  for (char ch = '!'; ch < 0x7f; ++ch)
    if (is_phone_symbol(ch)) symbols.push_back(ch);
  const auto alphabet = alphabet_of(symbols);
  auto rng = SplitMix64(21);

  const CategoryMap two(alphabet, 2, std::vector<CategoryId>(alphabet.size(), 0));
  CHECK(mutate(two, 0.0, rng) == two);
  const auto flipped = mutate(two, 1.0, rng);
  for (auto g : flipped.genes()) CHECK(g == 1);

  const CategoryMap one(alphabet, 1, std::vector<CategoryId>(alphabet.size(), 0));
  CHECK(mutate(one, 1.0, rng) == one);

  // rate 0.5 over >= 10 000 genes: changed fraction within 5 sigma.
  std::size_t changed = 0, total = 0;
  std::mt19937_64 gen(4);
  while (total < 10000) {
    std::vector<CategoryId> genes(alphabet.size());
    for (auto& g : genes) g = static_cast<CategoryId>(gen() % 12);
    const CategoryMap c(alphabet, 12, genes);
    const auto m = mutate(c, 0.5, rng);
    for (std::size_t i = 0; i < genes.size(); ++i) {
      CHECK(m.gene(i) < 12);
      changed += m.gene(i) != c.gene(i);
      ++total;
    }
  }
  const double sigma = std::sqrt(total * 0.25);
  CHECK(std::abs(static_cast<double>(changed) - total * 0.5) <= 5 * sigma);
}

TEST_CASE("blame_phone charges both phones flanking an error", "[evolver]") {
  const auto model = train(words_of({"{b-sEnt"}), oracle::absent_map(), 0.1);
  // Gold splits s|E as well; the model only knows the b|s split.
  CHECK(blame_phone(model, words_of({"{b-s-Ent"})) == Phone('s'));
  CHECK_FALSE(blame_phone(model, words_of({"{b-sEnt"})).has_value());

  // Untrained model decodes all-zero, so every gold boundary is an error:
  // a|t, t|s, o|t -> t flanks three, every other phone one.
  const auto alphabet = alphabet_of("atseo");
  const HmmModel fresh(CategoryMap::identity(alphabet), 0.1);
  const auto fixture = words_of({"a-te", "et-s", "o-t"});
  const auto counts = blame_counts(fresh, fixture);
  CHECK(counts == std::vector<std::size_t>{1, 3, 1, 0, 1});
  CHECK(blame_phone(fresh, fixture) == Phone('t'));
}

TEST_CASE("refine_best picks the best category for one phone", "[evolver]") {
  GaConfig config;
  // Vowels a, i -> 1; k -> 0; t starts alone in category 2.
  const auto alphabet = alphabet_of("akit");
  const CategoryMap start(alphabet, 3, {1, 0, 1, 2});
  const auto train = words_of({"a-ka", "i-ka", "a-ki", "ak", "ta"});
  const auto holdout = words_of({"a-ta"});

  // Exhaustive oracle over the three variants.
  std::vector<double> scores;
  for (CategoryId c = 0; c < 3; ++c) scores.push_back(fitness(start.with_gene(3, c), train, holdout, config.alpha));
  REQUIRE(scores[2] == 0.0);
  REQUIRE(scores[0] == 1.0);
  const auto refined = refine_best(start, Phone('t'), train, holdout, config);
  CHECK(refined.chromosome.gene(3) == 0);
  CHECK(refined.fitness == 1.0);
  CHECK(refined.old_category == 2);
  CHECK(refined.new_category == 0);

  // Already optimal: assignment kept.
  const auto again = refine_best(refined.chromosome, Phone('t'), train, holdout, config);
  CHECK(again.chromosome == refined.chromosome);

  // k = 1: nothing to try.
  const CategoryMap single(alphabet, 1, {0, 0, 0, 0});
  CHECK(refine_best(single, Phone('t'), train, holdout, config).chromosome == single);
}

TEST_CASE("refine_best never decreases fitness", "[evolver][property]") {
  std::mt19937_64 gen(55);
  GaConfig config;
  const std::string symbols = "{bsEntI@pk";
  const auto alphabet = alphabet_of(symbols);
  for (int trial = 0; trial < 40; ++trial) {
    const auto train = oracle::random_words(gen, symbols, 30, 8);
    const auto holdout = oracle::random_words(gen, symbols, 15, 8);
    const std::size_t k = 1 + gen() % 5;
    std::vector<CategoryId> genes(alphabet.size());
    for (auto& g : genes) g = static_cast<CategoryId>(gen() % k);
    const CategoryMap map(alphabet, k, genes);
    const Phone phone = alphabet[gen() % alphabet.size()];
    const auto before = fitness(map, train, holdout, config.alpha);
    const auto refined = refine_best(map, phone, train, holdout, config);
    CHECK(refined.fitness >= before);
    CHECK(refined.fitness == fitness(refined.chromosome, train, holdout, config.alpha));
  }
}

TEST_CASE("split_holdout keeps both parts usable", "[evolver]") {
  const auto words = words_of({"a", "b", "c", "d", "e-f"});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto split = split_holdout(words, 0.8, seed);
    CHECK(split.holdout.size() == 4);
    CHECK(split.train.size() == 1);
    CHECK(split.train[0].phones().size() == 2);
  }
  CHECK(code_of([&] { split_holdout(words_of({"a", "b"}), 0.5, 1); }) == ErrorCode::TooFewWords);
}

TEST_CASE("GaConfig validation", "[evolver]") {
  GaConfig config;
  CHECK_NOTHROW(config.validate());
  config.population_size = 2;
  CHECK(code_of([&] { config.validate(); }) == ErrorCode::ConfigInvalid);
  config = GaConfig{};
  config.rate_min = 0.5;
  config.rate_max = 0.1;
  CHECK(code_of([&] { config.validate(); }) == ErrorCode::ConfigInvalid);
  config = GaConfig{};
  config.holdout_fraction = 1.0;
  CHECK(code_of([&] { config.validate(); }) == ErrorCode::ConfigInvalid);
  config = GaConfig{};
  config.elite_count = config.population_size;
  CHECK(code_of([&] { config.validate(); }) == ErrorCode::ConfigInvalid);
}

TEST_CASE("evolve keeps the best individual and is reproducible", "[evolver]") {
  const auto words = mini_corpus_head(300);
  GaConfig config;
  config.population_size = 4;
  config.max_generations = 1;
  config.elite_count = 1;
  config.seed = 3;
  const auto tiny = evolve(words, config);
  REQUIRE(tiny.history.generations.size() == 2);
  CHECK(tiny.history.generations[1].best >= tiny.history.generations[0].best);

  config.population_size = 12;
  config.max_generations = 25;
  config.refine_period = 5;
  config.k = 6;
  const auto serial = evolve(words, config);
  for (std::size_t g = 1; g < serial.history.generations.size(); ++g) {
    CHECK(serial.history.generations[g].best >= serial.history.generations[g - 1].best);
  }
  CHECK(serial.best_fitness == serial.history.generations.back().best);
  CHECK(serial.best_fitness == fitness(serial.best, split_holdout(words, config.holdout_fraction, config.seed).train,
                                       split_holdout(words, config.holdout_fraction, config.seed).holdout, config.alpha));
  CHECK(serial.history.refinements.size() <= 5);

  config.jobs = 8;
  const auto parallel = evolve(words, config);
  CHECK(parallel.history == serial.history);
  CHECK(parallel.best == serial.best);

  std::ostringstream a, b;
  write_history_csv(a, serial.history);
  write_history_csv(b, parallel.history);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("generation,best,mean,stddev,mutation_rate\n0,", 0) == 0);
}

TEST_CASE("evolve stops early when patience runs out", "[evolver]") {
  const auto words = mini_corpus_head(200);
  GaConfig config;
  config.population_size = 6;
  config.max_generations = 200;
  config.patience = 3;
  config.k = 4;
  const auto result = evolve(words, config);
  CHECK(result.history.generations.size() < 201);
}
