#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sylcat/error.hpp"
#include "sylcat/hmm.hpp"
#include "sylcat/parallel.hpp"
#include "sylcat/phonology.hpp"
#include "sylcat/rng.hpp"

namespace sylcat {

using Chromosome = CategoryMap;

/// What SUS sees: raw fitness, or rank-based expectations (1/sqrt(rank), ties
/// share the average of their ranks' values).
enum class FitnessScaling { Raw, Rank };

struct GaConfig {
  std::size_t k = 12;
  std::size_t population_size = 100;
  std::size_t max_generations = 500;
  std::size_t elite_count = 2;
  double rate_min = 0.01;
  double rate_max = 0.15;
  double sigma_ref = 0.02;
  /// Generations between refinement passes; 0 disables refinement.
  std::size_t refine_period = 10;
  double alpha = 0.1;
  double holdout_fraction = 0.2;
  std::uint64_t seed = 1;
  /// Stop after this many generations without improvement; 0 never stops early.
  std::size_t patience = 0;
  /// Worker threads for fitness evaluation. Never affects results.
  std::size_t jobs = 1;
  FitnessScaling scaling = FitnessScaling::Rank;

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
    if (k < 1) fail("k must be >= 1");
    if (population_size < 4) fail("population_size must be >= 4, got " + std::to_string(population_size));
    if (elite_count < 1 || elite_count >= population_size) {
      fail("elite_count must be in [1, population_size), got " + std::to_string(elite_count));
    }
    if (!(rate_min >= 0.0 && rate_max <= 1.0 && rate_min <= rate_max)) {
      fail("mutation rates need 0 <= rate_min <= rate_max <= 1");
    }
    if (!(sigma_ref > 0.0) || !std::isfinite(sigma_ref)) fail("sigma_ref must be positive");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) fail("holdout_fraction must be in (0, 1)");
    if (jobs < 1) fail("jobs must be >= 1");
  }
};

/// Words stored as alphabet indices for fast re-categorization.
class IndexedWords {
 public:
  IndexedWords(std::span<const AnnotatedWord> words, const PhoneAlphabet& alphabet) {
    phone_offsets_.push_back(0);
    bit_offsets_.push_back(0);
    for (const auto& w : words) {
      for (Phone p : w.phones()) {
        const auto idx = alphabet.index_of(p);
        if (!idx) throw Error(ErrorCode::UnknownPhone, "phone '" + p.str() + "' is not in the alphabet");
        phones_.push_back(static_cast<std::uint16_t>(*idx));
      }
      bits_.insert(bits_.end(), w.boundaries().begin(), w.boundaries().end());
      phone_offsets_.push_back(phones_.size());
      bit_offsets_.push_back(bits_.size());
    }
  }

  std::size_t size() const noexcept { return phone_offsets_.size() - 1; }
  std::span<const std::uint16_t> phones(std::size_t i) const {
    return std::span(phones_).subspan(phone_offsets_[i], phone_offsets_[i + 1] - phone_offsets_[i]);
  }
  std::span<const std::uint8_t> bits(std::size_t i) const {
    return std::span(bits_).subspan(bit_offsets_[i], bit_offsets_[i + 1] - bit_offsets_[i]);
  }

 private:
  std::vector<std::uint16_t> phones_;
  std::vector<std::uint8_t> bits_;
  std::vector<std::size_t> phone_offsets_;
  std::vector<std::size_t> bit_offsets_;
};

/// Trains on one word set and scores word accuracy on another, for any
/// category map over a fixed alphabet. Immutable after construction; safe to
/// call concurrently.
class FitnessEvaluator {
 public:
  FitnessEvaluator(PhoneAlphabet alphabet, std::span<const AnnotatedWord> train_words,
                   std::span<const AnnotatedWord> holdout_words, double alpha)
      : alphabet_(std::move(alphabet)),
        train_(train_words, alphabet_),
        holdout_(holdout_words, alphabet_),
        alpha_(alpha) {
    if (train_.size() == 0 || holdout_.size() == 0) {
      throw Error(ErrorCode::InvalidArgument, "fitness needs non-empty training and holdout sets");
    }
  }

  const PhoneAlphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t holdout_size() const noexcept { return holdout_.size(); }

  HmmModel train_model(const CategoryMap& map) const {
    check_alphabet(map);
    HmmTrainer trainer(map, alpha_);
    std::vector<CategoryId> cats;
    for (std::size_t i = 0; i < train_.size(); ++i) {
      categorize_into(map, train_.phones(i), cats);
      trainer.add(cats, train_.bits(i));
    }
    return std::move(trainer).finish();
  }

  /// Fraction of holdout words whose full boundary vector is decoded exactly.
  double fitness(const CategoryMap& map) const {
    const auto model = train_model(map);
    std::size_t correct = 0;
    for_each_decoded(model, [&](std::size_t, std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> gold) {
      if (std::equal(predicted.begin(), predicted.end(), gold.begin(), gold.end())) ++correct;
    });
    return static_cast<double>(correct) / static_cast<double>(holdout_.size());
  }

  /// For each alphabet phone, how many wrongly decoded gaps it flanks.
  std::vector<std::size_t> blame_counts(const HmmModel& model) const {
    check_alphabet(model.map());
    std::vector<std::size_t> counts(alphabet_.size(), 0);
    for_each_decoded(model, [&](std::size_t word, std::span<const std::uint8_t> predicted, std::span<const std::uint8_t> gold) {
      const auto phones = holdout_.phones(word);
      for (std::size_t t = 0; t < gold.size(); ++t) {
        if (predicted[t] != gold[t]) {
          ++counts[phones[t]];
          ++counts[phones[t + 1]];
        }
      }
    });
    return counts;
  }

 private:
  void check_alphabet(const CategoryMap& map) const {
    if (!(map.alphabet() == alphabet_)) {
      throw Error(ErrorCode::AlphabetMismatch, "category map alphabet differs from the evaluator's");
    }
  }

  static void categorize_into(const CategoryMap& map, std::span<const std::uint16_t> phones,
                              std::vector<CategoryId>& out) {
    out.resize(phones.size());
    for (std::size_t t = 0; t < phones.size(); ++t) out[t] = map.gene(phones[t]);
  }

  template <class Visit>
  void for_each_decoded(const HmmModel& model, Visit visit) const {
    std::vector<CategoryId> cats;
    std::vector<std::uint8_t> bits;
    std::vector<std::array<double, 2>> suffix;
    for (std::size_t i = 0; i < holdout_.size(); ++i) {
      const auto phones = holdout_.phones(i);
      if (phones.size() < 2) {
        bits.clear();
      } else {
        categorize_into(model.map(), phones, cats);
        detail::viterbi_into(
            model, phones.size() - 1, [&](std::size_t t) { return cats[t]; },
            [&](std::size_t t) { return cats[t + 1]; }, bits, suffix);
      }
      visit(i, std::span<const std::uint8_t>(bits), holdout_.bits(i));
    }
  }

  PhoneAlphabet alphabet_;
  IndexedWords train_;
  IndexedWords holdout_;
  double alpha_;
};

/// Word accuracy of a map: train on `train_words`, decode `holdout_words`.
inline double fitness(const Chromosome& chromosome, std::span<const AnnotatedWord> train_words,
                      std::span<const AnnotatedWord> holdout_words, double alpha) {
  FitnessEvaluator evaluator(chromosome.alphabet(), train_words, holdout_words, alpha);
  return evaluator.fitness(chromosome);
}

/// Per-phone error involvement, in the order of the model's alphabet: every
/// wrongly decoded gap charges both phones flanking it.
inline std::vector<std::size_t> blame_counts(const HmmModel& model, std::span<const AnnotatedWord> words) {
  const auto& alphabet = model.map().alphabet();
  std::vector<std::size_t> counts(alphabet.size(), 0);
  for (const auto& w : words) {
    const auto predicted = syllabify(model, w.phones());
    const auto gold = w.boundaries();
    const auto phones = w.phones();
    for (std::size_t t = 0; t < gold.size(); ++t) {
      if (predicted.boundaries()[t] != gold[t]) {
        ++counts[*alphabet.index_of(phones[t])];
        ++counts[*alphabet.index_of(phones[t + 1])];
      }
    }
  }
  return counts;
}

namespace detail {

inline std::optional<std::size_t> argmax_blame(std::span<const std::size_t> counts) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0 && (!best || counts[i] > counts[*best])) best = i;
  }
  return best;
}

}  // namespace detail

/// The phone involved in the most decoding errors; ties go to the phone that
/// comes first in the alphabet. Empty when decoding is perfect.
inline std::optional<Phone> blame_phone(const HmmModel& model, std::span<const AnnotatedWord> holdout_words) {
  const auto counts = blame_counts(model, holdout_words);
  const auto best = detail::argmax_blame(counts);
  if (!best) return std::nullopt;
  return model.map().alphabet()[*best];
}

template <class Rng>
std::vector<Chromosome> random_population(const PhoneAlphabet& alphabet, const GaConfig& config, Rng& rng) {
  if (alphabet.empty()) throw Error(ErrorCode::InvalidArgument, "cannot build chromosomes over an empty alphabet");
  std::vector<Chromosome> population;
  population.reserve(config.population_size);
  for (std::size_t i = 0; i < config.population_size; ++i) {
    std::vector<CategoryId> genes(alphabet.size());
    for (auto& g : genes) g = static_cast<CategoryId>(uniform_below(rng, config.k));
    population.emplace_back(alphabet, config.k, std::move(genes));
  }
  return population;
}

/// Stochastic universal sampling: `count` equally spaced pointers with one
/// random offset over the cumulative fitness line. Returns selected indices
/// in pointer order. Zero total fitness falls back to uniform selection.
template <class Rng>
std::vector<std::size_t> sus_select(std::span<const double> fitnesses, std::size_t count, Rng& rng) {
  if (fitnesses.empty() || count == 0) throw Error(ErrorCode::InvalidArgument, "SUS needs individuals and count >= 1");
  double total = 0.0;
  for (double f : fitnesses) {
    if (!(f >= 0.0)) throw Error(ErrorCode::InvalidArgument, "SUS needs non-negative fitnesses");
    total += f;
  }
  std::vector<std::size_t> selected;
  selected.reserve(count);
  if (!(total > 0.0)) {
    for (std::size_t j = 0; j < count; ++j) selected.push_back(uniform_below(rng, fitnesses.size()));
    return selected;
  }
  const double spacing = total / static_cast<double>(count);
  const double start = uniform01(rng) * spacing;
  std::size_t i = 0;
  double cumulative = fitnesses[0];
  for (std::size_t j = 0; j < count; ++j) {
    const double pointer = start + static_cast<double>(j) * spacing;
    while (pointer >= cumulative && i + 1 < fitnesses.size()) cumulative += fitnesses[++i];
    selected.push_back(i);
  }
  return selected;
}

/// Uniform crossover driven by an explicit mask: child0 takes parent1's gene
/// where mask is 1, child1 always takes the other parent's gene.
inline std::pair<Chromosome, Chromosome> scattered_crossover_with_mask(const Chromosome& parent0,
                                                                       const Chromosome& parent1,
                                                                       std::span<const std::uint8_t> mask) {
  if (!(parent0.alphabet() == parent1.alphabet()) || parent0.k() != parent1.k()) {
    throw Error(ErrorCode::AlphabetMismatch, "parents must share alphabet and k");
  }
  if (mask.size() != parent0.genes().size()) throw Error(ErrorCode::ShapeMismatch, "mask length must equal gene count");
  std::vector<CategoryId> g0(mask.size()), g1(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const bool swap = mask[i] != 0;
    g0[i] = swap ? parent1.gene(i) : parent0.gene(i);
    g1[i] = swap ? parent0.gene(i) : parent1.gene(i);
  }
  return {Chromosome(parent0.alphabet(), parent0.k(), std::move(g0)),
          Chromosome(parent0.alphabet(), parent0.k(), std::move(g1))};
}

template <class Rng>
std::pair<Chromosome, Chromosome> scattered_crossover(const Chromosome& parent0, const Chromosome& parent1, Rng& rng) {
  std::vector<std::uint8_t> mask(parent0.genes().size());
  for (auto& m : mask) m = static_cast<std::uint8_t>(rng() >> 63);
  return scattered_crossover_with_mask(parent0, parent1, mask);
}

/// Selection weights for SUS. Rank scaling keeps selection pressure steady
/// when all fitnesses sit in a narrow band.
inline std::vector<double> scale_fitness(std::span<const double> fitnesses, FitnessScaling scaling) {
  std::vector<double> out(fitnesses.begin(), fitnesses.end());
  if (scaling == FitnessScaling::Raw || out.empty()) return out;
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitnesses[a] > fitnesses[b]; });
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo;
    double sum = 0.0;
    while (hi < order.size() && fitnesses[order[hi]] == fitnesses[order[lo]]) {
      sum += 1.0 / std::sqrt(static_cast<double>(hi + 1));
      ++hi;
    }
    for (std::size_t i = lo; i < hi; ++i) out[order[i]] = sum / static_cast<double>(hi - lo);
    lo = hi;
  }
  return out;
}

/// Population standard deviation (divides by n).
inline double population_stddev(std::span<const double> values) {
  if (values.empty()) return 0.0;
  // Constant input is exactly zero; the mean of equal doubles can be off by an ulp.
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values[0]; })) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

/// High when fitnesses bunch together, low when they spread out:
/// rate_min + (rate_max - rate_min) * (1 - min(1, sigma / sigma_ref)).
inline double adaptive_mutation_rate(std::span<const double> fitnesses, const GaConfig& config) {
  if (fitnesses.size() < 2) throw Error(ErrorCode::InvalidArgument, "mutation rate needs at least two fitnesses");
  const double sigma = population_stddev(fitnesses);
  const double closeness = 1.0 - std::min(1.0, sigma / config.sigma_ref);
  return config.rate_min + (config.rate_max - config.rate_min) * closeness;
}

/// Each gene moves, with probability `rate`, to one of the other k-1
/// categories chosen uniformly.
template <class Rng>
Chromosome mutate(const Chromosome& chromosome, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidArgument, "mutation rate must be in [0, 1]");
  const std::size_t k = chromosome.k();
  std::vector<CategoryId> genes(chromosome.genes().begin(), chromosome.genes().end());
  if (k < 2) return chromosome;
  for (auto& g : genes) {
    if (!bernoulli(rng, rate)) continue;
    auto other = static_cast<CategoryId>(uniform_below(rng, k - 1));
    g = other >= g ? other + 1 : other;
  }
  return Chromosome(chromosome.alphabet(), k, std::move(genes));
}

struct Refinement {
  Chromosome chromosome;
  double fitness = 0.0;
  CategoryId old_category = 0;
  CategoryId new_category = 0;
  double original_fitness = 0.0;
};

namespace detail {

/// Fitness cache keyed by canonical genes. Reads and writes happen only at
/// generation barriers; evaluation of missing entries runs in parallel.
class FitnessCache {
 public:
  explicit FitnessCache(const FitnessEvaluator& evaluator, std::size_t jobs) : evaluator_(evaluator), jobs_(jobs) {}

  std::vector<double> evaluate(std::span<const Chromosome> chromosomes) {
    std::vector<std::string> keys;
    keys.reserve(chromosomes.size());
    std::vector<std::size_t> pending;
    std::unordered_map<std::string, std::size_t> pending_by_key;
    for (std::size_t i = 0; i < chromosomes.size(); ++i) {
      keys.push_back(key_of(chromosomes[i]));
      if (!cache_.contains(keys.back()) && pending_by_key.try_emplace(keys.back(), i).second) pending.push_back(i);
    }
    std::vector<double> fresh(pending.size());
    parallel_for(pending.size(), jobs_, [&](std::size_t j) { fresh[j] = evaluator_.fitness(chromosomes[pending[j]]); });
    for (std::size_t j = 0; j < pending.size(); ++j) cache_.emplace(keys[pending[j]], fresh[j]);
    std::vector<double> out;
    out.reserve(chromosomes.size());
    for (const auto& key : keys) out.push_back(cache_.at(key));
    return out;
  }

  double evaluate_one(const Chromosome& c) { return evaluate(std::span(&c, 1)).front(); }

  std::size_t evaluations() const noexcept { return cache_.size(); }

 private:
  static std::string key_of(const Chromosome& c) {
    const auto canon = c.canonical_genes();
    std::string key;
    key.reserve(canon.size() * 2);
    for (auto g : canon) {
      key.push_back(static_cast<char>(g & 0xff));
      key.push_back(static_cast<char>((g >> 8) & 0xff));
    }
    return key;
  }

  const FitnessEvaluator& evaluator_;
  std::size_t jobs_;
  std::unordered_map<std::string, double> cache_;
};

inline Refinement refine_with(const Chromosome& best, Phone phone, FitnessCache& cache) {
  const auto locus = best.alphabet().index_of(phone);
  if (!locus) throw Error(ErrorCode::UnknownPhone, "phone '" + phone.str() + "' is not in the chromosome");
  std::vector<Chromosome> variants;
  variants.reserve(best.k());
  for (CategoryId c = 0; c < best.k(); ++c) variants.push_back(best.with_gene(*locus, c));
  const auto fits = cache.evaluate(variants);
  std::size_t winner = 0;
  for (std::size_t c = 1; c < fits.size(); ++c)
    if (fits[c] > fits[winner]) winner = c;
  const auto old_category = best.gene(*locus);
  return Refinement{variants[winner], fits[winner], old_category, static_cast<CategoryId>(winner), fits[old_category]};
}

}  // namespace detail

/// Tries `phone` in every category with all other genes fixed and returns
/// the best variant (lowest category id on ties). Never worse than `best`.
inline Refinement refine_best(const Chromosome& best, Phone phone, std::span<const AnnotatedWord> train_words,
                              std::span<const AnnotatedWord> holdout_words, const GaConfig& config) {
  FitnessEvaluator evaluator(best.alphabet(), train_words, holdout_words, config.alpha);
  detail::FitnessCache cache(evaluator, config.jobs);
  return detail::refine_with(best, phone, cache);
}

struct HoldoutSplit {
  std::vector<AnnotatedWord> train;
  std::vector<AnnotatedWord> holdout;
};

/// Seeded split of a training portion into fitness-training and fitness-holdout
/// parts. Both parts are non-empty and the training part keeps at least one
/// word of two or more phones.
inline HoldoutSplit split_holdout(std::span<const AnnotatedWord> words, double fraction, std::uint64_t seed) {
  const std::size_t n = words.size();
  std::size_t trainable = 0;
  for (const auto& w : words) trainable += w.phones().size() >= 2 ? 1 : 0;
  if (n < 2 || trainable == 0) {
    throw Error(ErrorCode::TooFewWords, "need at least two words, one with two or more phones");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = derive_stream(seed, StreamPurpose::Holdout);
  shuffle(std::span<std::size_t>(order), rng);
  auto holdout_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  holdout_n = std::clamp<std::size_t>(holdout_n, 1, n - 1);
  // order[0, holdout_n) is holdout; make sure the rest has a trainable word.
  const auto is_trainable = [&](std::size_t i) { return words[order[i]].phones().size() >= 2; };
  bool train_ok = false;
  for (std::size_t i = holdout_n; i < n && !train_ok; ++i) train_ok = is_trainable(i);
  if (!train_ok) {
    for (std::size_t i = 0; i < holdout_n; ++i) {
      if (is_trainable(i)) {
        std::swap(order[i], order[holdout_n]);
        break;
      }
    }
  }
  std::vector<std::size_t> hold(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(holdout_n));
  std::vector<std::size_t> rest(order.begin() + static_cast<std::ptrdiff_t>(holdout_n), order.end());
  std::sort(hold.begin(), hold.end());
  std::sort(rest.begin(), rest.end());
  HoldoutSplit split;
  for (auto i : rest) split.train.push_back(words[i]);
  for (auto i : hold) split.holdout.push_back(words[i]);
  return split;
}

struct GenerationRecord {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  double mutation_rate = 0.0;
  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct RefinementEvent {
  std::size_t generation = 0;
  Phone phone{'?'};
  CategoryId old_category = 0;
  CategoryId new_category = 0;
  double fitness_delta = 0.0;
  friend bool operator==(const RefinementEvent&, const RefinementEvent&) = default;
};

struct EvolutionHistory {
  std::vector<GenerationRecord> generations;
  std::vector<RefinementEvent> refinements;
  friend bool operator==(const EvolutionHistory&, const EvolutionHistory&) = default;
};

/// CSV: `generation,best,mean,stddev,mutation_rate`, then refinement events
/// as `#` comment lines.
inline void write_history_csv(std::ostream& out, const EvolutionHistory& history) {
  char buf[256];
  out << "generation,best,mean,stddev,mutation_rate\n";
  for (const auto& r : history.generations) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", r.generation, r.best, r.mean, r.stddev,
                  r.mutation_rate);
    out << buf;
  }
  for (const auto& e : history.refinements) {
    std::snprintf(buf, sizeof buf, "# refine generation=%zu phone=%c from=%u to=%u delta=%.6f\n", e.generation,
                  e.phone.symbol(), static_cast<unsigned>(e.old_category), static_cast<unsigned>(e.new_category),
                  e.fitness_delta);
    out << buf;
  }
}

struct EvolutionResult {
  Chromosome best;
  double best_fitness = 0.0;
  EvolutionHistory history;
};

/// Runs the hybrid genetic algorithm on a training portion. Fitness is word
/// accuracy on a seeded holdout carved from `words` once. `alphabet` fixes the
/// chromosome loci; pass a superset to give genes to phones absent from
/// `words` (they are assigned but never influence fitness).
inline EvolutionResult evolve(std::span<const AnnotatedWord> words, const GaConfig& config,
                              std::optional<PhoneAlphabet> alphabet = std::nullopt) {
  config.validate();
  PhoneAlphabet loci = alphabet ? *alphabet : PhoneAlphabet{};
  for (const auto& w : words)
    for (Phone p : w.phones()) {
      if (alphabet && !loci.contains(p)) {
        throw Error(ErrorCode::UnknownPhone, "phone '" + p.str() + "' missing from the supplied alphabet");
      }
      loci.insert(p);
    }

  const auto split = split_holdout(words, config.holdout_fraction, config.seed);
  const FitnessEvaluator evaluator(loci, split.train, split.holdout, config.alpha);
  detail::FitnessCache cache(evaluator, config.jobs);

  auto init_rng = derive_stream(config.seed, StreamPurpose::InitialPopulation);
  auto population = random_population(loci, config, init_rng);
  EvolutionHistory history;
  std::optional<Chromosome> champion;
  double champion_fitness = -1.0;
  std::size_t stale = 0;

  for (std::size_t gen = 0;; ++gen) {
    auto fits = cache.evaluate(population);
    auto best_index = [&] {
      return static_cast<std::size_t>(std::max_element(fits.begin(), fits.end()) - fits.begin());
    };

    if (config.refine_period > 0 && gen > 0 && gen % config.refine_period == 0) {
      const auto bi = best_index();
      const auto model = evaluator.train_model(population[bi]);
      const auto counts = evaluator.blame_counts(model);
      if (const auto culprit = detail::argmax_blame(counts)) {
        const Phone phone = loci[*culprit];
        auto refined = detail::refine_with(population[bi], phone, cache);
        history.refinements.push_back(
            {gen, phone, refined.old_category, refined.new_category, refined.fitness - fits[bi]});
        population[bi] = std::move(refined.chromosome);
        fits[bi] = refined.fitness;
      }
    }

    const auto bi = best_index();
    const double mean = std::accumulate(fits.begin(), fits.end(), 0.0) / static_cast<double>(fits.size());
    const double rate = adaptive_mutation_rate(fits, config);
    history.generations.push_back({gen, fits[bi], mean, population_stddev(fits), rate});

    if (fits[bi] > champion_fitness) {
      champion = population[bi];
      champion_fitness = fits[bi];
      stale = 0;
    } else {
      ++stale;
    }
    if (gen >= config.max_generations) break;
    if (config.patience > 0 && stale >= config.patience) break;

    // Elites: highest fitness first, lower index on ties.
    std::vector<std::size_t> ranked(population.size());
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return fits[a] > fits[b]; });
    std::vector<Chromosome> next;
    next.reserve(population.size());
    for (std::size_t e = 0; e < config.elite_count; ++e) next.push_back(population[ranked[e]]);

    const std::size_t children = population.size() - config.elite_count;
    const std::size_t parent_count = children + (children % 2);
    auto select_rng = derive_stream(config.seed, StreamPurpose::Selection, gen);
    const auto weights = scale_fitness(fits, config.scaling);
    auto parents = sus_select(weights, parent_count, select_rng);
    auto pair_rng = derive_stream(config.seed, StreamPurpose::Pairing, gen);
    shuffle(std::span<std::size_t>(parents), pair_rng);

    for (std::size_t p = 0; p + 1 < parents.size() && next.size() < population.size(); p += 2) {
      auto cross_rng = derive_stream(config.seed, StreamPurpose::Crossover, gen, p / 2);
      auto [c0, c1] = scattered_crossover(population[parents[p]], population[parents[p + 1]], cross_rng);
      auto mut0 = derive_stream(config.seed, StreamPurpose::Mutation, gen, p);
      next.push_back(mutate(c0, rate, mut0));
      if (next.size() < population.size()) {
        auto mut1 = derive_stream(config.seed, StreamPurpose::Mutation, gen, p + 1);
        next.push_back(mutate(c1, rate, mut1));
      }
    }
    population = std::move(next);
  }

  return EvolutionResult{std::move(*champion), champion_fitness, std::move(history)};
}

}  // namespace sylcat
