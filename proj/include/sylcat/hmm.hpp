#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sylcat/error.hpp"
#include "sylcat/phonology.hpp"

namespace sylcat {

/// Category bigram seen at one inter-phone gap.
struct Observation {
  CategoryId left = 0;
  CategoryId right = 0;
  friend constexpr bool operator==(Observation, Observation) = default;
};

/// Hidden state at one gap: the gap's left category and its boundary bit.
/// K categories give exactly 2K states.
struct HiddenState {
  CategoryId cat = 0;
  std::uint8_t bit = 0;

  constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(cat) * 2 + bit; }
  static constexpr HiddenState from_index(std::size_t i) noexcept {
    return {static_cast<CategoryId>(i / 2), static_cast<std::uint8_t>(i % 2)};
  }
  friend constexpr bool operator==(HiddenState, HiddenState) = default;
};

inline std::vector<Observation> encode_observations(std::span<const CategoryId> categories) {
  if (categories.size() < 2) {
    throw Error(ErrorCode::WordTooShort, "observations need at least two categories");
  }
  std::vector<Observation> out;
  out.reserve(categories.size() - 1);
  for (std::size_t t = 0; t + 1 < categories.size(); ++t) out.push_back({categories[t], categories[t + 1]});
  return out;
}

inline std::vector<HiddenState> encode_states(std::span<const CategoryId> categories,
                                              std::span<const std::uint8_t> boundaries) {
  if (categories.size() < 2 || boundaries.size() != categories.size() - 1) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(categories.size()) + " categories with " +
                                              std::to_string(boundaries.size()) + " boundary bits");
  }
  std::vector<HiddenState> out;
  out.reserve(boundaries.size());
  for (std::size_t t = 0; t < boundaries.size(); ++t) out.push_back({categories[t], boundaries[t]});
  return out;
}

/// Relative slack under which two path scores count as tied. Decoding and any
/// reference scorer must use the same rule for the tie-break to be comparable.
inline constexpr double kScoreTieTolerance = 1e-9;

inline bool within_tie(double candidate, double best) noexcept {
  return candidate >= best - kScoreTieTolerance * std::max(1.0, std::abs(best));
}

/// First-order HMM over (category, boundary-bit) states, stored as integer
/// counts with additive smoothing applied on query. Emission rows are indexed
/// by the right category only: a state (x, b) can emit only bigrams (x, y).
class HmmModel {
 public:
  HmmModel(CategoryMap map, double alpha)
      : HmmModel(map, alpha, std::vector<std::uint64_t>(2 * map.k(), 0),
                 std::vector<std::uint64_t>(4 * map.k() * map.k(), 0),
                 std::vector<std::uint64_t>(2 * map.k() * map.k(), 0)) {}

  /// `emission[s * k + y]` counts observation (s.cat, y) from state s.
  HmmModel(CategoryMap map, double alpha, std::vector<std::uint64_t> initial,
           std::vector<std::uint64_t> transition, std::vector<std::uint64_t> emission)
      : map_(std::move(map)),
        alpha_(alpha),
        initial_(std::move(initial)),
        transition_(std::move(transition)),
        emission_(std::move(emission)) {
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) {
      throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be positive and finite");
    }
    const std::size_t k = map_.k();
    const std::size_t s = 2 * k;
    if (initial_.size() != s || transition_.size() != s * s || emission_.size() != s * k) {
      throw Error(ErrorCode::ShapeMismatch, "count tables do not match k=" + std::to_string(k));
    }
    build_log_tables();
  }

  std::size_t k() const noexcept { return map_.k(); }
  std::size_t state_count() const noexcept { return 2 * map_.k(); }
  double alpha() const noexcept { return alpha_; }
  const CategoryMap& map() const noexcept { return map_; }

  std::uint64_t initial_count(HiddenState s) const { return initial_[checked(s)]; }
  std::uint64_t transition_count(HiddenState from, HiddenState to) const {
    return transition_[checked(from) * state_count() + checked(to)];
  }
  std::uint64_t emission_count(HiddenState s, Observation o) const {
    const auto si = checked(s);
    check_category(o.left);
    check_category(o.right);
    if (o.left != s.cat) return 0;
    return emission_[si * k() + o.right];
  }

  std::span<const std::uint64_t> initial_counts() const noexcept { return initial_; }
  std::span<const std::uint64_t> transition_counts() const noexcept { return transition_; }
  std::span<const std::uint64_t> emission_counts() const noexcept { return emission_; }

  /// log P(first state = s); smoothed over all 2K states.
  double log_initial(HiddenState s) const { return log_initial_[checked(s)]; }

  /// log P(to | from); smoothed over all 2K successors.
  double log_transition(HiddenState from, HiddenState to) const {
    return log_transition_[checked(from) * state_count() + checked(to)];
  }

  /// log P(o | s); smoothed over the K bigrams (s.cat, y). Bigrams whose left
  /// category differs from s.cat are impossible (-inf).
  double log_emission(HiddenState s, Observation o) const {
    const auto si = checked(s);
    check_category(o.left);
    check_category(o.right);
    if (o.left != s.cat) return -std::numeric_limits<double>::infinity();
    return log_emission_[si * k() + o.right];
  }

  // Unchecked accessors for decoding hot loops.
  double log_initial_at(std::size_t s) const noexcept { return log_initial_[s]; }
  double log_transition_at(std::size_t from, std::size_t to) const noexcept {
    return log_transition_[from * state_count() + to];
  }
  double log_emission_at(std::size_t s, CategoryId right) const noexcept { return log_emission_[s * k() + right]; }

 private:
  std::size_t checked(HiddenState s) const {
    check_category(s.cat);
    if (s.bit > 1) throw Error(ErrorCode::InvalidArgument, "boundary bit must be 0 or 1");
    return s.index();
  }

  void check_category(CategoryId c) const {
    if (c >= k()) {
      throw Error(ErrorCode::InvalidArgument,
                  "category " + std::to_string(c) + " out of range for k=" + std::to_string(k()));
    }
  }

  void build_log_tables() {
    const std::size_t s = state_count();
    const std::size_t kk = k();
    log_initial_.resize(s);
    log_transition_.resize(s * s);
    log_emission_.resize(s * kk);

    auto smooth_row = [this](std::span<const std::uint64_t> counts, std::span<double> logs) {
      std::uint64_t total = 0;
      for (auto c : counts) total += c;
      const double denom = std::log(static_cast<double>(total) + alpha_ * static_cast<double>(counts.size()));
      for (std::size_t i = 0; i < counts.size(); ++i) {
        logs[i] = std::log(static_cast<double>(counts[i]) + alpha_) - denom;
      }
    };

    smooth_row(initial_, log_initial_);
    for (std::size_t from = 0; from < s; ++from) {
      smooth_row(std::span(transition_).subspan(from * s, s), std::span(log_transition_).subspan(from * s, s));
      smooth_row(std::span(emission_).subspan(from * kk, kk), std::span(log_emission_).subspan(from * kk, kk));
    }
  }

  CategoryMap map_;
  double alpha_;
  std::vector<std::uint64_t> initial_;
  std::vector<std::uint64_t> transition_;
  std::vector<std::uint64_t> emission_;
  std::vector<double> log_initial_;
  std::vector<double> log_transition_;
  std::vector<double> log_emission_;
};

/// Accumulates supervised counts from gold-annotated category sequences.
class HmmTrainer {
 public:
  HmmTrainer(CategoryMap map, double alpha)
      : map_(std::move(map)),
        alpha_(alpha),
        initial_(2 * map_.k(), 0),
        transition_(4 * map_.k() * map_.k(), 0),
        emission_(2 * map_.k() * map_.k(), 0) {}

  /// Adds one word given its category sequence; one-category words add nothing.
  void add(std::span<const CategoryId> categories, std::span<const std::uint8_t> boundaries) {
    if (boundaries.size() + 1 != categories.size()) {
      throw Error(ErrorCode::ShapeMismatch, "boundary bits do not match category sequence");
    }
    if (categories.size() < 2) return;
    const std::size_t k = map_.k();
    const std::size_t s = 2 * k;
    std::size_t prev = 0;
    for (std::size_t t = 0; t < boundaries.size(); ++t) {
      const std::size_t state = static_cast<std::size_t>(categories[t]) * 2 + boundaries[t];
      if (t == 0) {
        ++initial_[state];
      } else {
        ++transition_[prev * s + state];
      }
      ++emission_[state * k + categories[t + 1]];
      prev = state;
    }
    ++trained_words_;
  }

  void add(const AnnotatedWord& word) {
    const auto cats = categorize(word.phones(), map_);
    add(cats, word.boundaries());
  }

  std::size_t trained_words() const noexcept { return trained_words_; }
  const CategoryMap& map() const noexcept { return map_; }

  HmmModel finish() && {
    if (trained_words_ == 0) {
      throw Error(ErrorCode::NoTrainableWords, "no training word has two or more phones");
    }
    return HmmModel(std::move(map_), alpha_, std::move(initial_), std::move(transition_), std::move(emission_));
  }

 private:
  CategoryMap map_;
  double alpha_;
  std::vector<std::uint64_t> initial_;
  std::vector<std::uint64_t> transition_;
  std::vector<std::uint64_t> emission_;
  std::size_t trained_words_ = 0;
};

inline HmmModel train(std::span<const AnnotatedWord> words, const CategoryMap& map, double alpha) {
  HmmTrainer trainer(map, alpha);
  for (const auto& w : words) trainer.add(w);
  return std::move(trainer).finish();
}

namespace detail {

/// Viterbi over the two admissible states per step. `left(t)` / `right(t)`
/// give the bigram at step t. Returns the lexicographically smallest bit
/// vector among maximum-score paths (bit 0 preferred at the earliest step),
/// using a backward pass for best-suffix scores and a greedy forward pass.
template <class Left, class Right>
void viterbi_into(const HmmModel& model, std::size_t m, Left left, Right right, std::vector<std::uint8_t>& bits,
                  std::vector<std::array<double, 2>>& suffix) {
  bits.assign(m, 0);
  if (m == 0) return;
  suffix.assign(m, {0.0, 0.0});
  auto state = [&](std::size_t t, std::size_t b) { return static_cast<std::size_t>(left(t)) * 2 + b; };
  auto emit = [&](std::size_t t, std::size_t b) { return model.log_emission_at(state(t, b), right(t)); };

  for (std::size_t t = m - 1; t-- > 0;) {
    for (std::size_t b = 0; b < 2; ++b) {
      const auto from = state(t, b);
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t nb = 0; nb < 2; ++nb) {
        const double v = model.log_transition_at(from, state(t + 1, nb)) + emit(t + 1, nb) + suffix[t + 1][nb];
        best = std::max(best, v);
      }
      suffix[t][b] = best;
    }
  }

  double optimum = -std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < 2; ++b) {
    optimum = std::max(optimum, model.log_initial_at(state(0, b)) + emit(0, b) + suffix[0][b]);
  }

  double prefix = 0.0;
  std::size_t prev = 0;
  auto step_score = [&](std::size_t t, std::size_t b) {
    const auto s = state(t, b);
    return (t == 0 ? model.log_initial_at(s) : model.log_transition_at(prev, s)) + emit(t, b);
  };
  for (std::size_t t = 0; t < m; ++t) {
    const double zero_step = step_score(t, 0);
    const std::size_t chosen = within_tie(prefix + zero_step + suffix[t][0], optimum) ? 0 : 1;
    prefix += chosen == 0 ? zero_step : step_score(t, 1);
    bits[t] = static_cast<std::uint8_t>(chosen);
    prev = state(t, chosen);
  }
}

}  // namespace detail

/// Most likely boundary bits for an observation sequence. At step t only the
/// states (o_t.left, 0) and (o_t.left, 1) are admissible.
inline std::vector<std::uint8_t> viterbi(const HmmModel& model, std::span<const Observation> observations) {
  for (const auto& o : observations) {
    if (o.left >= model.k() || o.right >= model.k()) {
      throw Error(ErrorCode::InvalidArgument, "observation category out of range");
    }
  }
  std::vector<std::uint8_t> bits;
  std::vector<std::array<double, 2>> suffix;
  detail::viterbi_into(
      model, observations.size(), [&](std::size_t t) { return observations[t].left; },
      [&](std::size_t t) { return observations[t].right; }, bits, suffix);
  return bits;
}

/// Log score of one full state path: initial + transitions + emissions.
inline double path_log_score(const HmmModel& model, std::span<const Observation> observations,
                             std::span<const std::uint8_t> bits) {
  double score = 0.0;
  for (std::size_t t = 0; t < observations.size(); ++t) {
    const HiddenState s{observations[t].left, bits[t]};
    if (t == 0) {
      score += model.log_initial(s);
    } else {
      score += model.log_transition(HiddenState{observations[t - 1].left, bits[t - 1]}, s);
    }
    score += model.log_emission(s, observations[t]);
  }
  return score;
}

inline Syllabification syllabify(const HmmModel& model, std::span<const Phone> phones) {
  if (phones.empty()) throw Error(ErrorCode::EmptyWord, "cannot syllabify an empty word");
  std::vector<Phone> copy(phones.begin(), phones.end());
  if (phones.size() == 1) return Syllabification(std::move(copy), {});
  const auto cats = categorize(phones, model.map());
  const auto observations = encode_observations(cats);
  return Syllabification(std::move(copy), viterbi(model, observations));
}

}  // namespace sylcat
