#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sylcat/corpus.hpp"
#include "sylcat/evolver.hpp"
#include "sylcat/hmm.hpp"
#include "sylcat/parallel.hpp"

namespace sylcat {

struct MisSyllabified {
  std::string orthography;
  std::string gold;
  std::string predicted;
  friend bool operator==(const MisSyllabified&, const MisSyllabified&) = default;
};

struct EvalReport {
  double word_accuracy = 0.0;
  double boundary_precision = 0.0;
  double boundary_recall = 0.0;
  double boundary_f1 = 0.0;
  std::size_t word_count = 0;
  std::size_t error_count = 0;
  // Pooled gap-level confusion counts.
  std::size_t true_boundaries = 0;
  std::size_t false_boundaries = 0;
  std::size_t missed_boundaries = 0;
  std::size_t true_non_boundaries = 0;
  std::vector<std::pair<Phone, std::size_t>> per_phone_blame;
  std::vector<MisSyllabified> mis_syllabified;

  std::size_t gap_count() const noexcept {
    return true_boundaries + false_boundaries + missed_boundaries + true_non_boundaries;
  }
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

inline double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

/// Decodes every word and scores it against gold. A word is correct only if
/// its whole boundary vector matches.
inline EvalReport evaluate(const HmmModel& model, std::span<const AnnotatedWord> words) {
  if (words.empty()) throw Error(ErrorCode::InvalidArgument, "evaluation needs at least one word");
  EvalReport report;
  const auto& alphabet = model.map().alphabet();
  std::vector<std::size_t> blame(alphabet.size(), 0);
  for (const auto& w : words) {
    const auto predicted = syllabify(model, w.phones());
    const auto gold = w.boundaries();
    const auto guess = predicted.boundaries();
    const auto phones = w.phones();
    bool correct = true;
    for (std::size_t t = 0; t < gold.size(); ++t) {
      if (gold[t] && guess[t]) ++report.true_boundaries;
      else if (!gold[t] && guess[t]) ++report.false_boundaries;
      else if (gold[t] && !guess[t]) ++report.missed_boundaries;
      else ++report.true_non_boundaries;
      if (gold[t] != guess[t]) {
        correct = false;
        ++blame[*alphabet.index_of(phones[t])];
        ++blame[*alphabet.index_of(phones[t + 1])];
      }
    }
    ++report.word_count;
    if (!correct) {
      ++report.error_count;
      report.mis_syllabified.push_back({w.orthography, render(w.syllabification), render(predicted)});
    }
  }
  report.word_accuracy = safe_ratio(report.word_count - report.error_count, report.word_count);
  report.boundary_precision = safe_ratio(report.true_boundaries, report.true_boundaries + report.false_boundaries);
  report.boundary_recall = safe_ratio(report.true_boundaries, report.true_boundaries + report.missed_boundaries);
  const double pr = report.boundary_precision + report.boundary_recall;
  report.boundary_f1 = pr > 0.0 ? 2.0 * report.boundary_precision * report.boundary_recall / pr : 0.0;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    if (blame[i] > 0) report.per_phone_blame.emplace_back(alphabet[i], blame[i]);
  }
  return report;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json blame = nlohmann::json::array();
  for (const auto& [phone, count] : r.per_phone_blame) blame.push_back({{"phone", phone.str()}, {"count", count}});
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& m : r.mis_syllabified) {
    errors.push_back({{"orthography", m.orthography}, {"gold", m.gold}, {"predicted", m.predicted}});
  }
  return {
      {"word_accuracy", r.word_accuracy},
      {"boundary_precision", r.boundary_precision},
      {"boundary_recall", r.boundary_recall},
      {"boundary_f1", r.boundary_f1},
      {"word_count", r.word_count},
      {"error_count", r.error_count},
      {"confusion",
       {{"true_boundaries", r.true_boundaries},
        {"false_boundaries", r.false_boundaries},
        {"missed_boundaries", r.missed_boundaries},
        {"true_non_boundaries", r.true_non_boundaries}}},
      {"per_phone_blame", blame},
      {"mis_syllabified", errors},
  };
}

/// Human-readable summary; lists at most `max_errors` mis-syllabified words.
inline void write_report_text(std::ostream& out, const EvalReport& r, std::size_t max_errors = 20) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "words              %zu\nerrors             %zu\nword accuracy      %.4f\n",
                r.word_count, r.error_count, r.word_accuracy);
  out << buf;
  std::snprintf(buf, sizeof buf, "boundary precision %.4f\nboundary recall    %.4f\nboundary f1        %.4f\n",
                r.boundary_precision, r.boundary_recall, r.boundary_f1);
  out << buf;
  if (!r.per_phone_blame.empty()) {
    auto sorted = r.per_phone_blame;
    std::stable_sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.second > b.second; });
    out << "most blamed phones";
    for (std::size_t i = 0; i < std::min<std::size_t>(sorted.size(), 10); ++i) {
      out << ' ' << sorted[i].first.symbol() << '=' << sorted[i].second;
    }
    out << '\n';
  }
  const auto shown = std::min(max_errors, r.mis_syllabified.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const auto& m = r.mis_syllabified[i];
    out << "  " << m.orthography << "\tgold " << m.gold << "\tpredicted " << m.predicted << '\n';
  }
  if (shown < r.mis_syllabified.size()) out << "  ... " << (r.mis_syllabified.size() - shown) << " more\n";
}

/// Where each fold's category map comes from: a fixed table, or a fresh
/// evolution run on that fold's training portion.
using MapSource = std::variant<CategoryMap, GaConfig>;

struct FoldResult {
  EvalReport report;
  CategoryMap map;
  std::size_t state_count = 0;
  std::optional<EvolutionHistory> history;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double stddev_accuracy = 0.0;
};

/// k-fold cross-validation. With an evolve config, evolution sees only the
/// training folds. Folds run on up to `jobs` threads.
inline CrossValidationResult cross_validate(const Corpus& corpus, const MapSource& source, std::size_t k,
                                            std::uint64_t seed, double alpha, std::size_t jobs = 1) {
  const auto split = kfold_split(corpus, k, seed);
  std::vector<std::optional<FoldResult>> slots(k);
  const auto words = corpus.words();
  // Evolution parallelizes internally; run its folds one after another.
  const std::size_t fold_jobs = std::holds_alternative<GaConfig>(source) ? 1 : jobs;
  parallel_for(k, fold_jobs, [&](std::size_t fold) {
    const auto train_words = select_words(words, split.train_indices(fold));
    const auto test_words = select_words(words, split.test_indices(fold));
    FoldResult result{EvalReport{}, CategoryMap::identity(corpus.alphabet()), 0, std::nullopt};
    double fold_alpha = alpha;
    if (const auto* fixed = std::get_if<CategoryMap>(&source)) {
      result.map = *fixed;
    } else {
      auto config = std::get<GaConfig>(source);
      config.seed = mix64(config.seed ^ (static_cast<std::uint64_t>(fold) + 1));
      auto evolved = evolve(train_words, config, corpus.alphabet());
      result.map = std::move(evolved.best);
      result.history = std::move(evolved.history);
      fold_alpha = config.alpha;
    }
    const auto model = train(train_words, result.map, fold_alpha);
    result.state_count = model.state_count();
    result.report = evaluate(model, test_words);
    slots[fold] = std::move(result);
  });

  CrossValidationResult out;
  std::vector<double> accuracies;
  for (auto& s : slots) {
    accuracies.push_back(s->report.word_accuracy);
    out.folds.push_back(std::move(*s));
  }
  out.mean_accuracy = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(k);
  out.stddev_accuracy = population_stddev(accuracies);
  return out;
}

inline nlohmann::json to_json(const CrossValidationResult& cv) {
  nlohmann::json folds = nlohmann::json::array();
  for (std::size_t i = 0; i < cv.folds.size(); ++i) {
    auto j = to_json(cv.folds[i].report);
    j["fold"] = i;
    j["state_count"] = cv.folds[i].state_count;
    j["category_count"] = cv.folds[i].map.k();
    folds.push_back(std::move(j));
  }
  return {{"folds", folds}, {"mean_word_accuracy", cv.mean_accuracy}, {"stddev_word_accuracy", cv.stddev_accuracy}};
}

}  // namespace sylcat
