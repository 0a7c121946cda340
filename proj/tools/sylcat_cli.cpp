// sylcat: command-line front end for phone-category syllabification.
//
// Exit status: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sylcat/sylcat.hpp"

namespace {

using namespace sylcat;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

/// Raised for problems with the command line that CLI11 cannot see.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised for unreadable or unwritable files.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path + " for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

Corpus read_corpus(const std::string& path) {
  auto in = open_in(path);
  return load_corpus(in);
}

HmmModel read_model(const std::string& path) {
  auto in = open_in(path);
  return load_model(in);
}

/// `identity` builds the no-category baseline over the corpus alphabet;
/// anything else is a category-map file.
CategoryMap resolve_map(const std::string& spec, const Corpus& corpus) {
  if (spec == "identity") return CategoryMap::identity(corpus.alphabet());
  auto in = open_in(spec);
  auto map = read_category_map(in);
  for (Phone p : corpus.alphabet()) {
    if (!map.find(p)) throw Error(ErrorCode::UnknownPhone, "map " + spec + " has no category for phone '" + p.str() + "'");
  }
  return map;
}

std::string substitute_k(std::string pattern, std::size_t k) {
  const auto pos = pattern.find("{k}");
  if (pos != std::string::npos) pattern.replace(pos, 3, std::to_string(k));
  return pattern;
}

struct GaFlags {
  GaConfig config;
  std::string k_range;
};

void add_ga_options(CLI::App* cmd, GaFlags& flags) {
  auto& c = flags.config;
  cmd->add_option("--k", c.k, "Number of phone categories")->check(CLI::Range(1, 65535))->capture_default_str();
  cmd->add_option("--k-range", flags.k_range, "Run once per k in LO:HI (inclusive)");
  cmd->add_option("--pop", c.population_size, "Population size (>= 4)")
      ->check(CLI::Range(4, 1000000))
      ->capture_default_str();
  cmd->add_option("--gens", c.max_generations, "Generations to breed after the initial population")
      ->capture_default_str();
  cmd->add_option("--elite", c.elite_count, "Individuals copied unchanged each generation (>= 1)")
      ->check(CLI::Range(1, 1000000))
      ->capture_default_str();
  cmd->add_option("--rate-min", c.rate_min, "Per-gene mutation rate when fitness is dispersed")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--rate-max", c.rate_max, "Per-gene mutation rate when fitness is bunched")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--sigma-ref", c.sigma_ref, "Fitness spread at which the rate reaches rate-min")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--refine-period", c.refine_period, "Generations between single-phone refinements (0 = off)")
      ->capture_default_str();
  cmd->add_option("--holdout", c.holdout_fraction, "Share of training words held out for fitness")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cmd->add_option("--patience", c.patience, "Stop after this many generations without improvement (0 = never)")
      ->capture_default_str();
  cmd->add_option("--scaling", c.scaling, "Fitness scaling before selection")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, FitnessScaling>{{"rank", FitnessScaling::Rank}, {"raw", FitnessScaling::Raw}}))
      ->option_text("rank|raw [rank]");
  cmd->add_option("--seed", c.seed, "Master random seed")->capture_default_str();
  cmd->add_option("--jobs", c.jobs, "Worker threads for fitness evaluation; results do not depend on it")
      ->check(CLI::Range(1, 1024))
      ->capture_default_str();
}

std::pair<std::size_t, std::size_t> parse_k_range(const std::string& text) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    const auto lo = std::stoul(text.substr(0, colon));
    const auto hi = std::stoul(text.substr(colon + 1));
    if (lo < 1 || hi < lo) throw std::invalid_argument("bad bounds");
    return {lo, hi};
  } catch (const std::exception&) {
    throw UsageError("--k-range: expected LO:HI with 1 <= LO <= HI, got \"" + text + "\"");
  }
}

void validate_ga(const GaConfig& config) {
  try {
    config.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

/// Reads `key = value` lines and turns them into `--key value` arguments
/// placed before the real flags so that flags win.
std::vector<std::string> expand_config_file(std::vector<std::string> args) {
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] != "--config") continue;
    if (i + 1 >= args.size()) throw UsageError("--config needs a file name");
    auto in = open_in(args[i + 1]);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = CLI::detail::trim_copy(raw);
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw UsageError(args[i + 1] + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = CLI::detail::trim_copy(line.substr(0, eq));
      const auto value = CLI::detail::trim_copy(line.substr(eq + 1));
      if (value == "true") {
        from_file.push_back("--" + key);
      } else if (value != "false") {
        from_file.push_back("--" + key);
        from_file.push_back(value);
      }
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    // Insert right after the subcommand name (args[0]).
    const auto at = args.empty() ? args.begin() : args.begin() + 1;
    args.insert(at, from_file.begin(), from_file.end());
    break;
  }
  return args;
}

int run(int argc, char** argv) {
  CLI::App app{"Syllabify DISC transcriptions with a category HMM and evolve the phone categories."};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  app.footer("Any subcommand also accepts --config <file> with `flag = value` lines; explicit flags win.");

  // import-celex
  std::string celex_in, celex_out, strip = "'\"[]";
  std::size_t field = 0, orth_field = 0;
  auto* import_cmd = app.add_subcommand("import-celex", "Convert a backslash-delimited CELEX lexicon to a corpus file");
  import_cmd->add_option("--in", celex_in, "CELEX file")->required();
  import_cmd->add_option("--field", field, "0-based field holding the syllabified transcription")->required();
  import_cmd->add_option("--orth-field", orth_field, "0-based field holding the orthography")->capture_default_str();
  import_cmd->add_option("--strip", strip, "Characters removed from transcriptions")->capture_default_str();
  import_cmd->add_option("--out", celex_out, "Corpus file to write")->required();

  // train
  std::string corpus_path, map_spec, out_path, model_path;
  double alpha = 0.1;
  auto* train_cmd = app.add_subcommand("train", "Train an HMM from a corpus and a category map");
  train_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  train_cmd->add_option("--map", map_spec, "Category-map file, or `identity` for one category per phone")->required();
  train_cmd->add_option("--alpha", alpha, "Additive smoothing constant")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--out", out_path, "Model file to write")->required();

  // syllabify
  std::string word;
  bool use_stdin = false;
  auto* syl_cmd = app.add_subcommand("syllabify", "Print hyphenated syllabifications, one per line");
  syl_cmd->add_option("--model", model_path, "Model file")->required();
  auto* word_opt = syl_cmd->add_option("--word", word, "Phone string to syllabify, e.g. {bsEnt");
  auto* stdin_opt = syl_cmd->add_flag("--stdin", use_stdin,
                                      "Read words from standard input, one per line (a TAB-separated corpus line uses its second field)");
  word_opt->excludes(stdin_opt);

  // evolve
  GaFlags ga;
  std::string history_path;
  auto* evolve_cmd = app.add_subcommand("evolve", "Evolve a phone-category map with the genetic algorithm");
  evolve_cmd->add_option("--corpus", corpus_path, "Training corpus")->required();
  add_ga_options(evolve_cmd, ga);
  evolve_cmd->add_option("--alpha", ga.config.alpha, "Additive smoothing constant")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evolve_cmd->add_option("--history", history_path, "Write per-generation CSV here ({k} expands with --k-range)");
  evolve_cmd->add_option("--out", out_path, "Category-map file to write ({k} expands with --k-range)")->required();

  // evaluate
  std::string format = "text";
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model against a gold corpus");
  eval_cmd->add_option("--model", model_path, "Model file")->required();
  eval_cmd->add_option("--corpus", corpus_path, "Gold corpus")->required();
  eval_cmd->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "structured"}))
      ->capture_default_str();

  // cross-validate
  std::size_t folds = 10;
  std::uint64_t cv_seed = 1;
  bool cv_evolve = false;
  GaFlags cv_ga;
  auto* cv_cmd = app.add_subcommand("cross-validate", "k-fold cross-validation with a fixed or evolved map");
  cv_cmd->add_option("--corpus", corpus_path, "Corpus file")->required();
  auto* cv_map = cv_cmd->add_option("--map", map_spec, "Category-map file or `identity`");
  auto* cv_evo = cv_cmd->add_flag("--evolve", cv_evolve, "Evolve a map on each fold's training portion");
  cv_map->excludes(cv_evo);
  cv_cmd->add_option("--k-folds", folds, "Number of folds")->check(CLI::Range(2, 1000000))->capture_default_str();
  cv_cmd->add_option("--cv-seed", cv_seed, "Seed for the fold assignment")->capture_default_str();
  cv_cmd->add_option("--alpha", cv_ga.config.alpha, "Additive smoothing constant")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cv_cmd->add_option("--format", format, "Report format")
      ->check(CLI::IsMember({"text", "structured"}))
      ->capture_default_str();
  add_ga_options(cv_cmd, cv_ga);

  std::vector<std::string> args(argv + 1, argv + argc);
  args = expand_config_file(std::move(args));
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*import_cmd) {
    auto in = open_in(celex_in);
    CelexImportOptions options{field, orth_field, strip};
    const auto result = import_celex(in, options);
    auto out = open_out(celex_out);
    out << result.corpus_text;
    std::cerr << "imported " << result.emitted << " entries, skipped " << result.skipped << '\n';
    return kExitOk;
  }

  if (*train_cmd) {
    const auto corpus = read_corpus(corpus_path);
    const auto map = resolve_map(map_spec, corpus);
    const auto model = train(corpus.words(), map, alpha);
    auto out = open_out(out_path);
    save_model(out, model);
    std::cerr << "trained on " << corpus.size() << " words, " << model.state_count() << " hidden states\n";
    return kExitOk;
  }

  if (*syl_cmd) {
    if (!use_stdin && word_opt->count() == 0) throw UsageError("syllabify: give --word <phones> or --stdin");
    const auto model = read_model(model_path);
    auto emit = [&](std::string_view text) {
      std::cout << render(syllabify(model, parse_phones(text))) << '\n';
    };
    if (!use_stdin) {
      emit(word);
      return kExitOk;
    }
    std::string line;
    while (std::getline(std::cin, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (CLI::detail::trim_copy(line).empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) {
        emit(line);
      } else {
        const auto end = line.find('\t', tab + 1);
        emit(std::string_view(line).substr(tab + 1, end == std::string::npos ? std::string::npos : end - tab - 1));
      }
    }
    return kExitOk;
  }

  if (*evolve_cmd) {
    std::size_t k_lo = ga.config.k, k_hi = ga.config.k;
    if (!ga.k_range.empty()) {
      std::tie(k_lo, k_hi) = parse_k_range(ga.k_range);
      if (k_lo != k_hi && out_path.find("{k}") == std::string::npos) {
        throw UsageError("--out must contain {k} when --k-range covers several values");
      }
      if (k_lo != k_hi && !history_path.empty() && history_path.find("{k}") == std::string::npos) {
        throw UsageError("--history must contain {k} when --k-range covers several values");
      }
    }
    auto config = ga.config;
    config.k = k_lo;
    validate_ga(config);
    const auto corpus = read_corpus(corpus_path);
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
      config.k = k;
      const auto result = evolve(corpus.words(), config, corpus.alphabet());
      auto out = open_out(substitute_k(out_path, k));
      write_category_map(out, result.best);
      if (!history_path.empty()) {
        auto hist = open_out(substitute_k(history_path, k));
        write_history_csv(hist, result.history);
      }
      char buf[128];
      std::snprintf(buf, sizeof buf, "k=%zu best_fitness=%.6f generations=%zu\n", k, result.best_fitness,
                    result.history.generations.size());
      std::cout << buf;
    }
    return kExitOk;
  }

  if (*eval_cmd) {
    const auto model = read_model(model_path);
    const auto corpus = read_corpus(corpus_path);
    const auto report = evaluate(model, corpus.words());
    if (format == "structured") {
      std::cout << to_json(report).dump(2) << '\n';
    } else {
      write_report_text(std::cout, report);
    }
    return kExitOk;
  }

  if (*cv_cmd) {
    if (!cv_evolve && cv_map->count() == 0) throw UsageError("cross-validate: give --map <file|identity> or --evolve");
    const auto corpus = read_corpus(corpus_path);
    MapSource source = cv_ga.config;
    if (cv_evolve) {
      validate_ga(cv_ga.config);
    } else {
      source = resolve_map(map_spec, corpus);
    }
    const auto cv = cross_validate(corpus, source, folds, cv_seed, cv_ga.config.alpha, cv_ga.config.jobs);
    if (format == "structured") {
      std::cout << to_json(cv).dump(2) << '\n';
    } else {
      char buf[160];
      for (std::size_t i = 0; i < cv.folds.size(); ++i) {
        const auto& f = cv.folds[i];
        std::snprintf(buf, sizeof buf, "fold %zu  words %zu  accuracy %.4f  boundary_f1 %.4f  states %zu\n", i,
                      f.report.word_count, f.report.word_accuracy, f.report.boundary_f1, f.state_count);
        std::cout << buf;
      }
      std::snprintf(buf, sizeof buf, "mean accuracy %.4f  stddev %.4f\n", cv.mean_accuracy, cv.stddev_accuracy);
      std::cout << buf;
    }
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nRun with --help for the list of flags.\n";
    return kExitUsage;
  } catch (const sylcat::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
