#pragma once

// Command implementations behind the docqg tool. Each returns a process exit
// code: 0 success, 1 usage, 2 data, 3 numerical.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "docqg/app/pipeline.hpp"
#include "docqg/harness/ablation.hpp"
#include "docqg/io/checkpoint.hpp"
#include "docqg/model/gradcheck.hpp"

namespace docqg::app {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs `body`, mapping exceptions to exit codes with a message on `err`.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kUsage;
  } catch (const train::NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const nd::NonFiniteError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const corpus::DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const io::CheckpointError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  }
}

inline std::vector<corpus::Example> load_examples(const std::string& path, std::size_t max_doc,
                                                  bool require_question, std::ostream& err) {
  corpus::LoadOptions lo;
  lo.max_doc_tokens = max_doc;
  lo.require_question = require_question;
  auto r = corpus::load_jsonl(path, lo);
  for (const auto& msg : r.rejected) err << "skipped: " << msg << '\n';
  if (r.examples.empty()) throw corpus::DataError(path + ": no usable examples");
  return std::move(r.examples);
}

inline std::string vocab_path_for(const std::string& checkpoint) { return checkpoint + ".vocab"; }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw corpus::DataError("cannot write " + path);
  out << text;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  ExperimentConfig exp;
  std::string train_path;
  std::optional<std::string> dev_path;
  std::string out;  // checkpoint path; the vocabulary goes next to it
  bool inject_fault = false;
};

inline int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.exp.model_config(1);
    a.exp.train.validate();
    if (a.out.empty()) throw UsageError("--out is required");
    const auto train_ex = load_examples(a.train_path, a.exp.max_doc_tokens, true, err);
    std::vector<corpus::Example> dev_ex;
    if (a.dev_path) dev_ex = load_examples(*a.dev_path, a.exp.max_doc_tokens, true, err);
    const auto vocab = corpus::build_vocab(train_ex, a.exp.vocab_size);
    auto params = build_model<float>(a.exp, vocab);
    if (a.inject_fault) params.copy_u[0] = std::numeric_limits<float>::quiet_NaN();
    const auto train_set = prepare_all(train_ex, vocab);
    const auto dev_set = prepare_all(dev_ex, vocab);
    out << "vocab " << vocab.size() << " train " << train_set.size() << " dev " << dev_set.size()
        << '\n';
    train::TrainOptions topts;
    topts.eval_every = a.exp.eval_every;
    topts.on_eval = [&](std::size_t step, double train_nll, std::optional<double> dev_nll) {
      out << "step " << step << " train_nll " << train_nll;
      if (dev_nll) out << " dev_nll " << *dev_nll;
      out << std::endl;
    };
    const auto r = train::train(params, train_set, a.exp.train, topts,
                                dev_set.empty() ? nullptr : &dev_set);
    io::save_checkpoint(a.out, r.best, {vocab.hash(), a.exp.train.seed, a.exp.to_json()});
    vocab.save(vocab_path_for(a.out));
    out << "saved " << a.out << " (step " << r.best_step << ")\n";
    return kOk;
  });
}

// ---------------------------------------------------------------- generate

struct LoadedModel {
  model::ModelParams<float> params;
  corpus::Vocab vocab;
  io::CheckpointMeta meta;
  std::size_t max_doc_tokens = 400;
};

inline LoadedModel load_model(const std::string& checkpoint,
                              const std::optional<std::string>& vocab_path) {
  LoadedModel m;
  m.params = io::load_checkpoint<float>(checkpoint, &m.meta);
  m.vocab = corpus::Vocab::load(vocab_path.value_or(vocab_path_for(checkpoint)));
  io::check_vocab(m.meta, m.vocab);
  m.max_doc_tokens = m.meta.extra.value("max_doc_tokens", std::size_t{400});
  return m;
}

struct GenerateArgs {
  std::string checkpoint;
  std::optional<std::string> vocab;
  std::string input;
  std::optional<std::string> out;  // stdout when absent
  GenerateOptions gen;
  bool dump_attention = false;
};

inline int cmd_generate(const GenerateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.gen.beam == 0) throw UsageError("--beam must be >= 1");
    if (a.gen.max_len == 0) throw UsageError("--max-len must be >= 1");
    const auto m = load_model(a.checkpoint, a.vocab);
    const auto examples = load_examples(a.input, m.max_doc_tokens, false, err);
    std::ofstream file;
    if (a.out) {
      file.open(*a.out, std::ios::binary | std::ios::trunc);
      if (!file) throw corpus::DataError("cannot write " + *a.out);
    }
    std::ostream& dst = a.out ? file : out;
    for (const auto& ex : examples) {
      const auto g = generate(m.params, m.vocab, model::prepare(ex, m.vocab), a.gen);
      dst << g.to_json(a.dump_attention).dump() << '\n';
    }
    return kOk;
  });
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string predictions;  // JSONL {id, question}
  std::string references;   // data set JSONL
  std::optional<std::string> out;  // report JSON
  std::optional<std::string> csv;  // per-example breakdown
  bool allow_missing = false;
};

inline std::map<std::string, std::string> read_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw corpus::DataError("cannot open predictions " + path);
  std::map<std::string, std::string> preds;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      preds[j.at("id").get<std::string>()] = j.at("question").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw corpus::DataError(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  if (preds.empty()) throw corpus::DataError(path + ": no predictions");
  return preds;
}

inline int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto preds = read_predictions(a.predictions);
    const auto refs = load_examples(a.references, std::numeric_limits<std::size_t>::max(), true, err);
    std::vector<metrics::ScoredPair> pairs;
    std::vector<std::string> missing;
    for (const auto& ex : refs) {
      auto it = preds.find(ex.id);
      if (it == preds.end()) {
        missing.push_back(ex.id);
        continue;
      }
      pairs.push_back({ex.id, corpus::tokenize(it->second), ex.question_tokens, std::nullopt});
    }
    if (!missing.empty()) {
      err << "missing predictions for " << missing.size() << " id(s):";
      for (const auto& id : missing) err << ' ' << id;
      err << '\n';
      if (!a.allow_missing) throw corpus::DataError("predictions do not cover the references");
    }
    if (pairs.empty()) throw corpus::DataError("no prediction matches a reference id");
    const auto report = metrics::evaluate(pairs);
    auto j = report.to_json();
    j["missing"] = missing;
    if (a.out) write_text(*a.out, j.dump(2) + '\n');
    if (a.csv) {
      std::ostringstream os;
      report.write_csv(os);
      write_text(*a.csv, os.str());
    }
    out << j.dump(2) << '\n';
    return kOk;
  });
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  int stages = 2;
  std::uint64_t seed = 3;
  bool attention = true;
  bool masking = true;
  double tolerance = 1e-3;
  bool inject_fault = false;  // perturbs one analytic gradient
};

inline int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.stages < 1) throw UsageError("--stages must be >= 1");
    auto c = model::gradcheck_case(a.stages, a.seed, a.attention, a.masking);
    nd::GradientTamper<double> tamper = nullptr;
    if (a.inject_fault) {
      tamper = +[](std::size_t k, nd::Array<double>& g) {
        if (k == 0) g[0] += 0.05;
      };
    }
    const auto report = model::check_model_gradients<double>(c.params, c.example, 1e-6,
                                                             a.tolerance, tamper);
    for (const auto& p : report.params) {
      out << (p.passed ? "ok   " : "FAIL ") << p.name << " elements " << p.elements
          << " max_rel_error " << p.max_rel_error << '\n';
    }
    out << (report.passed() ? "PASS" : "FAIL") << " worst relative error " << report.worst()
        << " tolerance " << a.tolerance << '\n';
    return report.passed() ? kOk : kNumerical;
  });
}

// ---------------------------------------------------------------- ablate

struct AblateArgs {
  ExperimentConfig exp;
  std::string train_path;
  std::optional<std::string> dev_path;
  std::optional<std::string> test_path;
  std::string out_dir;
  std::vector<std::string> variants;  // empty: all five
  GenerateOptions gen;
  std::optional<std::string> inject_fault;  // variant name
};

inline int cmd_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    a.exp.train.validate();
    if (a.out_dir.empty()) throw UsageError("--out is required");
    std::vector<harness::AblationSpec> specs;
    for (const auto& s : harness::standard_variants()) {
      if (a.variants.empty() ||
          std::find(a.variants.begin(), a.variants.end(), s.name) != a.variants.end()) {
        specs.push_back(s);
      }
    }
    if (specs.empty()) throw UsageError("no known variant selected");
    harness::Splits data;
    data.train = load_examples(a.train_path, a.exp.max_doc_tokens, true, err);
    if (a.dev_path) data.dev = load_examples(*a.dev_path, a.exp.max_doc_tokens, true, err);
    if (a.test_path) data.test = load_examples(*a.test_path, a.exp.max_doc_tokens, true, err);
    const auto vocab = corpus::build_vocab(data.train, a.exp.vocab_size);
    std::filesystem::create_directories(a.out_dir);
    vocab.save((std::filesystem::path(a.out_dir) / "vocab.txt").string());
    harness::AblationOptions opts;
    opts.generate = a.gen;
    opts.checkpoint_dir = a.out_dir;
    opts.fault_variant = a.inject_fault;
    opts.log = [&](const std::string& msg) { err << msg << std::endl; };
    const auto table = harness::run_ablation(data, vocab, a.exp, specs, opts);
    const auto dir = std::filesystem::path(a.out_dir);
    write_text((dir / "ablation.md").string(), table.markdown());
    write_text((dir / "ablation.csv").string(), table.csv());
    nlohmann::json configs;
    for (const auto& s : specs) configs[s.name] = harness::variant_config(a.exp, s).to_json();
    write_text((dir / "configs.json").string(), configs.dump(2) + '\n');
    out << table.markdown();
    return kOk;
  });
}

// ---------------------------------------------------------------- stats

inline int cmd_stats(const std::vector<std::string>& paths, std::size_t max_doc,
                     std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (paths.empty()) throw UsageError("give at least one data set");
    for (const auto& p : paths) {
      corpus::LoadOptions lo;
      lo.max_doc_tokens = max_doc;
      const auto r = corpus::load_jsonl(p, lo);
      const auto s = corpus::dataset_stats(r.examples);
      out << p << ": examples " << s.count << " rejected " << r.rejected.size()
          << " avg_doc_tokens " << s.avg_doc_tokens << " avg_question_tokens "
          << s.avg_question_tokens << " avg_answer_tokens " << s.avg_answer_tokens << '\n';
      for (const auto& msg : r.rejected) err << "rejected: " << msg << '\n';
    }
    return kOk;
  });
}

}  // namespace docqg::app
