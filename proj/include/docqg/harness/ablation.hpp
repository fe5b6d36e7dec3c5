#pragma once

// Ablation driver: trains each variant from the same seed, evaluates it on
// the dev split and collects one table row per variant.

#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "docqg/app/pipeline.hpp"
#include "docqg/io/checkpoint.hpp"

namespace docqg::harness {

struct AblationSpec {
  std::string name;
  int stages = 2;
  bool attention = true;
  bool masking = true;
};

/// Base, no attention, no masking, one and three stages.
inline std::vector<AblationSpec> standard_variants() {
  return {{"base", 2, true, true},
          {"no-attention", 2, false, true},
          {"no-masking", 2, true, false},
          {"1-stage", 1, true, true},
          {"3-stage", 3, true, true}};
}

inline app::ExperimentConfig variant_config(app::ExperimentConfig base, const AblationSpec& s) {
  base.stages = s.stages;
  base.attention = s.attention;
  base.masking = s.masking;
  return base;
}

struct Splits {
  std::vector<corpus::Example> train;
  std::vector<corpus::Example> dev;
  std::vector<corpus::Example> test;
};

struct AblationRow {
  AblationSpec spec;
  bool failed = false;
  std::string error;
  double bleu4 = 0.0;
  double meteor = 0.0;
  double rouge_l = 0.0;
  std::optional<double> coverage;
  std::optional<double> dev_nll;
  std::size_t steps = 0;
  std::string checkpoint;

  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

inline bool operator==(const AblationSpec& a, const AblationSpec& b) {
  return a.name == b.name && a.stages == b.stages && a.attention == b.attention &&
         a.masking == b.masking;
}

struct AblationTable {
  std::vector<AblationRow> rows;

  /// Mean coverage per stage count over completed attention variants.
  std::map<int, double> coverage_by_stage() const {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& r : rows) {
      if (r.failed || !r.coverage) continue;
      acc[r.spec.stages].first += *r.coverage;
      acc[r.spec.stages].second += 1;
    }
    std::map<int, double> out;
    for (const auto& [k, v] : acc) out[k] = v.first / v.second;
    return out;
  }

  std::string markdown() const {
    std::ostringstream os;
    os << "| Variant | Stages | Attention | Masking | Bleu-4 | Meteor | Rouge-L | Coverage | Status |\n"
       << "|---|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
      os << "| " << r.spec.name << " | " << (r.spec.attention ? std::to_string(r.spec.stages) : "-")
         << " | " << (r.spec.attention ? "on" : "off") << " | " << (r.spec.masking ? "on" : "off");
      if (r.failed) {
        os << " | - | - | - | - | failed: " << r.error << " |\n";
        continue;
      }
      os << " | " << pct(r.bleu4) << " | " << pct(r.meteor) << " | " << pct(r.rouge_l) << " | "
         << (r.coverage ? fixed(*r.coverage, 4) : "n/a") << " | ok |\n";
    }
    const auto cov = coverage_by_stage();
    if (!cov.empty()) {
      os << "\n| Stages | Mean coverage |\n|---|---|\n";
      for (const auto& [k, v] : cov) os << "| " << k << " | " << fixed(v, 4) << " |\n";
    }
    return os.str();
  }

  std::string csv() const {
    std::ostringstream os;
    os << "variant,stages,attention,masking,status,bleu4,meteor,rougeL,coverage,dev_nll,steps\n";
    os.precision(17);
    for (const auto& r : rows) {
      os << r.spec.name << ',' << r.spec.stages << ',' << r.spec.attention << ',' << r.spec.masking
         << ',' << (r.failed ? "failed" : "ok") << ',';
      if (r.failed) {
        os << ",,,,," << r.steps << '\n';
        continue;
      }
      os << r.bleu4 << ',' << r.meteor << ',' << r.rouge_l << ',';
      if (r.coverage) os << *r.coverage;
      os << ',';
      if (r.dev_nll) os << *r.dev_nll;
      os << ',' << r.steps << '\n';
    }
    return os.str();
  }

 private:
  static std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
  }
  static std::string pct(double v) { return fixed(100.0 * v, 2); }
};

struct AblationOptions {
  app::GenerateOptions generate;
  std::optional<std::string> checkpoint_dir;  // one checkpoint per variant
  std::optional<std::string> fault_variant;   // poisons this variant's weights
  std::function<void(const std::string&)> log;
};

/// Scores trained parameters on the dev split (train split if dev is empty).
inline AblationRow score_variant(const AblationSpec& spec, const model::ModelParams<float>& params,
                                 const corpus::Vocab& vocab, const Splits& data,
                                 const app::GenerateOptions& gen) {
  const auto& eval = data.dev.empty() ? data.train : data.dev;
  const auto e = app::evaluate_model(params, vocab, eval, gen);
  AblationRow row;
  row.spec = spec;
  row.bleu4 = e.report.bleu[3];
  row.meteor = e.report.meteor;
  row.rouge_l = e.report.rouge_l;
  row.coverage = e.report.coverage;
  return row;
}

inline AblationTable run_ablation(const Splits& data, const corpus::Vocab& vocab,
                                  const app::ExperimentConfig& base,
                                  const std::vector<AblationSpec>& specs,
                                  const AblationOptions& opts = {}) {
  AblationTable table;
  const auto train_set = app::prepare_all(data.train, vocab);
  const auto dev_set = app::prepare_all(data.dev, vocab);
  for (const auto& spec : specs) {
    const auto cfg = variant_config(base, spec);
    if (opts.log) opts.log("variant " + spec.name + ": training");
    AblationRow row;
    row.spec = spec;
    try {
      auto params = app::build_model<float>(cfg, vocab);
      if (opts.fault_variant && *opts.fault_variant == spec.name) {
        params.copy_u[0] = std::numeric_limits<float>::infinity();
      }
      train::TrainOptions topts;
      topts.eval_every = cfg.eval_every;
      const auto result = train::train(params, train_set, cfg.train, topts,
                                       dev_set.empty() ? nullptr : &dev_set);
      const std::size_t steps = result.steps;
      const auto dev_nll = result.best_dev_nll;
      row = score_variant(spec, result.best, vocab, data, opts.generate);
      row.steps = steps;
      row.dev_nll = dev_nll;
      if (opts.checkpoint_dir) {
        std::filesystem::create_directories(*opts.checkpoint_dir);
        row.checkpoint =
            (std::filesystem::path(*opts.checkpoint_dir) / (spec.name + ".ckpt")).string();
        io::save_checkpoint(row.checkpoint, result.best,
                            {vocab.hash(), cfg.train.seed, cfg.to_json()});
      }
    } catch (const train::NumericalError& e) {
      row.failed = true;
      row.error = e.what();
    } catch (const nd::NonFiniteError& e) {
      row.failed = true;
      row.error = e.what();
    }
    if (opts.log) opts.log("variant " + spec.name + (row.failed ? ": failed" : ": done"));
    table.rows.push_back(std::move(row));
  }
  return table;
}

/// Re-scores a variant from its saved checkpoint.
inline AblationRow reproduce_row(const AblationRow& row, const corpus::Vocab& vocab,
                                 const Splits& data, const app::GenerateOptions& gen) {
  io::CheckpointMeta meta;
  const auto params = io::load_checkpoint<float>(row.checkpoint, &meta);
  io::check_vocab(meta, vocab);
  auto out = score_variant(row.spec, params, vocab, data, gen);
  out.steps = row.steps;
  out.dev_nll = row.dev_nll;
  out.checkpoint = row.checkpoint;
  return out;
}

}  // namespace docqg::harness
