// docqg: train, generate, evaluate, gradcheck, ablate, stats.

#include <iostream>

#include <CLI11.hpp>

#include "docqg/app/commands.hpp"

namespace app = docqg::app;

namespace {

// Flags shared by train and ablate.
void add_experiment_flags(CLI::App* cmd, app::ExperimentConfig& e) {
  cmd->add_option("--glove", e.glove, "GloVe-format word vectors");
  cmd->add_option("--dim", e.dim, "hidden size d (even)")->capture_default_str();
  cmd->add_option("--emb-dim", e.emb_dim, "word vector width")->capture_default_str();
  cmd->add_option("--stages", e.stages, "attention stages k")->capture_default_str();
  cmd->add_option("--steps", e.train.steps, "optimizer steps")->capture_default_str();
  cmd->add_option("--batch", e.train.batch, "batch size")->capture_default_str();
  cmd->add_option("--lr", e.train.lr, "Adam learning rate")->capture_default_str();
  cmd->add_option("--l2", e.train.l2, "weight decay")->capture_default_str();
  cmd->add_option("--clip", e.train.clip, "gradient clip norm")->capture_default_str();
  cmd->add_option("--seed", e.train.seed, "random seed")->capture_default_str();
  cmd->add_option("--eval-every", e.eval_every, "steps between evaluations")->capture_default_str();
  cmd->add_option("--vocab-size", e.vocab_size, "vocabulary cap")->capture_default_str();
  cmd->add_option("--max-doc-tokens", e.max_doc_tokens, "document truncation cap")
      ->capture_default_str();
  cmd->add_flag("--mask,!--no-mask", e.masking, "answer masking");
  cmd->add_flag("--attention,!--no-attention", e.attention, "multi-stage attention");
  cmd->add_flag("--train-embeddings", e.train_embeddings, "update word vectors");
}

void add_generate_flags(CLI::App* cmd, app::GenerateOptions& g) {
  cmd->add_option("--beam", g.beam, "beam size")->capture_default_str();
  cmd->add_option("--max-len", g.max_len, "maximum question length")->capture_default_str();
  cmd->add_flag("--greedy", g.greedy, "greedy decoding instead of beam search");
  cmd->add_flag("!--raw-score", g.length_normalize, "rank by raw log-probability");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Document-level question generation"};
  cli.require_subcommand(1);

  app::TrainArgs train;
  auto* c_train = cli.add_subcommand("train", "train a model and save the best checkpoint");
  c_train->add_option("--train", train.train_path, "training JSONL")->required();
  c_train->add_option("--dev", train.dev_path, "dev JSONL for checkpoint selection");
  c_train->add_option("--out", train.out, "checkpoint path")->required();
  c_train->add_flag("--inject-fault", train.inject_fault, "poison one weight (testing)");
  add_experiment_flags(c_train, train.exp);

  app::GenerateArgs gen;
  auto* c_gen = cli.add_subcommand("generate", "generate questions as JSONL");
  c_gen->add_option("--checkpoint", gen.checkpoint, "checkpoint file")->required();
  c_gen->add_option("--vocab", gen.vocab, "vocabulary file (default: <checkpoint>.vocab)");
  c_gen->add_option("--test,--input", gen.input, "input JSONL")->required();
  c_gen->add_option("--out", gen.out, "output JSONL (default stdout)");
  c_gen->add_flag("--dump-attention", gen.dump_attention, "include attention vectors");
  add_generate_flags(c_gen, gen.gen);

  app::EvaluateArgs ev;
  auto* c_eval = cli.add_subcommand("evaluate", "score predictions against references");
  c_eval->add_option("--predictions", ev.predictions, "JSONL of {id, question}")->required();
  c_eval->add_option("--test,--references", ev.references, "reference JSONL")->required();
  c_eval->add_option("--out", ev.out, "report JSON");
  c_eval->add_option("--csv", ev.csv, "per-example CSV");
  c_eval->add_flag("--allow-missing", ev.allow_missing, "score only the ids present");

  app::GradcheckArgs gc;
  auto* c_gc = cli.add_subcommand("gradcheck", "finite-difference check of the full model");
  c_gc->add_option("--stages", gc.stages, "attention stages")->capture_default_str();
  c_gc->add_option("--seed", gc.seed, "parameter seed")->capture_default_str();
  c_gc->add_option("--tolerance", gc.tolerance, "relative error bound")->capture_default_str();
  c_gc->add_flag("--mask,!--no-mask", gc.masking, "answer masking");
  c_gc->add_flag("--attention,!--no-attention", gc.attention, "multi-stage attention");
  c_gc->add_flag("--inject-fault", gc.inject_fault, "perturb one analytic gradient");

  app::AblateArgs ab;
  auto* c_ab = cli.add_subcommand("ablate", "train and score the ablation variants");
  c_ab->add_option("--train", ab.train_path, "training JSONL")->required();
  c_ab->add_option("--dev", ab.dev_path, "dev JSONL (scored split)");
  c_ab->add_option("--test", ab.test_path, "test JSONL");
  c_ab->add_option("--out", ab.out_dir, "output directory")->required();
  c_ab->add_option("--variants", ab.variants,
                   "subset of base, no-attention, no-masking, 1-stage, 3-stage");
  c_ab->add_option("--inject-fault", ab.inject_fault, "variant whose weights are poisoned");
  add_experiment_flags(c_ab, ab.exp);
  add_generate_flags(c_ab, ab.gen);

  std::vector<std::string> stats_paths;
  std::size_t stats_cap = 400;
  auto* c_stats = cli.add_subcommand("stats", "data set statistics");
  c_stats->add_option("files", stats_paths, "JSONL files")->required();
  c_stats->add_option("--max-doc-tokens", stats_cap, "document truncation cap");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kOk : app::kUsage;
  }

  if (*c_train) return app::cmd_train(train, std::cout, std::cerr);
  if (*c_gen) return app::cmd_generate(gen, std::cout, std::cerr);
  if (*c_eval) return app::cmd_evaluate(ev, std::cout, std::cerr);
  if (*c_gc) return app::cmd_gradcheck(gc, std::cout, std::cerr);
  if (*c_ab) return app::cmd_ablate(ab, std::cout, std::cerr);
  if (*c_stats) return app::cmd_stats(stats_paths, stats_cap, std::cout, std::cerr);
  return app::kUsage;
}
