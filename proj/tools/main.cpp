// apedit: hierarchical automatic post-editing over synthetic cipher corpora.
//
// Subcommands: gen-data, tag-oracle, pretrain, train, infer, eval, sweep-tau.
// Exit codes: 0 success, 1 usage error, 2 runtime failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "apedit/pipeline.hpp"

namespace fs = std::filesystem;
using namespace apedit;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string run_dir;
  bool seed_set = false;
  uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("-c,--config", opts.config_path, "config file (key = value lines)");
  cmd->add_option("--override", opts.overrides,
                  "config override as dotted key=value, repeatable "
                  "(defaults: infer.tau=0.3, infer.steps=5, "
                  "train.mask_rate=0.2, train.beta=0.5, "
                  "train.batch_tokens=512, data.oversample=20)");
  cmd->add_option("--run-dir", opts.run_dir,
                  "output directory (default: run-<timestamp>-<seed>)");
  cmd->add_option("--seed", opts.seed, "seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Config resolve_config(const CommonOpts& opts) {
  Config cfg;
  try {
    if (!opts.config_path.empty()) cfg = Config::load(opts.config_path);
    apply_overrides(cfg, opts.overrides);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (opts.seed_set) cfg.seed = opts.seed;
  return cfg;
}

fs::path make_run_dir(const CommonOpts& opts, const Config& cfg) {
  fs::path dir;
  if (!opts.run_dir.empty()) {
    dir = opts.run_dir;
  } else {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    auto s = std::chrono::duration_cast<std::chrono::seconds>(now).count();
    dir = "run-" + std::to_string(s) + "-" + std::to_string(cfg.seed);
  }
  fs::create_directories(dir);
  return dir;
}

RunLog open_log(const fs::path& run_dir, const Config& cfg) {
  RunLog log((run_dir / "run.ndjson").string());
  // echo the effective config before any work happens
  std::ostringstream rec;
  rec << "{\"phase\":\"config\",\"config\":{";
  bool first = true;
  for (const auto& line : cfg.serialize()) {
    size_t eq = line.find(" = ");
    if (!first) rec << ",";
    first = false;
    rec << "\"" << line.substr(0, eq) << "\":\"" << line.substr(eq + 3) << "\"";
  }
  rec << "}}";
  log.record(rec.str());
  return log;
}

NoiseSpec noise_from(const Config& cfg) {
  NoiseSpec n;
  n.p_delete = cfg.p_delete;
  n.p_substitute = cfg.p_substitute;
  n.p_insert = cfg.p_insert;
  n.p_swap = cfg.p_swap;
  n.seed = cfg.seed;
  return n;
}

int cmd_gen_data(const CommonOpts& opts) {
  Config cfg = resolve_config(opts);
  fs::path dir = make_run_dir(opts, cfg);
  RunLog log = open_log(dir, cfg);
  NoiseSpec noise = noise_from(cfg);
  Vocabulary vocab = synthetic_vocab(cfg.vocab_size);
  auto train = gen_synthetic_triplets(cfg.gen_train, cfg.vocab_size, cfg.len_min,
                                      cfg.len_max, noise, cfg.seed, cfg.seed);
  auto dev = gen_synthetic_triplets(cfg.gen_dev, cfg.vocab_size, cfg.len_min,
                                    cfg.len_max, noise, cfg.seed + 1, cfg.seed);
  auto test = gen_synthetic_triplets(cfg.gen_test, cfg.vocab_size, cfg.len_min,
                                     cfg.len_max, noise, cfg.seed + 2, cfg.seed);
  vocab.save((dir / "vocab.txt").string());
  save_triplets((dir / "train.tsv").string(), train, vocab);
  save_triplets((dir / "dev.tsv").string(), dev, vocab);
  save_triplets((dir / "test.tsv").string(), test, vocab);
  cfg.vocab_path = (dir / "vocab.txt").string();
  cfg.train_path = (dir / "train.tsv").string();
  cfg.dev_path = (dir / "dev.tsv").string();
  cfg.test_path = (dir / "test.tsv").string();
  cfg.save((dir / "config.txt").string());
  std::vector<Sentence> mt, pe;
  for (const auto& t : train) {
    if (t.pe.empty()) continue;
    mt.push_back(t.mt);
    pe.push_back(t.pe);
  }
  double baseline = corpus_ter(mt, pe);
  log.record("{\"phase\":\"gen-data\",\"train\":" + std::to_string(train.size()) +
             ",\"baseline_ter\":" + std::to_string(baseline) + "}");
  std::cout << dir.string() << "\n";
  return 0;
}

int cmd_tag_oracle(const CommonOpts& opts, const std::string& triplet_path,
                   const std::string& vocab_path, const std::string& out_path) {
  Config cfg = resolve_config(opts);
  (void)cfg;
  Vocabulary vocab = Vocabulary::load(vocab_path);
  auto triplets = load_triplets(triplet_path, vocab);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write: " + out_path);
    out = &file;
  }
  char buf[32];
  for (const auto& t : triplets) {
    QeTagSequence q = qe_tags(t.mt, t.pe);
    *out << q.sentinel;
    for (int qi : q.body) *out << ' ' << qi;
    std::snprintf(buf, sizeof(buf), "%.4f", hter(q).value);
    *out << '\t' << buf << '\n';
  }
  return 0;
}

std::vector<Triplet> load_required(const std::string& path,
                                   const Vocabulary& vocab, const char* what) {
  if (path.empty())
    throw std::runtime_error(std::string("config is missing a path for ") + what);
  return load_triplets(path, vocab);
}

int cmd_pretrain(const CommonOpts& opts) {
  Config cfg = resolve_config(opts);
  fs::path dir = make_run_dir(opts, cfg);
  RunLog log = open_log(dir, cfg);
  Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  auto data = load_required(cfg.train_path, vocab, "training data");
  ApeModel model(cfg.model_config());
  pretrain(model, data, cfg, log);
  save_checkpoint((dir / "pretrained.ckpt").string(), model, cfg);
  std::cout << (dir / "pretrained.ckpt").string() << "\n";
  return 0;
}

int cmd_train(const CommonOpts& opts, const std::string& init_ckpt) {
  Config cfg = resolve_config(opts);
  fs::path dir = make_run_dir(opts, cfg);
  RunLog log = open_log(dir, cfg);
  Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
  auto data = load_required(cfg.train_path, vocab, "training data");
  std::vector<Triplet> dev;
  if (!cfg.dev_path.empty()) dev = load_triplets(cfg.dev_path, vocab);

  std::unique_ptr<ApeModel> model;
  if (!init_ckpt.empty()) {
    Config ckpt_cfg;
    model = load_checkpoint(init_ckpt, &ckpt_cfg);
  } else {
    model = std::make_unique<ApeModel>(cfg.model_config());
    if (cfg.pretrain_steps > 0) pretrain(*model, data, cfg, log);
  }
  std::string ckpt = (dir / "model.ckpt").string();
  TrainStats stats = train(*model, data, dev, cfg, log, ckpt);
  save_checkpoint(ckpt, *model, cfg);
  log.record("{\"phase\":\"train-done\",\"optimizer_steps\":" +
             std::to_string(stats.optimizer_steps) + "}");
  std::cout << ckpt << "\n";
  return 0;
}

int cmd_infer(const CommonOpts& opts, const std::string& ckpt,
              const std::string& input_path, const std::string& out_path) {
  Config cfg = resolve_config(opts);
  Config ckpt_cfg;
  auto model = load_checkpoint(ckpt, &ckpt_cfg);
  // the checkpoint fixes the architecture; routing knobs come from the caller
  ckpt_cfg.tau = cfg.tau;
  ckpt_cfg.refine_steps = cfg.refine_steps;
  std::string vocab_path =
      !cfg.vocab_path.empty() ? cfg.vocab_path : ckpt_cfg.vocab_path;
  Vocabulary vocab = Vocabulary::load(vocab_path);
  auto triplets = load_triplets(input_path, vocab);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw std::runtime_error("cannot write: " + out_path);
    out = &file;
  }
  for (const auto& t : triplets) {
    ApeOutput o = infer(*model, t.src, t.mt, ckpt_cfg.tau, ckpt_cfg.refine_steps);
    auto toks = vocab.decode(o.tokens);
    for (size_t i = 0; i < toks.size(); ++i)
      *out << (i ? " " : "") << toks[i];
    *out << '\t' << (o.source_model == SourceModel::GM ? "GM" : "AOM") << '\t'
         << o.iterations_used << '\n';
  }
  return 0;
}

int cmd_eval(const CommonOpts& opts, const std::string& ckpt,
             const std::string& input_path) {
  Config cfg = resolve_config(opts);
  Config ckpt_cfg;
  auto model = load_checkpoint(ckpt, &ckpt_cfg);
  ckpt_cfg.tau = cfg.tau;
  ckpt_cfg.refine_steps = cfg.refine_steps;
  std::string vocab_path =
      !cfg.vocab_path.empty() ? cfg.vocab_path : ckpt_cfg.vocab_path;
  std::string data_path =
      !input_path.empty() ? input_path : ckpt_cfg.test_path;
  Vocabulary vocab = Vocabulary::load(vocab_path);
  auto test = load_triplets(data_path, vocab);
  EvalResult res = evaluate(*model, test, ckpt_cfg);
  std::cout << eval_report_json(res) << "\n";
  return 0;
}

int cmd_sweep_tau(const CommonOpts& opts, const std::string& ckpt,
                  const std::string& input_path, std::vector<double> grid) {
  Config cfg = resolve_config(opts);
  Config ckpt_cfg;
  auto model = load_checkpoint(ckpt, &ckpt_cfg);
  ckpt_cfg.refine_steps = cfg.refine_steps;
  std::string vocab_path =
      !cfg.vocab_path.empty() ? cfg.vocab_path : ckpt_cfg.vocab_path;
  std::string data_path = !input_path.empty() ? input_path : ckpt_cfg.dev_path;
  Vocabulary vocab = Vocabulary::load(vocab_path);
  auto dev = load_triplets(data_path, vocab);
  if (grid.empty()) grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 1.0};
  TauSweepResult res = sweep_tau(*model, dev, ckpt_cfg, grid);
  for (const auto& row : res.table)
    std::printf("tau=%.3f\tdev_ter=%.4f\tgm_fraction=%.4f\n", row.tau,
                row.dev_ter, row.gm_fraction);
  std::printf("best_tau=%.3f\n", res.best_tau);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical automatic post-editing pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string triplet_path, vocab_path, out_path, ckpt, input_path;
  std::vector<double> grid;

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic cipher corpus");
  add_common(gen, opts);

  auto* tag = app.add_subcommand("tag-oracle",
                                 "oracle edit tags + HTER per triplet");
  add_common(tag, opts);
  tag->add_option("triplets", triplet_path, "triplet TSV file")->required();
  tag->add_option("vocab", vocab_path, "vocabulary file")->required();
  tag->add_option("-o,--out", out_path, "output file (default stdout)");

  auto* pre = app.add_subcommand("pretrain", "masked-LM pretraining only");
  add_common(pre, opts);

  auto* tr = app.add_subcommand("train", "pretrain (unless given) + joint training");
  add_common(tr, opts);
  tr->add_option("--init", ckpt, "start from this checkpoint");

  auto* inf = app.add_subcommand("infer", "post-edit a triplet file");
  add_common(inf, opts);
  inf->add_option("checkpoint", ckpt, "model checkpoint")->required();
  inf->add_option("input", input_path, "triplet TSV file")->required();
  inf->add_option("-o,--out", out_path, "output file (default stdout)");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint; prints JSON");
  add_common(ev, opts);
  ev->add_option("checkpoint", ckpt, "model checkpoint")->required();
  ev->add_option("input", input_path, "triplet TSV file (default: config test set)");

  auto* sw = app.add_subcommand("sweep-tau", "pick tau by dev TER");
  add_common(sw, opts);
  sw->add_option("checkpoint", ckpt, "model checkpoint")->required();
  sw->add_option("input", input_path, "dev triplet TSV (default: config dev set)");
  sw->add_option("--grid", grid, "tau grid values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(opts);
    if (tag->parsed()) return cmd_tag_oracle(opts, triplet_path, vocab_path, out_path);
    if (pre->parsed()) return cmd_pretrain(opts);
    if (tr->parsed()) return cmd_train(opts, ckpt);
    if (inf->parsed()) return cmd_infer(opts, ckpt, input_path, out_path);
    if (ev->parsed()) return cmd_eval(opts, ckpt, input_path);
    if (sw->parsed()) return cmd_sweep_tau(opts, ckpt, input_path, grid);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
