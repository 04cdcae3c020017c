#include "apedit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace apedit {

RunLog::RunLog(const std::string& path) : path_(path) {
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open run log: " + path_);
  }
}

void RunLog::record(const std::string& json_object) {
  records_.push_back(json_object);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    out << json_object << "\n";
  }
}

void save_checkpoint(const std::string& path, const ApeModel& model,
                     const Config& cfg) {
  save_params(path, model.params(), cfg.serialize());
}

std::unique_ptr<ApeModel> load_checkpoint(const std::string& path,
                                          Config* cfg_out) {
  // peek the header to build the matching architecture first
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path);
  std::vector<std::string> header;
  std::string line;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0)
    header.push_back(line.substr(2));
  in.close();
  Config cfg = Config::from_lines(header);
  auto model = std::make_unique<ApeModel>(cfg.model_config());
  load_params(path, model->params());
  if (cfg_out) *cfg_out = cfg;
  return model;
}

void pretrain(ApeModel& model, const std::vector<Triplet>& pairs,
              const Config& cfg, RunLog& log) {
  if (pairs.empty()) throw std::invalid_argument("pretrain: empty data");
  Adam adam({cfg.base_lr, cfg.warmup_steps});
  auto group = model.group_pretrain();
  Rng rng(cfg.seed ^ 0xa5a5a5a5ULL);
  Rng drop_rng(cfg.seed ^ 0xd509f3a1ULL);
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  size_t cursor = 0;
  auto scale_grads = [&](double s) {
    for (const auto& p : model.params().all())
      for (double& g : p->grad.data) g *= s;
  };
  for (int step = 1; step <= cfg.pretrain_steps; ++step) {
    model.params().zero_grads();
    int batch_items = 0, batch_tokens = 0;
    double batch_loss = 0.0;
    while (batch_items == 0 || batch_tokens < cfg.batch_tokens) {
      // draw until the mask hits at least one token
      Sentence masked;
      std::vector<int> targets;
      const Triplet* pair = nullptr;
      while (true) {
        if (cursor == order.size()) {
          rng.shuffle(order);
          cursor = 0;
        }
        pair = &pairs[order[cursor++]];
        const Sentence& target = pair->ref ? *pair->ref : pair->pe;
        auto [m_tilde, supervise] = pretrain_mask(target, cfg.mask_rate, rng);
        bool any = false;
        for (char s : supervise) any |= s != 0;
        if (!any) continue;  // degenerate draw: skip the sample
        masked = std::move(m_tilde);
        targets.assign(target.size(), -1);
        for (size_t i = 0; i < target.size(); ++i)
          if (supervise[i]) targets[i] = target[i];
        break;
      }
      Tape tape;
      tape.enable_dropout(cfg.dropout, &drop_rng);
      Var loss = model.masked_fill_loss(tape, pair->src, masked, targets);
      double value = loss->val.at(0);
      if (std::isnan(value) || std::isinf(value))
        throw std::runtime_error("pretraining diverged at step " +
                                 std::to_string(step));
      tape.backward(loss);
      batch_loss += value;
      ++batch_items;
      batch_tokens += static_cast<int>(masked.size());
    }
    scale_grads(1.0 / batch_items);
    adam.step(group);
    if (step % 200 == 0 || step == cfg.pretrain_steps)
      log.record("{\"phase\":\"pretrain\",\"step\":" + std::to_string(step) +
                 ",\"loss\":" + std::to_string(batch_loss / batch_items) + "}");
  }
}

namespace {

double dev_ter(ApeModel& model, const std::vector<Triplet>& dev,
               const Config& cfg) {
  std::vector<Sentence> cand, ref;
  for (const auto& t : dev) {
    if (t.pe.empty()) continue;
    cand.push_back(infer(model, t.src, t.mt, cfg.tau, cfg.refine_steps).tokens);
    ref.push_back(t.pe);
  }
  return corpus_ter(cand, ref);
}

}  // namespace

TrainStats train(ApeModel& model, const std::vector<Triplet>& data,
                 const std::vector<Triplet>& dev, const Config& cfg,
                 RunLog& log, const std::string& checkpoint_path) {
  if (data.empty()) throw std::invalid_argument("train: empty data");
  TrainStats stats;
  Adam adam({cfg.base_lr, cfg.warmup_steps});
  auto joint_group = model.group_joint();
  auto all_group = model.group_all();
  Rng rng(cfg.seed ^ 0x5a5a5a5aULL);
  Rng drop_rng(cfg.seed ^ 0x3c6ef372ULL);
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  uint64_t epoch = 0;
  rng.shuffle(order);
  size_t cursor = 0;

  double best_dev = 1e300;
  int bad_evals = 0;
  double joint_avg = 0.0, gm_avg = 0.0;
  long long window = 0;

  std::deque<Triplet> pending;  // expanded triplets not yet consumed
  auto scale_grads = [&](double s) {
    for (const auto& p : model.params().all())
      for (double& g : p->grad.data) g *= s;
  };

  while (adam.steps_taken() < cfg.max_steps) {
    // assemble a token-budget batch of expanded triplets
    std::vector<Triplet> batch;
    int batch_tokens = 0;
    while (batch.empty() || batch_tokens < cfg.batch_tokens) {
      if (pending.empty()) {
        if (cursor == order.size()) {
          ++epoch;
          Rng epoch_rng(cfg.seed ^ (0x9e3779b9ULL * (epoch + 1)));
          epoch_rng.shuffle(order);
          cursor = 0;
        }
        const Triplet& seed_triplet = data[order[cursor++]];
        if (cfg.augment) {
          auto expanded = expand_training_tuple(
              seed_triplet.src, seed_triplet.mt, seed_triplet.pe, model,
              cfg.beta, rng);
          pending.insert(pending.end(), expanded.begin(), expanded.end());
        } else {
          pending.push_back(seed_triplet);
        }
      }
      batch_tokens +=
          static_cast<int>(pending.front().mt.size() + pending.front().pe.size());
      batch.push_back(std::move(pending.front()));
      pending.pop_front();
    }

    {
      model.params().zero_grads();
      double jv = 0.0;
      for (const Triplet& t : batch) {
        Tape joint_tape;
        joint_tape.enable_dropout(cfg.dropout, &drop_rng);
        int clipped = 0;
        Var joint_loss =
            model.joint_qe_aom_loss(joint_tape, t.src, t.mt, t.pe, &clipped);
        stats.clipped_tags += clipped;
        double v = joint_loss->val.at(0);
        if (std::isnan(v) || std::isinf(v))
          throw std::runtime_error("joint loss diverged at step " +
                                   std::to_string(adam.steps_taken()));
        joint_tape.backward(joint_loss);
        jv += v;
      }
      jv /= batch.size();
      scale_grads(1.0 / batch.size());
      adam.step(joint_group);

      model.params().zero_grads();
      double gv = 0.0;
      for (const Triplet& t : batch) {
        Tape gm_tape;
        gm_tape.enable_dropout(cfg.dropout, &drop_rng);
        Var gm = model.gm_loss(gm_tape, t.src, t.mt, t.pe);
        double v = gm->val.at(0);
        if (std::isnan(v) || std::isinf(v))
          throw std::runtime_error("generative loss diverged at step " +
                                   std::to_string(adam.steps_taken()));
        gm_tape.backward(gm);
        gv += v;
      }
      gv /= batch.size();
      scale_grads(1.0 / batch.size());
      adam.step(all_group);

      joint_avg += jv;
      gm_avg += gv;
      ++window;
      stats.final_joint_loss = jv;
      stats.final_gm_loss = gv;

      if (cfg.eval_every > 0 && adam.steps_taken() % (2LL * cfg.eval_every) == 0) {
        std::ostringstream rec;
        rec << "{\"phase\":\"train\",\"step\":" << adam.steps_taken()
            << ",\"joint_loss\":" << joint_avg / window
            << ",\"gm_loss\":" << gm_avg / window;
        joint_avg = gm_avg = 0.0;
        window = 0;
        if (!dev.empty()) {
          double ter = dev_ter(model, dev, cfg);
          rec << ",\"dev_ter\":" << ter;
          if (!checkpoint_path.empty() && ter < best_dev)
            save_checkpoint(checkpoint_path, model, cfg);
          if (ter < best_dev) {
            best_dev = ter;
            bad_evals = 0;
          } else if (cfg.patience > 0 && ++bad_evals >= cfg.patience) {
            rec << ",\"early_stop\":true}";
            log.record(rec.str());
            stats.optimizer_steps = adam.steps_taken();
            return stats;
          }
        }
        rec << "}";
        log.record(rec.str());
      }
    }
  }
  stats.optimizer_steps = adam.steps_taken();
  if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, model, cfg);
  return stats;
}

ApeOutput infer(ApeModel& model, const Sentence& src, const Sentence& mt,
                double tau, int refine_steps) {
  if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must be in [0,1]");
  if (refine_steps < 1) throw std::invalid_argument("refine_steps must be >= 1");
  ApeOutput out;
  Sentence current = mt;
  for (int i = 1; i <= refine_steps; ++i) {
    QePrediction pred = model.qe_forward(src, current);
    // tau's endpoints pin the GM-only and AOM-only modes exactly; in the
    // interior the threshold is the strict comparison of the inference loop
    bool to_gm = tau < 1.0 && (tau == 0.0 || pred.hter.value > tau);
    int capacity = model.config().max_len - 2;  // room for BOS/EOS
    if (i == 1 && to_gm) {
      int bound = std::min(2 * static_cast<int>(mt.size()) + 8, capacity);
      out.tokens = model.gm_decode(src, mt, bound, &out.truncated);
      out.source_model = SourceModel::GM;
      out.iterations_used = 1;
      return out;
    }
    Sentence skeleton = plh_insert(current, pred.tags);
    if (static_cast<int>(skeleton.size()) > capacity) {
      // predicted insertions would overflow the model; keep the last state
      out.iterations_used = i;
      break;
    }
    Sentence next = model.aom_fill(src, skeleton);
    out.iterations_used = i;
    if (next == current) {
      out.reached_fixpoint = true;
      break;
    }
    current = std::move(next);
  }
  out.tokens = std::move(current);
  out.source_model = SourceModel::AOM;
  return out;
}

EvalResult evaluate(ApeModel& model, const std::vector<Triplet>& test,
                    const Config& cfg) {
  EvalResult res;
  std::vector<Sentence> cand, base, ref;
  std::vector<std::string> pred_classes, gold_classes;
  std::vector<double> pred_h, true_ter;
  for (const auto& t : test) {
    ApeOutput out = infer(model, t.src, t.mt, cfg.tau, cfg.refine_steps);
    ++res.routing.total;
    if (out.source_model == SourceModel::GM) {
      ++res.routing.to_gm;
      res.routing.gm_truncated += out.truncated;
    } else {
      ++res.routing.to_aom;
      res.routing.aom_iterations += out.iterations_used;
      if (out.reached_fixpoint) ++res.routing.aom_fixpoint_by_s;
    }
    if (!t.pe.empty()) {
      cand.push_back(out.tokens);
      base.push_back(t.mt);
      ref.push_back(t.pe);
    }
    // first-pass QE quality, independent of routing
    QePrediction qe = model.qe_forward(t.src, t.mt);
    for (FineClass c : to_fine_classes(qe.tags))
      pred_classes.push_back(fine_class_name(c));
    for (FineClass c : to_fine_classes(qe_tags(t.mt, t.pe)))
      gold_classes.push_back(fine_class_name(c));
    if (!t.pe.empty()) {
      pred_h.push_back(qe.hter.value);
      true_ter.push_back(static_cast<double>(levenshtein(t.mt, t.pe)) /
                         static_cast<double>(t.pe.size()));
    }
    res.outputs.push_back(std::move(out));
  }
  res.report.bleu = corpus_bleu(cand, ref);
  res.report.ter = corpus_ter(cand, ref);
  res.baseline.bleu = corpus_bleu(base, ref);
  res.baseline.ter = corpus_ter(base, ref);
  res.report.per_class_f1 = tag_prf(pred_classes, gold_classes);
  if (pred_h.size() >= 2)
    res.report.pearson =
        pearson(pred_h, true_ter, &res.report.pearson_degenerate);
  return res;
}

TauSweepResult sweep_tau(ApeModel& model, const std::vector<Triplet>& dev,
                         const Config& cfg, const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("sweep_tau: empty grid");
  TauSweepResult res;
  std::vector<double> sorted_grid = grid;
  std::sort(sorted_grid.begin(), sorted_grid.end());
  double best = 1e300;
  for (double tau : sorted_grid) {
    Config c = cfg;
    c.tau = tau;
    EvalResult er = evaluate(model, dev, c);
    TauSweepRow row;
    row.tau = tau;
    row.dev_ter = er.report.ter;
    row.gm_fraction = er.routing.total > 0
                          ? static_cast<double>(er.routing.to_gm) / er.routing.total
                          : 0.0;
    res.table.push_back(row);
    // ties resolve to the smallest tau: strict improvement only
    if (row.dev_ter < best) {
      best = row.dev_ter;
      res.best_tau = tau;
    }
  }
  return res;
}

std::string eval_report_json(const EvalResult& result) {
  nlohmann::json j;
  j["bleu"] = result.report.bleu;
  j["ter"] = result.report.ter;
  nlohmann::json f1;
  for (const auto& [cls, s] : result.report.per_class_f1)
    f1[cls] = {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
  j["f1"] = f1;
  j["pearson"] = result.report.pearson;
  j["baseline"] = {{"bleu", result.baseline.bleu}, {"ter", result.baseline.ter}};
  j["routing"] = {{"total", result.routing.total},
                  {"gm", result.routing.to_gm},
                  {"aom", result.routing.to_aom},
                  {"gm_fraction",
                   result.routing.total > 0
                       ? static_cast<double>(result.routing.to_gm) /
                             result.routing.total
                       : 0.0}};
  return j.dump();
}

}  // namespace apedit
