// Acceptance gate: every release-blocking property in one binary, one
// PASS/FAIL line each. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "apedit/metrics.hpp"
#include "apedit/pipeline.hpp"

using namespace apedit;

namespace {

int g_failures = 0;

bool criterion(const std::string& name, double budget_s,
               const std::function<bool(std::string&)>& body) {
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
  if (dt > budget_s) {
    ok = false;
    detail += (detail.empty() ? "" : "; ") + std::string("over budget");
  }
  std::printf("%s: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), dt,
              detail.empty() ? "" : " -- ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
  return ok;
}

// independent reference edit distance (full-matrix, no backtrace)
int lev_ref(const Sentence& a, const Sentence& b) {
  std::vector<std::vector<int>> d(a.size() + 1,
                                  std::vector<int>(b.size() + 1, 0));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = int(i);
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = int(j);
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (a[i - 1] != b[j - 1] ? 1 : 0),
                          d[i][j - 1] + 1, d[i - 1][j] + 1});
  return d[a.size()][b.size()];
}

long long implied_edits(const QeTagSequence& q) {
  long long e = q.sentinel - 1;
  for (int t : q.body) e += t < 1 ? 1 : t - 1;
  return e;
}

bool check_pair(const Sentence& mt, const Sentence& pe, std::string& detail) {
  QeTagSequence q = qe_tags(mt, pe);
  if (implied_edits(q) != lev_ref(mt, pe)) {
    detail = "edit count != levenshtein";
    return false;
  }
  Sentence skel = plh_insert(mt, q);
  if (skel.size() != pe.size()) {
    detail = "|plh_insert| != |pe|";
    return false;
  }
  Sentence fill;
  for (size_t i = 0; i < skel.size(); ++i)
    if (skel[i] == Vocabulary::kPlh) fill.push_back(pe[i]);
  if (apply_edit_script(mt, q, fill) != pe) {
    detail = "round trip failed";
    return false;
  }
  for (size_t i = 0; i < skel.size(); ++i)
    if (skel[i] != Vocabulary::kPlh && skel[i] != pe[i]) {
      detail = "anchor mismatch";
      return false;
    }
  return true;
}

// enumerate every sentence of the given length over `symbols` symbols
void each_sentence(int len, int symbols,
                   const std::function<void(const Sentence&)>& fn) {
  Sentence s(len, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == len) {
      fn(s);
      return;
    }
    for (int v = 0; v < symbols; ++v) {
      s[i] = Vocabulary::kNumReserved + v;
      rec(i + 1);
    }
  };
  rec(0);
}

Sentence random_sentence(Rng& rng, int max_len, int symbols) {
  Sentence s(rng.uniform_int(max_len + 1));
  for (int& t : s)
    t = Vocabulary::kNumReserved + int(rng.uniform_int(symbols));
  return s;
}

// ---- shared state for the end-to-end criteria ----
struct E2E {
  Config cfg;
  std::vector<Triplet> train_data, dev_data, test_data;
  std::unique_ptr<ApeModel> model;         // augmented training
  std::unique_ptr<ApeModel> model_noaug;   // ablation training
  double baseline_ter = 0.0;
  EvalResult ev_default, ev_gm, ev_aom, ev_aom_noaug;
  bool trained = false;
};
E2E g;

Config e2e_config() {
  Config cfg;  // the documented defaults are the experiment
  cfg.eval_every = 0;
  return cfg;
}

void run_training() {
  if (g.trained) return;
  g.cfg = e2e_config();
  NoiseSpec noise{g.cfg.p_delete, g.cfg.p_substitute, g.cfg.p_insert,
                  g.cfg.p_swap, g.cfg.seed};
  g.train_data =
      gen_synthetic_triplets(g.cfg.gen_train, g.cfg.vocab_size, g.cfg.len_min,
                             g.cfg.len_max, noise, g.cfg.seed, g.cfg.seed);
  g.dev_data =
      gen_synthetic_triplets(g.cfg.gen_dev, g.cfg.vocab_size, g.cfg.len_min,
                             g.cfg.len_max, noise, g.cfg.seed + 1, g.cfg.seed);
  g.test_data =
      gen_synthetic_triplets(g.cfg.gen_test, g.cfg.vocab_size, g.cfg.len_min,
                             g.cfg.len_max, noise, g.cfg.seed + 2, g.cfg.seed);
  std::vector<Sentence> mts, pes;
  for (const auto& t : g.test_data) {
    mts.push_back(t.mt);
    pes.push_back(t.pe);
  }
  g.baseline_ter = corpus_ter(mts, pes);

  RunLog log;
  g.model = std::make_unique<ApeModel>(g.cfg.model_config());
  pretrain(*g.model, g.train_data, g.cfg, log);
  train(*g.model, g.train_data, {}, g.cfg, log);

  g.ev_default = evaluate(*g.model, g.test_data, g.cfg);
  Config c = g.cfg;
  c.tau = 0.0;
  g.ev_gm = evaluate(*g.model, g.test_data, c);
  c.tau = 1.0;
  g.ev_aom = evaluate(*g.model, g.test_data, c);
  g.trained = true;
}

}  // namespace

int main() {
  criterion("1. edit-algebra oracle suite", 60.0, [](std::string& detail) {
    // exhaustive over every pair shape with |mt| + |pe| <= 8 on a 4-symbol
    // alphabet (the full cross product of both sides at length 8 each is
    // ~10^10 pairs, far past the runtime budget), plus long random pairs
    long long pairs = 0;
    bool ok = true;
    for (int lm = 0; lm <= 8 && ok; ++lm)
      for (int lp = 0; lp + lm <= 8 && ok; ++lp)
        each_sentence(lm, 4, [&](const Sentence& mt) {
          each_sentence(lp, 4, [&](const Sentence& pe) {
            if (!ok) return;
            ++pairs;
            if (!check_pair(mt, pe, detail)) ok = false;
          });
        });
    Rng rng(2024);
    for (int i = 0; i < 10000 && ok; ++i) {
      Sentence mt = random_sentence(rng, 40, 12);
      Sentence pe = random_sentence(rng, 40, 12);
      ++pairs;
      if (!check_pair(mt, pe, detail)) ok = false;
    }
    if (ok) detail = std::to_string(pairs) + " pairs";
    return ok;
  });

  criterion("2. HTER-TER identity", 60.0, [](std::string& detail) {
    Rng rng(77);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      Sentence mt = random_sentence(rng, 30, 10);
      Sentence pe = random_sentence(rng, 30, 10);
      if (pe.empty()) pe.push_back(Vocabulary::kNumReserved);
      double h100 = hter(qe_tags(mt, pe)).value * 100.0;
      double ter = corpus_ter({mt}, {pe});
      worst = std::max(worst, std::abs(h100 - ter));
    }
    detail = "max |diff| = " + std::to_string(worst);
    return worst < 1e-9;
  });

  criterion("3. gradient verification", 300.0, [](std::string& detail) {
    ModelConfig mc;
    mc.vocab_size = 32;
    mc.d_model = 16;
    mc.n_layers = 1;
    mc.n_heads = 2;
    mc.d_ff = 32;
    mc.max_len = 32;
    mc.init_seed = 5;
    ApeModel model(mc);
    Sentence src{9, 7, 12, 5}, mt{5, 6, 7}, pe{5, 8, 7, 9};
    double worst = 0.0;
    bool ok = true;
    {
      auto report = grad_check(
          model.params(),
          [&] {
            Tape t(false);
            return model.joint_qe_aom_loss(t, src, mt, pe)->val.at(0);
          },
          [&] {
            model.params().zero_grads();
            Tape t;
            t.backward(model.joint_qe_aom_loss(t, src, mt, pe));
          },
          1e-4, 8);
      ok &= report.pass;
      worst = std::max(worst, report.worst_error);
    }
    {
      auto report = grad_check(
          model.params(),
          [&] {
            Tape t(false);
            return model.gm_loss(t, src, mt, pe)->val.at(0);
          },
          [&] {
            model.params().zero_grads();
            Tape t;
            t.backward(model.gm_loss(t, src, mt, pe));
          },
          1e-4, 8);
      ok &= report.pass;
      worst = std::max(worst, report.worst_error);
    }
    detail = "max rel err = " + std::to_string(worst);
    return ok;
  });

  criterion("4. overfit on 32 triplets", 900.0, [](std::string& detail) {
    Config cfg = e2e_config();
    cfg.augment = false;
    cfg.max_steps = 5000;
    cfg.pretrain_steps = 0;
    NoiseSpec noise{cfg.p_delete, cfg.p_substitute, cfg.p_insert, cfg.p_swap,
                    cfg.seed};
    auto data = gen_synthetic_triplets(32, cfg.vocab_size, cfg.len_min,
                                       cfg.len_max, noise, 99, 99);
    ApeModel model(cfg.model_config());
    RunLog log;
    train(model, data, {}, cfg, log);

    long long qe_hit = 0, qe_total = 0, aom_hit = 0, aom_total = 0;
    double gm_acc_sum = 0.0;
    for (const auto& t : data) {
      QeTagSequence oracle = qe_tags(t.mt, t.pe);
      clip_tags(oracle, cfg.k_max);
      QePrediction pred = model.qe_forward(t.src, t.mt);
      qe_hit += pred.tags.sentinel == oracle.sentinel;
      ++qe_total;
      for (size_t i = 0; i < oracle.body.size(); ++i) {
        qe_hit += pred.tags.body[i] == oracle.body[i];
        ++qe_total;
      }
      AomExample ex = build_aom_example(t.mt, t.pe, cfg.k_max);
      Sentence filled = model.aom_fill(t.src, ex.skeleton);
      for (size_t i = 0; i < ex.targets.size(); ++i) {
        if (ex.targets[i] < 0) continue;
        aom_hit += filled[i] == ex.targets[i];
        ++aom_total;
      }
      gm_acc_sum += model.teacher_forced_accuracy(t.src, t.mt, t.pe);
    }
    double qe_acc = double(qe_hit) / qe_total;
    double aom_acc = aom_total > 0 ? double(aom_hit) / aom_total : 1.0;
    double gm_acc = gm_acc_sum / data.size();
    char buf[128];
    std::snprintf(buf, sizeof(buf), "qe %.4f aom %.4f gm %.4f", qe_acc,
                  aom_acc, gm_acc);
    detail = buf;
    return qe_acc >= 0.99 && aom_acc >= 0.99 && gm_acc >= 0.99;
  });

  criterion("5. end-to-end synthetic experiment", 7200.0, [](std::string& detail) {
    run_training();
    double ter = g.ev_default.report.ter;
    double gm_ter = g.ev_gm.report.ter;
    double aom_ter = g.ev_aom.report.ter;
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "baseline %.2f model %.2f gm-only %.2f aom-only %.2f",
                  g.baseline_ter, ter, gm_ter, aom_ter);
    detail = buf;
    bool noise_ok = g.baseline_ter >= 20.0 && g.baseline_ter <= 30.0;
    bool beats_baseline = ter <= 0.7 * g.baseline_ter;
    bool ordering = ter <= std::min(gm_ter, aom_ter) + 0.5;
    return noise_ok && beats_baseline && ordering;
  });

  criterion("6. pseudo-data ablation", 7200.0, [](std::string& detail) {
    run_training();
    Config cfg = g.cfg;
    cfg.augment = false;
    RunLog log;
    g.model_noaug = std::make_unique<ApeModel>(cfg.model_config());
    pretrain(*g.model_noaug, g.train_data, cfg, log);
    train(*g.model_noaug, g.train_data, {}, cfg, log);
    Config ec = cfg;
    ec.tau = 1.0;
    g.ev_aom_noaug = evaluate(*g.model_noaug, g.test_data, ec);
    double with_aug = g.ev_aom.report.ter;
    double without_aug = g.ev_aom_noaug.report.ter;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "aom-only with aug %.2f without %.2f",
                  with_aug, without_aug);
    detail = buf;
    return without_aug - with_aug >= 1.0;
  });

  criterion("7. refinement convergence", 600.0, [](std::string& detail) {
    run_training();
    const RoutingStats& r = g.ev_aom.routing;
    if (r.to_aom == 0) {
      detail = "no AOM-routed sentences";
      return false;
    }
    double mean_iters = double(r.aom_iterations) / r.to_aom;
    double fix_frac = double(r.aom_fixpoint_by_s) / r.to_aom;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "mean iters %.2f fixpoint %.3f",
                  mean_iters, fix_frac);
    detail = buf;
    return mean_iters <= 5.0 && fix_frac >= 0.95;
  });

  criterion("8. routing extremes", 600.0, [](std::string& detail) {
    run_training();
    bool all_gm = g.ev_gm.routing.to_gm == g.ev_gm.routing.total &&
                  g.ev_gm.routing.to_aom == 0;
    bool no_gm = g.ev_aom.routing.to_gm == 0 &&
                 g.ev_aom.routing.to_aom == g.ev_aom.routing.total;
    bool default_consistent =
        g.ev_default.routing.to_gm + g.ev_default.routing.to_aom ==
        g.ev_default.routing.total;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "tau=0 gm %d/%d, tau=1 gm %d/%d, tau=0.3 gm %d/%d",
                  g.ev_gm.routing.to_gm, g.ev_gm.routing.total,
                  g.ev_aom.routing.to_gm, g.ev_aom.routing.total,
                  g.ev_default.routing.to_gm, g.ev_default.routing.total);
    detail = buf;
    return all_gm && no_gm && default_consistent;
  });

  criterion("9. QE correlation", 600.0, [](std::string& detail) {
    run_training();
    double r = g.ev_default.report.pearson;
    detail = "pearson = " + std::to_string(r);
    return !g.ev_default.report.pearson_degenerate && r >= 0.5;
  });

  if (g_failures == 0) {
    std::printf("all acceptance criteria passed\n");
    return 0;
  }
  std::printf("%d acceptance criteria FAILED\n", g_failures);
  return 1;
}
