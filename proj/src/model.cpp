#include "apedit/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace apedit {

AomExample build_aom_example(const Sentence& mt, const Sentence& pe, int k_max) {
  AomExample ex;
  QeTagSequence q = qe_tags(mt, pe);
  ex.clipped_tags = q;
  ex.clipped_positions = clip_tags(ex.clipped_tags, k_max);

  // Walk the unclipped skeleton and its 1:1 alignment with pe, dropping the
  // placeholder runs beyond what clipped tags can express.
  size_t pe_pos = 0;
  auto emit_plh = [&](int run, int cap) {
    for (int k = 0; k < run; ++k, ++pe_pos) {
      if (k >= cap) continue;
      ex.skeleton.push_back(Vocabulary::kPlh);
      ex.targets.push_back(static_cast<int>(pe_pos) < static_cast<int>(pe.size())
                               ? pe[pe_pos]
                               : -1);
    }
  };
  emit_plh(q.sentinel - 1, ex.clipped_tags.sentinel - 1);
  for (size_t i = 0; i < mt.size(); ++i) {
    int qi = q.body[i];
    if (qi == 0) continue;
    if (qi == -1) {
      ex.skeleton.push_back(Vocabulary::kPlh);
      ex.targets.push_back(pe[pe_pos]);
      ++pe_pos;
      continue;
    }
    ex.skeleton.push_back(mt[i]);
    ex.targets.push_back(-1);  // anchors are not supervised
    ++pe_pos;
    emit_plh(qi - 1, ex.clipped_tags.body[i] - 1);
  }
  return ex;
}

std::pair<Sentence, std::vector<char>> pretrain_mask(const Sentence& target,
                                                     double rate, Rng& rng) {
  if (rate <= 0.0 || rate >= 1.0)
    throw std::invalid_argument("mask rate must lie in (0,1)");
  Sentence masked = target;
  std::vector<char> supervise(target.size(), 0);
  for (size_t i = 0; i < masked.size(); ++i) {
    if (rng.uniform() < rate) {
      masked[i] = Vocabulary::kPlh;
      supervise[i] = 1;
    }
  }
  return {masked, supervise};
}

namespace {

void add_attention_params(ParamRegistry& reg, const std::string& prefix, int d,
                          Rng& rng) {
  for (const char* part : {"wq", "wk", "wv", "wo"})
    init_uniform(reg.create(prefix + "." + part, {d, d}), d, d, rng);
  for (const char* part : {"bq", "bk", "bv", "bo"})
    reg.create(prefix + "." + part, {d});
}

void add_layer_norm_params(ParamRegistry& reg, const std::string& prefix, int d) {
  Parameter& g = reg.create(prefix + ".g", {d});
  g.value.fill(1.0);
  reg.create(prefix + ".b", {d});
}

}  // namespace

ApeModel::ApeModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg_.vocab_size < Vocabulary::kNumReserved)
    throw std::invalid_argument("vocab too small");
  if (cfg_.d_model % cfg_.n_heads != 0)
    throw std::invalid_argument("d_model must be divisible by n_heads");
  Rng rng(cfg_.init_seed);
  const int d = cfg_.d_model, f = cfg_.d_ff;

  init_uniform(params_.create("emb.tok", {cfg_.vocab_size, d}), cfg_.vocab_size,
               d, rng);
  init_uniform(params_.create("emb.pos", {cfg_.max_len, d}), cfg_.max_len, d,
               rng);

  auto add_stack = [&](const std::string& stack, bool cross_src,
                       bool cross_joint) {
    for (int l = 0; l < cfg_.n_layers; ++l) {
      std::string p = stack + "." + std::to_string(l);
      add_layer_norm_params(params_, p + ".ln1", d);
      add_attention_params(params_, p + ".attn", d, rng);
      if (cross_joint) {
        add_layer_norm_params(params_, p + ".lnj", d);
        add_attention_params(params_, p + ".cj", d, rng);
      }
      if (cross_src) {
        add_layer_norm_params(params_, p + ".lnc", d);
        add_attention_params(params_, p + ".cs", d, rng);
      }
      add_layer_norm_params(params_, p + ".ln2", d);
      init_uniform(params_.create(p + ".ffn.w1", {d, f}), d, f, rng);
      params_.create(p + ".ffn.b1", {f});
      init_uniform(params_.create(p + ".ffn.w2", {f, d}), f, d, rng);
      params_.create(p + ".ffn.b2", {d});
    }
    add_layer_norm_params(params_, stack + ".final_ln", d);
  };
  add_stack("enc", false, false);
  add_stack("memenc", true, false);
  add_stack("dec", true, true);

  init_uniform(params_.create("head.qe.w", {d, cfg_.n_tag_classes()}), d,
               cfg_.n_tag_classes(), rng);
  params_.create("head.qe.b", {cfg_.n_tag_classes()});
  init_uniform(params_.create("head.pe.w", {d, cfg_.vocab_size}), d,
               cfg_.vocab_size, rng);
  params_.create("head.pe.b", {cfg_.vocab_size});
  init_uniform(params_.create("head.gm.w", {d, cfg_.vocab_size}), d,
               cfg_.vocab_size, rng);
  params_.create("head.gm.b", {cfg_.vocab_size});
}

std::vector<Parameter*> ApeModel::group_all() {
  std::vector<Parameter*> out;
  for (const auto& p : params_.all()) out.push_back(p.get());
  return out;
}

namespace {
bool starts_with_any(const std::string& name,
                     std::initializer_list<const char*> prefixes) {
  for (const char* p : prefixes)
    if (name.rfind(p, 0) == 0) return true;
  return false;
}
}  // namespace

std::vector<Parameter*> ApeModel::group_joint() {
  std::vector<Parameter*> out;
  for (const auto& p : params_.all())
    if (starts_with_any(p->name, {"emb.", "enc.", "memenc.", "head.qe", "head.pe"}))
      out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ApeModel::group_pretrain() {
  std::vector<Parameter*> out;
  for (const auto& p : params_.all())
    if (starts_with_any(p->name, {"emb.", "enc.", "memenc.", "head.pe"}))
      out.push_back(p.get());
  return out;
}

Sentence ApeModel::wrap(const Sentence& s) const {
  if (static_cast<int>(s.size()) + 2 > cfg_.max_len)
    throw std::invalid_argument("over-length input: " +
                                std::to_string(s.size()) + " tokens");
  Sentence out;
  out.reserve(s.size() + 2);
  out.push_back(Vocabulary::kBos);
  out.insert(out.end(), s.begin(), s.end());
  out.push_back(Vocabulary::kEos);
  return out;
}

Var ApeModel::self_attention_block(Tape& tape, Var x, const std::string& prefix,
                                   bool causal) {
  Var normed = tape.layer_norm(x, tape.leaf(params_.find(prefix + ".ln1.g")),
                               tape.leaf(params_.find(prefix + ".ln1.b")));
  auto proj = [&](const char* w, const char* b) {
    return tape.linear(normed,
                       tape.leaf(params_.find(prefix + ".attn." + w)),
                       tape.leaf(params_.find(prefix + ".attn." + b)));
  };
  Var att = tape.attention(proj("wq", "bq"), proj("wk", "bk"), proj("wv", "bv"),
                           cfg_.n_heads, causal);
  Var out = tape.linear(att, tape.leaf(params_.find(prefix + ".attn.wo")),
                        tape.leaf(params_.find(prefix + ".attn.bo")));
  return tape.add(x, tape.dropout(out));
}

Var ApeModel::cross_attention_block(Tape& tape, Var x, Var mem,
                                    const std::string& prefix) {
  // prefix carries the block name together with its norm: "<layer>.cj" etc.
  std::string ln = prefix.substr(0, prefix.size() - 2) +
                   (prefix.substr(prefix.size() - 2) == "cj" ? "lnj" : "lnc");
  Var normed = tape.layer_norm(x, tape.leaf(params_.find(ln + ".g")),
                               tape.leaf(params_.find(ln + ".b")));
  Var q = tape.linear(normed, tape.leaf(params_.find(prefix + ".wq")),
                      tape.leaf(params_.find(prefix + ".bq")));
  Var k = tape.linear(mem, tape.leaf(params_.find(prefix + ".wk")),
                      tape.leaf(params_.find(prefix + ".bk")));
  Var v = tape.linear(mem, tape.leaf(params_.find(prefix + ".wv")),
                      tape.leaf(params_.find(prefix + ".bv")));
  Var att = tape.attention(q, k, v, cfg_.n_heads, false);
  Var out = tape.linear(att, tape.leaf(params_.find(prefix + ".wo")),
                        tape.leaf(params_.find(prefix + ".bo")));
  return tape.add(x, tape.dropout(out));
}

Var ApeModel::ffn_block(Tape& tape, Var x, const std::string& prefix) {
  Var normed = tape.layer_norm(x, tape.leaf(params_.find(prefix + ".ln2.g")),
                               tape.leaf(params_.find(prefix + ".ln2.b")));
  Var h = tape.relu(tape.linear(normed,
                                tape.leaf(params_.find(prefix + ".ffn.w1")),
                                tape.leaf(params_.find(prefix + ".ffn.b1"))));
  Var out = tape.linear(h, tape.leaf(params_.find(prefix + ".ffn.w2")),
                        tape.leaf(params_.find(prefix + ".ffn.b2")));
  return tape.add(x, tape.dropout(out));
}

Var ApeModel::final_norm(Tape& tape, Var x, const std::string& stack) {
  return tape.layer_norm(x, tape.leaf(params_.find(stack + ".final_ln.g")),
                         tape.leaf(params_.find(stack + ".final_ln.b")));
}

Var ApeModel::head(Tape& tape, Var x, const std::string& name) {
  return tape.linear(x, tape.leaf(params_.find("head." + name + ".w")),
                     tape.leaf(params_.find("head." + name + ".b")));
}

Var ApeModel::encode_seq(Tape& tape, const Sentence& wrapped) {
  Var x = tape.embed(tape.leaf(params_.find("emb.tok")),
                     tape.leaf(params_.find("emb.pos")), wrapped);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    std::string p = "enc." + std::to_string(l);
    x = self_attention_block(tape, x, p, false);
    x = ffn_block(tape, x, p);
  }
  return final_norm(tape, x, "enc");
}

Var ApeModel::memory_encode_seq(Tape& tape, const Sentence& wrapped_mt,
                                Var src_mem) {
  Var x = tape.embed(tape.leaf(params_.find("emb.tok")),
                     tape.leaf(params_.find("emb.pos")), wrapped_mt);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    std::string p = "memenc." + std::to_string(l);
    x = self_attention_block(tape, x, p, false);  // no future masking
    x = cross_attention_block(tape, x, src_mem, p + ".cs");
    x = ffn_block(tape, x, p);
  }
  return final_norm(tape, x, "memenc");
}

Var ApeModel::decode_seq(Tape& tape, const Sentence& prefix, Var joint_mem,
                         Var src_mem, bool use_src_shortcut) {
  if (prefix.empty() || prefix[0] != Vocabulary::kBos)
    throw std::invalid_argument("decoder prefix must start with BOS");
  if (static_cast<int>(prefix.size()) > cfg_.max_len)
    throw std::invalid_argument("over-length decoder prefix");
  Var x = tape.embed(tape.leaf(params_.find("emb.tok")),
                     tape.leaf(params_.find("emb.pos")), prefix);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    x = self_attention_block(tape, x, p, true);
    // hierarchical attention: joint memory first, then the src shortcut
    x = cross_attention_block(tape, x, joint_mem, p + ".cj");
    if (use_src_shortcut) x = cross_attention_block(tape, x, src_mem, p + ".cs");
    x = ffn_block(tape, x, p);
  }
  return final_norm(tape, x, "dec");
}

QePrediction ApeModel::qe_forward(const Sentence& src, const Sentence& mt) {
  Tape tape(false);
  Var src_mem = encode_seq(tape, wrap(src));
  Var mem = memory_encode_seq(tape, wrap(mt), src_mem);
  Var logits = head(tape, mem, "qe");

  QePrediction pred;
  const int m = static_cast<int>(mt.size());
  pred.tag_logits = Tensor({m + 1, cfg_.n_tag_classes()});
  for (int i = 0; i <= m; ++i)
    for (int c = 0; c < cfg_.n_tag_classes(); ++c)
      pred.tag_logits.at(i, c) = logits->val.at(i, c);
  // sentinel slot: argmax restricted to tags >= 1 (class index = tag + 1)
  int best = 2;
  for (int c = 2; c < cfg_.n_tag_classes(); ++c)
    if (pred.tag_logits.at(0, c) > pred.tag_logits.at(0, best)) best = c;
  pred.tags.sentinel = best - 1;
  pred.tags.body.resize(m);
  for (int i = 1; i <= m; ++i)
    pred.tags.body[i - 1] = argmax_row(pred.tag_logits, i) - 1;
  pred.hter = hter(pred.tags);
  return pred;
}

Tensor ApeModel::aom_logits(const Sentence& src, const Sentence& m_tilde) {
  Tape tape(false);
  Var src_mem = encode_seq(tape, wrap(src));
  Var mem = memory_encode_seq(tape, wrap(m_tilde), src_mem);
  Var logits = head(tape, mem, "pe");
  Tensor out({static_cast<int>(m_tilde.size()), cfg_.vocab_size});
  for (int i = 0; i < out.rows(); ++i)
    for (int c = 0; c < cfg_.vocab_size; ++c)
      out.at(i, c) = logits->val.at(i + 1, c);  // skip the BOS row
  return out;
}

Sentence ApeModel::aom_fill(const Sentence& src, const Sentence& m_tilde) {
  Sentence out = m_tilde;
  bool any_plh =
      std::find(out.begin(), out.end(), Vocabulary::kPlh) != out.end();
  if (!any_plh) return out;
  Tensor logits = aom_logits(src, m_tilde);
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i] != Vocabulary::kPlh) continue;
    // placeholders are filled with real tokens, never control symbols
    int best = Vocabulary::kNumReserved;
    for (int c = Vocabulary::kNumReserved; c < cfg_.vocab_size; ++c)
      if (logits.at(static_cast<int>(i), c) >
          logits.at(static_cast<int>(i), best))
        best = c;
    out[i] = best;
  }
  return out;
}

Sentence ApeModel::gm_decode(const Sentence& src, const Sentence& mt,
                             int max_len, bool* truncated) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  Tape tape(false);
  Var src_mem = encode_seq(tape, wrap(src));
  Var joint_mem = memory_encode_seq(tape, wrap(mt), src_mem);
  Sentence prefix = {Vocabulary::kBos};
  Sentence out;
  bool hit_eos = false;
  int bound = std::min(max_len, cfg_.max_len - 1);
  while (static_cast<int>(out.size()) < bound) {
    Var h = decode_seq(tape, prefix, joint_mem, src_mem);
    Var logits = head(tape, h, "gm");
    int last = static_cast<int>(prefix.size()) - 1;
    Tensor row({1, cfg_.vocab_size});
    for (int c = 0; c < cfg_.vocab_size; ++c)
      row.at(0, c) = logits->val.at(last, c);
    int next = argmax_row(row, 0);
    if (next == Vocabulary::kEos) {
      hit_eos = true;
      break;
    }
    out.push_back(next);
    prefix.push_back(next);
  }
  if (truncated) *truncated = !hit_eos;
  return out;
}

Var ApeModel::masked_fill_loss(Tape& tape, const Sentence& src,
                               const Sentence& m_tilde,
                               const std::vector<int>& targets) {
  if (targets.size() != m_tilde.size())
    throw std::invalid_argument("masked_fill_loss: target length mismatch");
  Var src_mem = encode_seq(tape, wrap(src));
  Var mem = memory_encode_seq(tape, wrap(m_tilde), src_mem);
  Var logits = head(tape, mem, "pe");
  // offset by one for the BOS row; BOS and EOS rows are never supervised
  std::vector<int> full_targets(m_tilde.size() + 2, 0);
  std::vector<char> supervise(m_tilde.size() + 2, 0);
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    full_targets[i + 1] = targets[i];
    supervise[i + 1] = 1;
  }
  return tape.cross_entropy(logits, full_targets, supervise);
}

Var ApeModel::joint_qe_aom_loss(Tape& tape, const Sentence& src,
                                const Sentence& mt, const Sentence& pe,
                                int* clipped) {
  AomExample ex = build_aom_example(mt, pe, cfg_.k_max);
  if (clipped) *clipped = ex.clipped_positions;

  // QE term over [BOS] + mt; the BOS row supervises the sentinel
  Var src_mem = encode_seq(tape, wrap(src));
  Var mem = memory_encode_seq(tape, wrap(mt), src_mem);
  Var qe_logits = head(tape, mem, "qe");
  std::vector<int> tag_targets(mt.size() + 2, 0);
  std::vector<char> tag_supervise(mt.size() + 2, 0);
  tag_targets[0] = ex.clipped_tags.sentinel + 1;
  tag_supervise[0] = 1;
  for (size_t i = 0; i < mt.size(); ++i) {
    tag_targets[i + 1] = ex.clipped_tags.body[i] + 1;
    tag_supervise[i + 1] = 1;
  }
  Var qe_loss = tape.cross_entropy(qe_logits, tag_targets, tag_supervise);

  bool any_fill = false;
  for (int t : ex.targets) any_fill |= t >= 0;
  if (!any_fill) return qe_loss;  // nothing to edit: loss reduces to QE
  Var pe_loss = masked_fill_loss(tape, src, ex.skeleton, ex.targets);
  return tape.add_scalars(qe_loss, pe_loss);
}

Var ApeModel::gm_loss(Tape& tape, const Sentence& src, const Sentence& mt,
                      const Sentence& pe) {
  Var src_mem = encode_seq(tape, wrap(src));
  Var joint_mem = memory_encode_seq(tape, wrap(mt), src_mem);
  Sentence prefix;
  prefix.push_back(Vocabulary::kBos);
  prefix.insert(prefix.end(), pe.begin(), pe.end());
  Var h = decode_seq(tape, prefix, joint_mem, src_mem);
  Var logits = head(tape, h, "gm");
  std::vector<int> targets(prefix.size());
  std::vector<char> supervise(prefix.size(), 1);
  for (size_t i = 0; i < pe.size(); ++i) targets[i] = pe[i];
  targets[pe.size()] = Vocabulary::kEos;
  return tape.cross_entropy(logits, targets, supervise);
}

double ApeModel::teacher_forced_accuracy(const Sentence& src, const Sentence& mt,
                                         const Sentence& pe) {
  Tape tape(false);
  Var src_mem = encode_seq(tape, wrap(src));
  Var joint_mem = memory_encode_seq(tape, wrap(mt), src_mem);
  Sentence prefix;
  prefix.push_back(Vocabulary::kBos);
  prefix.insert(prefix.end(), pe.begin(), pe.end());
  Var h = decode_seq(tape, prefix, joint_mem, src_mem);
  Var logits = head(tape, h, "gm");
  int correct = 0;
  int total = static_cast<int>(prefix.size());
  for (int i = 0; i < total; ++i) {
    int want = i < static_cast<int>(pe.size()) ? pe[i] : Vocabulary::kEos;
    if (argmax_row(logits->val, i) == want) ++correct;
  }
  return static_cast<double>(correct) / total;
}

BatchEncoding ApeModel::encode_batch(const std::vector<Sentence>& srcs) {
  if (srcs.empty()) throw std::invalid_argument("empty batch");
  int maxlen = 0;
  for (const auto& s : srcs)
    maxlen = std::max(maxlen, static_cast<int>(s.size()) + 2);
  BatchEncoding be;
  be.out = Tensor({static_cast<int>(srcs.size()), maxlen, cfg_.d_model});
  for (size_t b = 0; b < srcs.size(); ++b) {
    Tape tape(false);
    Var mem = encode_seq(tape, wrap(srcs[b]));
    std::vector<char> mask(maxlen, 0);
    for (int t = 0; t < mem->val.rows(); ++t) {
      mask[t] = 1;
      for (int c = 0; c < cfg_.d_model; ++c)
        be.out.data[(b * maxlen + t) * cfg_.d_model + c] = mem->val.at(t, c);
    }
    be.mask.push_back(std::move(mask));
  }
  return be;
}

BatchEncoding ApeModel::memory_encode_batch(const std::vector<Sentence>& mts,
                                            const std::vector<Sentence>& srcs) {
  if (mts.size() != srcs.size() || mts.empty())
    throw std::invalid_argument("batch size mismatch");
  int maxlen = 0;
  for (const auto& s : mts)
    maxlen = std::max(maxlen, static_cast<int>(s.size()) + 2);
  BatchEncoding be;
  be.out = Tensor({static_cast<int>(mts.size()), maxlen, cfg_.d_model});
  for (size_t b = 0; b < mts.size(); ++b) {
    Tape tape(false);
    Var src_mem = encode_seq(tape, wrap(srcs[b]));
    Var mem = memory_encode_seq(tape, wrap(mts[b]), src_mem);
    std::vector<char> mask(maxlen, 0);
    for (int t = 0; t < mem->val.rows(); ++t) {
      mask[t] = 1;
      for (int c = 0; c < cfg_.d_model; ++c)
        be.out.data[(b * maxlen + t) * cfg_.d_model + c] = mem->val.at(t, c);
    }
    be.mask.push_back(std::move(mask));
  }
  return be;
}

Tensor ApeModel::decode_logits_batch(const std::vector<Sentence>& prefixes,
                                     const std::vector<Sentence>& mts,
                                     const std::vector<Sentence>& srcs,
                                     bool use_src_shortcut) {
  if (prefixes.size() != mts.size() || prefixes.size() != srcs.size() ||
      prefixes.empty())
    throw std::invalid_argument("batch size mismatch");
  int maxlen = 0;
  for (const auto& p : prefixes) {
    if (p.empty()) throw std::invalid_argument("empty prefix");
    maxlen = std::max(maxlen, static_cast<int>(p.size()));
  }
  Tensor out({static_cast<int>(prefixes.size()), maxlen, cfg_.vocab_size});
  for (size_t b = 0; b < prefixes.size(); ++b) {
    Tape tape(false);
    Var src_mem = encode_seq(tape, wrap(srcs[b]));
    Var joint_mem = memory_encode_seq(tape, wrap(mts[b]), src_mem);
    Var h = decode_seq(tape, prefixes[b], joint_mem, src_mem, use_src_shortcut);
    Var logits = head(tape, h, "gm");
    for (int t = 0; t < logits->val.rows(); ++t)
      for (int c = 0; c < cfg_.vocab_size; ++c)
        out.data[(b * maxlen + t) * cfg_.vocab_size + c] = logits->val.at(t, c);
  }
  return out;
}

}  // namespace apedit
