// Python surface for the post-editing pipeline: edit-tag algebra, metrics,
// synthetic corpora, and the model with its training/inference entry points.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "apedit/pipeline.hpp"

namespace py = pybind11;
using namespace apedit;

PYBIND11_MODULE(_apedit, m) {
  m.doc() = "hierarchical automatic post-editing pipeline";

  py::class_<Vocabulary>(m, "Vocabulary")
      .def(py::init<>())
      .def("add_token", &Vocabulary::add_token)
      .def("id_of", &Vocabulary::id_of)
      .def("token_of", &Vocabulary::token_of)
      .def("contains", &Vocabulary::contains)
      .def("encode", &Vocabulary::encode)
      .def("decode", &Vocabulary::decode)
      .def("save", &Vocabulary::save)
      .def_static("load", &Vocabulary::load)
      .def("__len__", &Vocabulary::size);

  py::class_<Triplet>(m, "Triplet")
      .def(py::init([](Sentence src, Sentence mt, Sentence pe,
                       std::optional<Sentence> ref) {
             return Triplet{std::move(src), std::move(mt), std::move(pe),
                            std::move(ref)};
           }),
           py::arg("src"), py::arg("mt"), py::arg("pe"),
           py::arg("ref") = std::nullopt)
      .def_readwrite("src", &Triplet::src)
      .def_readwrite("mt", &Triplet::mt)
      .def_readwrite("pe", &Triplet::pe)
      .def_readwrite("ref", &Triplet::ref);

  py::class_<QeTagSequence>(m, "QeTagSequence")
      .def(py::init<>())
      .def_readwrite("sentinel", &QeTagSequence::sentinel)
      .def_readwrite("body", &QeTagSequence::body)
      .def("__eq__", [](const QeTagSequence& a, const QeTagSequence& b) {
        return a == b;
      });

  py::class_<Hter>(m, "Hter")
      .def_readonly("value", &Hter::value)
      .def_readonly("edits", &Hter::edits)
      .def_readonly("predicted_length", &Hter::predicted_length);

  m.def("qe_tags", &qe_tags, py::arg("mt"), py::arg("pe"));
  m.def("plh_insert", &plh_insert, py::arg("mt"), py::arg("tags"));
  m.def("hter", &hter, py::arg("tags"));
  m.def("apply_edit_script", &apply_edit_script, py::arg("mt"),
        py::arg("tags"), py::arg("fill"));
  m.def("clip_tags", [](QeTagSequence tags, int k_max) {
    int clipped = clip_tags(tags, k_max);
    return py::make_tuple(tags, clipped);
  });

  m.def("corpus_bleu", &corpus_bleu);
  m.def("corpus_ter", &corpus_ter);
  m.def("levenshtein", &levenshtein);
  m.def("pearson", [](const std::vector<double>& x,
                      const std::vector<double>& y) { return pearson(x, y); });

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_readwrite("p_delete", &NoiseSpec::p_delete)
      .def_readwrite("p_substitute", &NoiseSpec::p_substitute)
      .def_readwrite("p_insert", &NoiseSpec::p_insert)
      .def_readwrite("p_swap", &NoiseSpec::p_swap)
      .def_readwrite("seed", &NoiseSpec::seed);

  m.def("gen_synthetic_triplets", &gen_synthetic_triplets, py::arg("n"),
        py::arg("vocab_size"), py::arg("len_min"), py::arg("len_max"),
        py::arg("noise"), py::arg("seed"), py::arg("cipher_key"));
  m.def("synthetic_vocab", &synthetic_vocab);
  m.def("cipher_encode", &cipher_encode);
  m.def("cipher_decode", &cipher_decode);
  m.def("load_triplets",
        [](const std::string& path, const Vocabulary& vocab) {
          return load_triplets(path, vocab);
        });
  m.def("save_triplets", &save_triplets);

  py::class_<Config>(m, "Config")
      .def(py::init<>())
      .def_static("load", &Config::load)
      .def("save", &Config::save)
      .def("set", &Config::set)
      .def("serialize", &Config::serialize);

  py::enum_<SourceModel>(m, "SourceModel")
      .value("AOM", SourceModel::AOM)
      .value("GM", SourceModel::GM);

  py::class_<ApeOutput>(m, "ApeOutput")
      .def_readonly("tokens", &ApeOutput::tokens)
      .def_readonly("source_model", &ApeOutput::source_model)
      .def_readonly("iterations_used", &ApeOutput::iterations_used)
      .def_readonly("truncated", &ApeOutput::truncated)
      .def_readonly("reached_fixpoint", &ApeOutput::reached_fixpoint);

  py::class_<QePrediction>(m, "QePrediction")
      .def_readonly("tags", &QePrediction::tags)
      .def_readonly("hter", &QePrediction::hter);

  py::class_<ApeModel>(m, "ApeModel")
      .def(py::init([](const Config& cfg) {
             return new ApeModel(cfg.model_config());
           }),
           py::arg("config"))
      .def("qe_forward", &ApeModel::qe_forward)
      .def("aom_fill", &ApeModel::aom_fill)
      .def("gm_decode",
           [](ApeModel& m, const Sentence& src, const Sentence& mt,
              int max_len) { return m.gm_decode(src, mt, max_len); })
      .def("teacher_forced_accuracy", &ApeModel::teacher_forced_accuracy);

  m.def("pretrain",
        [](ApeModel& model, const std::vector<Triplet>& pairs,
           const Config& cfg) {
          RunLog log;
          pretrain(model, pairs, cfg, log);
        });
  m.def("train",
        [](ApeModel& model, const std::vector<Triplet>& data,
           const std::vector<Triplet>& dev, const Config& cfg) {
          RunLog log;
          TrainStats stats = train(model, data, dev, cfg, log);
          return py::make_tuple(stats.optimizer_steps, stats.final_joint_loss,
                                stats.final_gm_loss);
        });
  m.def("infer", &infer, py::arg("model"), py::arg("src"), py::arg("mt"),
        py::arg("tau"), py::arg("refine_steps"));
  m.def("evaluate_json",
        [](ApeModel& model, const std::vector<Triplet>& test,
           const Config& cfg) {
          return eval_report_json(evaluate(model, test, cfg));
        });
  m.def("save_checkpoint", &save_checkpoint);
  m.def("load_checkpoint", [](const std::string& path) {
    Config cfg;
    auto model = load_checkpoint(path, &cfg);
    return py::make_tuple(
        py::cast(model.release(), py::return_value_policy::take_ownership),
        cfg);
  });
}
