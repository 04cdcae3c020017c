#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "apedit/config.hpp"
#include "apedit/imitation.hpp"
#include "apedit/metrics.hpp"
#include "apedit/model.hpp"

namespace apedit {

// Append-only machine-readable run log: newline-delimited JSON records.
class RunLog {
 public:
  RunLog() = default;  // discard records
  explicit RunLog(const std::string& path);
  void record(const std::string& json_object);
  const std::vector<std::string>& records() const { return records_; }

 private:
  std::string path_;
  std::vector<std::string> records_;
};

struct RoutingStats {
  int total = 0;
  int to_gm = 0;
  int to_aom = 0;
  long long aom_iterations = 0;
  int aom_fixpoint_by_s = 0;  // AOM sentences that converged within S
  int gm_truncated = 0;
};

struct EvalResult {
  EvalReport report;
  EvalReport baseline;  // do-nothing: mt scored against pe
  RoutingStats routing;
  std::vector<ApeOutput> outputs;
};

void save_checkpoint(const std::string& path, const ApeModel& model,
                     const Config& cfg);
// Builds the model from the config stored in the checkpoint.
std::unique_ptr<ApeModel> load_checkpoint(const std::string& path, Config* cfg);

// Conditional masked-LM pretraining of encoder + memory encoder + PE head;
// the generative decoder is untouched.
void pretrain(ApeModel& model, const std::vector<Triplet>& pairs,
              const Config& cfg, RunLog& log);

// Alg.-style joint training: expand each sample four ways, then one
// optimizer step on the QE+AOM loss and one on the GM loss per expanded
// triplet.
struct TrainStats {
  long long optimizer_steps = 0;
  long long clipped_tags = 0;
  double final_joint_loss = 0.0;
  double final_gm_loss = 0.0;
};

TrainStats train(ApeModel& model, const std::vector<Triplet>& data,
                 const std::vector<Triplet>& dev, const Config& cfg,
                 RunLog& log, const std::string& checkpoint_path = "");

// Hierarchical inference: QE routes to the generative rewriter once, at the
// first iteration, otherwise iterates the atomic editor to a fixpoint.
ApeOutput infer(ApeModel& model, const Sentence& src, const Sentence& mt,
                double tau, int refine_steps);

EvalResult evaluate(ApeModel& model, const std::vector<Triplet>& test,
                    const Config& cfg);

struct TauSweepRow {
  double tau = 0.0;
  double dev_ter = 0.0;
  double gm_fraction = 0.0;
};

struct TauSweepResult {
  double best_tau = 0.0;
  std::vector<TauSweepRow> table;
};

TauSweepResult sweep_tau(ApeModel& model, const std::vector<Triplet>& dev,
                         const Config& cfg, const std::vector<double>& grid);

std::string eval_report_json(const EvalResult& result);

}  // namespace apedit
