#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rftforge/datapipe.hpp"
#include "rftforge/evalkit.hpp"
#include "rftforge/policy.hpp"

namespace rftforge {

enum class Variant { Full, RftOnly, Awo };

const char* to_string(Variant v);

struct PipelineConfig {
  Variant variant = Variant::Full;
  int iterations = 3;
  CollectConfig collect;
  int epochs = kDefaultEpochs;
  int batch_size = kDefaultBatchSize;
  int offline_episodes_per_template = 20;
  int eval_seed_count = kDefaultEvalSeeds;
};

struct StageEval {
  std::string stage;
  double online_overall = 0.0;
  double offline_overall = 0.0;
  std::map<std::string, double> offline_splits;
  std::map<Difficulty, double> online_difficulty;
  int d_on_size = 0;  // rebalanced dataset size used to reach this stage
};

// Everything a run produces: per-stage checkpoints plus the evaluation
// series. Reproducible from (config, master seed); contains no wall-clock.
struct PipelineRunRecord {
  PipelineConfig config;
  uint64_t master_seed = 0;
  std::vector<StageEval> stages;  // base, rft_1..rft_N, then final/awo
  std::map<std::string, TabularPolicy> checkpoints;
  std::map<std::string, int> collected_per_template;

  const TabularPolicy& product() const;  // the variant's output model
  std::string to_text() const;           // sorted-key text report
};

// Maximum-likelihood fit of a fresh copy of `base` on the dataset.
TabularPolicy sft(const TabularPolicy& base, const std::vector<TrainingExample>& examples,
                  int epochs = kDefaultEpochs, int batch_size = kDefaultBatchSize);

// Runs the collection rounds against an in-process broker: every template is
// enqueued initial_repeats times in round zero; later rounds re-enqueue only
// templates still under tau successes. Returns the newly stored trajectories.
std::vector<Trajectory> collect(const Policy& policy, const CollectConfig& cfg,
                                TrajectoryStore& store, uint64_t seed_base);

// One improvement step: duplicate-filter every stored trajectory, rebalance,
// then fit the previous model on the result.
TabularPolicy rft_iteration(const TabularPolicy& model, const TrajectoryStore& store,
                            const CollectConfig& cfg, int epochs = kDefaultEpochs,
                            int batch_size = kDefaultBatchSize);

// Final fit on the base checkpoint (not the iterated chain) over all data
// collected during the run.
TabularPolicy final_sft(const TabularPolicy& base, const TrajectoryStore& store,
                        const CollectConfig& cfg, int epochs = kDefaultEpochs,
                        int batch_size = kDefaultBatchSize);

PipelineRunRecord run_pipeline(const PipelineConfig& config, uint64_t master_seed);

}  // namespace rftforge
