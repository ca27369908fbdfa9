#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "rftforge/env.hpp"
#include "rftforge/policy.hpp"

namespace rftforge {

// Completed episode as reported by a worker.
struct EpisodeReport {
  std::string ticket_id;
  Trajectory trajectory;
  double wall_time_s = 0.0;
  std::vector<double> inference_times_s;  // one entry per step
};

// Append-only log of successful episode reports with per-template counters.
// Zero-return trajectories are acknowledged but never persisted.
class TrajectoryStore {
 public:
  // Returns true when the report was kept (return 1).
  bool append(const EpisodeReport& report);

  void set_iteration(int iteration);

  size_t size() const;
  int success_count(const std::string& template_id) const;
  std::map<std::string, int> success_counts() const;
  std::vector<Trajectory> trajectories() const;
  std::vector<int> provenance() const;  // iteration index per trajectory
  std::vector<Trajectory> trajectories_since(size_t offset) const;
  std::vector<EpisodeReport> reports_since(size_t offset) const;

 private:
  mutable std::mutex mu_;
  std::vector<EpisodeReport> reports_;
  std::vector<int> provenance_;
  std::map<std::string, int> counts_;
  int iteration_ = 0;
};

// Successful trajectories only, with the iteration that produced each.
struct OnlineDataset {
  std::vector<Trajectory> trajectories;
  std::vector<int> provenance;

  size_t size() const { return trajectories.size(); }
};

struct OfflineEpisode {
  std::string template_id;
  uint64_t seed = 0;
  std::string goal;
  std::vector<StepRecord> steps;
};

struct OfflineDataset {
  std::string split;  // train | idd | task-unseen | cat-unseen | app-unseen
  std::vector<OfflineEpisode> episodes;

  size_t datapoint_count() const;
};

// Seed intervals used per split; hold-out splits never share a
// (template, interval) pair with train.
struct SeedRange {
  uint64_t lo = 0;
  uint64_t hi = 0;  // exclusive
};

struct OfflineBundle {
  OfflineDataset train;
  OfflineDataset idd;
  OfflineDataset task_unseen;
  OfflineDataset cat_unseen;
  OfflineDataset app_unseen;

  const OfflineDataset& split(const std::string& name) const;
  std::vector<const OfflineDataset*> all() const;
  // Sorted "split <tab> template <tab> seed-lo..seed-hi" lines.
  std::string manifest() const;
};

enum class RebalanceRule { MedianOfQualified, EqualToTau };

struct CollectConfig {
  int tau = 10;
  int initial_repeats = 5;
  int rounds = 3;
  double temperature = 1.5;
  RebalanceRule rule = RebalanceRule::MedianOfQualified;
};

// Removes the earlier step of every adjacent pair whose observations share a
// fingerprint, until no such pair remains. The final step is always kept.
Trajectory filter_duplicates(const Trajectory& trajectory);

// Oversamples templates solved fewer than the target number of times by
// duplicating their trajectories round-robin. The target is the median
// success count among templates with at least tau successes, or tau when no
// template qualifies.
OnlineDataset rebalance(const std::vector<Trajectory>& successes,
                        const std::vector<int>& provenance,
                        const CollectConfig& cfg);
OnlineDataset rebalance(const TrajectoryStore& store, const CollectConfig& cfg);

// Synthetic demonstration corpus. Train episodes replay the scripted solver
// with human-like noise (a wait after every open-app, an occasional redundant
// scroll); hold-out splits are generated noise-free from held-out templates
// or held-out seed ranges.
OfflineBundle synth_offline(uint64_t seed, int episodes_per_template);

std::vector<TrainingExample> to_examples(const OnlineDataset& dataset);
std::vector<TrainingExample> to_examples(const OfflineDataset& dataset);

// Trajectory log and dataset persistence (one JSON object per line).
void append_trajectory_log(const std::string& path, const EpisodeReport& report);
std::vector<Trajectory> load_trajectory_log(const std::string& path);
void save_bundle(const OfflineBundle& bundle, const std::string& dir);
OfflineBundle load_bundle(const std::string& dir);

}  // namespace rftforge
