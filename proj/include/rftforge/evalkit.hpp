#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rftforge/action.hpp"
#include "rftforge/datapipe.hpp"
#include "rftforge/env.hpp"
#include "rftforge/policy.hpp"

namespace rftforge {

// How a predicted click may match the ground-truth element: by its center
// falling inside the truth element's box (default) or by full containment of
// its box.
enum class ClickMatchRule { PredictedCenterInTruth, PredictedBoxInTruth };

// Relaxed action comparison: non-target actions match on variant and payload
// (input-text compared after trimming trailing whitespace); click/long-press
// match when the variants agree and the predicted element satisfies the
// click rule against the ground-truth element.
bool action_match(const Action& predicted, const Action& truth, const UiScreen& screen,
                  ClickMatchRule rule = ClickMatchRule::PredictedCenterInTruth);

struct SplitAccuracy {
  int datapoints = 0;
  int matches = 0;
  double accuracy = 0.0;
};

struct OfflineEvalReport {
  std::map<std::string, SplitAccuracy> splits;
  // confusion[truth-kind][predicted-kind]
  std::map<std::string, std::map<std::string, int>> confusion;

  double overall() const;
  std::string to_text() const;
  std::string to_kv() const;  // machine-readable sorted key=value lines
};

OfflineEvalReport eval_offline(const Policy& policy, const OfflineDataset& split,
                               ClickMatchRule rule = ClickMatchRule::PredictedCenterInTruth);
OfflineEvalReport eval_offline(const Policy& policy, const OfflineBundle& bundle,
                               ClickMatchRule rule = ClickMatchRule::PredictedCenterInTruth);

struct OnlineEvalReport {
  std::map<Difficulty, int> episodes;
  std::map<Difficulty, int> successes;
  std::vector<uint64_t> seeds;
  double mean_infer_s = 0.0;

  double rate(Difficulty d) const;
  // Pooled successes/episodes over all difficulties, not a mean of rates.
  double overall() const;
  std::string to_text() const;
  std::string to_kv() const;
};

// One greedy episode per registry template per seed.
OnlineEvalReport eval_online(const Policy& policy, const std::vector<uint64_t>& seeds,
                             std::optional<Difficulty> difficulty_filter = std::nullopt);

inline constexpr int kDefaultEvalSeeds = 3;

struct DifficultyCounts {
  int easy = 0;
  int medium = 0;
  int hard = 0;

  int total() const { return easy + medium + hard; }
};

// "38 (46.3%)  28 (34.1%)  16 (19.5%)  82"-style row.
std::string format_difficulty_row(const std::string& label, const DifficultyCounts& counts);

DifficultyCounts registry_difficulty_counts();

// Counts and percentages per difficulty for the shipped registry.
std::string difficulty_table();

}  // namespace rftforge
