#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rftforge/action.hpp"
#include "rftforge/env.hpp"
#include "rftforge/screen.hpp"

namespace rftforge {

// Decision contract. decide() must always return some action; temperature 0
// means deterministic argmax with ties broken by the lexicographically
// smallest serialized action.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const std::string& goal, const UiScreen& screen,
                        const std::vector<HistoryEntry>& history,
                        double temperature) const = 0;
};

// One supervised datapoint: context, target action, positive weight.
struct TrainingExample {
  std::string goal;
  UiScreen screen;
  std::vector<HistoryEntry> history;  // at most kHistoryCap entries
  Action action;
  double weight = 1.0;
};

// Goal text with quoted parameter spans abstracted into numbered slots.
struct GoalView {
  std::string signature;
  std::vector<std::string> params;
};

GoalView parse_goal(const std::string& goal);

// Replaces whole-token occurrences of parameter values with slot markers,
// longest value first. concretize_text is the inverse for known params.
std::string abstract_text(const std::string& text, const std::vector<std::string>& params);
std::optional<std::string> concretize_text(const std::string& abstracted,
                                           const std::vector<std::string>& params);

// Layout-insensitive screen key: id plus per-element (type, clickable,
// focused, parameter-abstracted text). Bounding boxes do not participate.
uint64_t screen_class(const UiScreen& screen, const std::vector<std::string>& params);

std::string context_key(const GoalView& goal, const UiScreen& screen);

// Exploration mixture used whenever a context is unknown: a click on each
// clickable element, scroll-down and navigate-back.
std::vector<Action> fallback_candidates(const UiScreen& screen);

// Uniform over the exploration mixture.
class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(uint64_t seed);
  Action decide(const std::string& goal, const UiScreen& screen,
                const std::vector<HistoryEntry>& history,
                double temperature) const override;

 private:
  mutable std::mt19937_64 rng_;
  mutable std::mutex mu_;
};

// Scripted per-template solver; matches the goal against the registry and
// delegates to the template's solver. Unmatched goals fall back to the
// exploration mixture.
class OraclePolicy : public Policy {
 public:
  OraclePolicy() = default;
  Action decide(const std::string& goal, const UiScreen& screen,
                const std::vector<HistoryEntry>& history,
                double temperature) const override;
};

// Count-table policy over (goal signature, screen class) contexts. Actions
// are stored abstractly: click targets by element descriptor, text payloads
// by goal-parameter slot where they match. Sampling is softmax over
// log-counts, i.e. probabilities proportional to count^(1/temperature).
class TabularPolicy : public Policy {
 public:
  TabularPolicy() : TabularPolicy(0) {}
  explicit TabularPolicy(uint64_t rng_seed);
  TabularPolicy(const TabularPolicy& other);
  TabularPolicy& operator=(const TabularPolicy& other);

  Action decide(const std::string& goal, const UiScreen& screen,
                const std::vector<HistoryEntry>& history,
                double temperature) const override;

  void reseed(uint64_t seed);

  // Deep, independent copy.
  TabularPolicy clone() const;

  size_t context_count() const { return counts_.size(); }
  double total_mass() const;
  bool empty() const { return counts_.empty(); }

  // Canonical newline-delimited text form, records sorted lexicographically.
  std::string serialize() const;
  void save(const std::string& path) const;
  static TabularPolicy load(const std::string& path);
  static TabularPolicy deserialize(const std::string& text);

  friend TabularPolicy train(const TabularPolicy& model,
                             const std::vector<TrainingExample>& examples,
                             int epochs, int batch_size);

 private:
  std::map<std::string, std::map<std::string, double>> counts_;
  mutable std::mt19937_64 rng_;
  mutable std::mutex mu_;
};

inline constexpr int kDefaultEpochs = 3;
inline constexpr int kDefaultBatchSize = 64;

// Weighted maximum-likelihood update: returns a new model whose counts grow
// by weight x epochs per occurrence. For this family that exactly maximizes
// the weighted log-likelihood of the example set.
TabularPolicy train(const TabularPolicy& model,
                    const std::vector<TrainingExample>& examples,
                    int epochs = kDefaultEpochs, int batch_size = kDefaultBatchSize);

}  // namespace rftforge
