#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rftforge/action.hpp"
#include "rftforge/screen.hpp"

namespace rftforge {

// Action-history window fed to the policy.
inline constexpr int kHistoryCap = 5;

// Model input assembled from the goal, the recent-action window and the
// annotated screen.
struct AnnotatedObservation {
  UiScreen screen;
  std::vector<std::pair<int, Bbox>> labels;
  std::string goal;
  std::vector<HistoryEntry> history;  // oldest first, capped at kHistoryCap
};

// Keeps the most recent kHistoryCap entries, oldest first.
std::vector<HistoryEntry> truncate_history(const std::vector<HistoryEntry>& history);

AnnotatedObservation assemble_observation(std::string goal,
                                          const std::vector<HistoryEntry>& history,
                                          UiScreen screen);

// Deterministic three-section textual input: goal, numbered previous actions
// (the literal "none" when empty), then one line per clickable element.
std::string build_prompt(const std::string& goal,
                         const std::vector<HistoryEntry>& history,
                         const UiScreen& screen);

}  // namespace rftforge
