#include "rftforge/prompt.hpp"

#include <utility>

namespace rftforge {

std::vector<HistoryEntry> truncate_history(const std::vector<HistoryEntry>& history) {
  if (history.size() <= static_cast<size_t>(kHistoryCap)) return history;
  return {history.end() - kHistoryCap, history.end()};
}

AnnotatedObservation assemble_observation(std::string goal,
                                          const std::vector<HistoryEntry>& history,
                                          UiScreen screen) {
  AnnotatedObservation obs;
  obs.labels = annotate(screen);
  obs.screen = std::move(screen);
  obs.goal = std::move(goal);
  obs.history = truncate_history(history);
  return obs;
}

std::string build_prompt(const std::string& goal,
                         const std::vector<HistoryEntry>& history,
                         const UiScreen& screen) {
  const auto window = truncate_history(history);
  std::string out;
  out += "Goal: " + goal + "\n";
  if (window.empty()) {
    out += "Previous actions: none\n";
  } else {
    out += "Previous actions:\n";
    for (size_t i = 0; i < window.size(); ++i) {
      out += "Step " + std::to_string(i + 1) + ": " + render_history_entry(window[i]) + "\n";
    }
  }
  out += "Screen:\n";
  int index = 0;
  for (const auto& e : screen.elements) {
    if (!e.clickable) continue;
    out += std::to_string(index++) + ". " + e.type + " '" + e.text + "'\n";
  }
  return out;
}

}  // namespace rftforge
