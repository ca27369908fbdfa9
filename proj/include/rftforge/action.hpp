#pragma once

#include <optional>
#include <string>

#include "rftforge/screen.hpp"

namespace rftforge {

enum class ActionKind {
  OpenApp,
  Click,
  LongPress,
  InputText,
  ScrollUp,
  ScrollDown,
  ScrollLeft,
  ScrollRight,
  NavigateHome,
  NavigateBack,
  Wait,
};

inline constexpr int kActionKindCount = 11;

const char* to_string(ActionKind kind);

// One app-control action. `target` is an index into the current screen's
// clickable-element list and is only meaningful at execution time.
struct Action {
  ActionKind kind = ActionKind::Wait;
  std::string app_name;  // open-app
  int target = -1;       // click / long-press
  std::string text;      // input-text

  static Action open_app(std::string name);
  static Action click(int index);
  static Action long_press(int index);
  static Action input_text(std::string text);
  static Action scroll_up();
  static Action scroll_down();
  static Action scroll_left();
  static Action scroll_right();
  static Action navigate_home();
  static Action navigate_back();
  static Action wait();

  bool has_target() const {
    return kind == ActionKind::Click || kind == ActionKind::LongPress;
  }

  bool operator==(const Action&) const = default;
};

// Action with click/long-press targets resolved to pixel coordinates.
struct GroundedAction {
  ActionKind kind = ActionKind::Wait;
  std::string app_name;
  int x = -1;
  int y = -1;
  std::string text;

  bool operator==(const GroundedAction&) const = default;
};

// Condensed record of a past action. Element indices are dropped; click and
// long-press keep a textual descriptor of their target instead.
struct HistoryEntry {
  std::string action_type;
  std::optional<std::string> target_descriptor;
  std::optional<std::string> text_payload;

  bool operator==(const HistoryEntry&) const = default;
};

// Canonical single-line serialization; field order is fixed and no
// insignificant whitespace is emitted, so byte equality is meaningful.
std::string serialize_action(const Action& action);

// Strict inverse of serialize_action. Throws MalformedAction,
// UnknownActionType or MissingField.
Action parse_action(const std::string& line);

// Resolve click/long-press targets to the integer center of the element's
// bounding box (floor of the midpoint). Other variants pass through.
GroundedAction ground_action(const Action& action, const UiScreen& screen);

HistoryEntry to_history_entry(const Action& action, const UiScreen& screen);

// "click button 'Save'", "input-text Sofija", "wait" ...
std::string render_history_entry(const HistoryEntry& entry);

}  // namespace rftforge
