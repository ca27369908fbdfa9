#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "rftforge/action.hpp"

using namespace rftforge;

namespace {

UiScreen screen_with(std::vector<UiElement> elements) {
  UiScreen s;
  s.id = "test";
  s.width = 1080;
  s.height = 2400;
  s.elements = std::move(elements);
  return s;
}

UiElement clickable(std::string type, std::string text, Bbox b) {
  UiElement e;
  e.type = std::move(type);
  e.text = std::move(text);
  e.bbox = b;
  e.clickable = true;
  return e;
}

std::string fuzz_payload(std::mt19937_64& rng) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 \"\\/'{}[]:,.-_+!?";
  std::string out;
  size_t len = rng() % 24;
  for (size_t i = 0; i < len; ++i) out += alphabet[rng() % alphabet.size()];
  return out;
}

Action fuzz_action(int kind_index, std::mt19937_64& rng) {
  switch (static_cast<ActionKind>(kind_index)) {
    case ActionKind::OpenApp: return Action::open_app(fuzz_payload(rng));
    case ActionKind::Click: return Action::click(static_cast<int>(rng() % 1000));
    case ActionKind::LongPress: return Action::long_press(static_cast<int>(rng() % 1000));
    case ActionKind::InputText: return Action::input_text(fuzz_payload(rng));
    case ActionKind::ScrollUp: return Action::scroll_up();
    case ActionKind::ScrollDown: return Action::scroll_down();
    case ActionKind::ScrollLeft: return Action::scroll_left();
    case ActionKind::ScrollRight: return Action::scroll_right();
    case ActionKind::NavigateHome: return Action::navigate_home();
    case ActionKind::NavigateBack: return Action::navigate_back();
    case ActionKind::Wait: return Action::wait();
  }
  return Action::wait();
}

}  // namespace

TEST_CASE("canonical serialization matches the documented examples byte for byte") {
  CHECK(serialize_action(Action::open_app("Clock")) ==
        R"({"action-type":"open-app","app-name":"Clock"})");
  CHECK(serialize_action(Action::click(1)) == R"({"action-type":"click","target-element":1})");
  CHECK(serialize_action(Action::long_press(1)) ==
        R"({"action-type":"long-press","target-element":1})");
  CHECK(serialize_action(Action::input_text("Hello World")) ==
        R"({"action-type":"input-text","text":"Hello World"})");
  CHECK(serialize_action(Action::scroll_up()) == R"({"action-type":"scroll-up"})");
  CHECK(serialize_action(Action::scroll_down()) == R"({"action-type":"scroll-down"})");
  CHECK(serialize_action(Action::scroll_left()) == R"({"action-type":"scroll-left"})");
  CHECK(serialize_action(Action::scroll_right()) == R"({"action-type":"scroll-right"})");
  CHECK(serialize_action(Action::navigate_home()) == R"({"action-type":"navigate-home"})");
  CHECK(serialize_action(Action::navigate_back()) == R"({"action-type":"navigate-back"})");
  CHECK(serialize_action(Action::wait()) == R"({"action-type":"wait"})");
}

TEST_CASE("parsing the documented examples") {
  Action a = parse_action(R"({"action-type":"open-app","app-name":"Clock"})");
  CHECK(a == Action::open_app("Clock"));
  CHECK(parse_action(R"({"action-type":"wait"})") == Action::wait());
  CHECK(parse_action(R"({"action-type":"click","target-element":3})") == Action::click(3));
}

TEST_CASE("parse errors are classified") {
  CHECK_THROWS_AS(parse_action(R"({"action-type":"click"})"), MissingField);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"open-app"})"), MissingField);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"input-text"})"), MissingField);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"fly-away"})"), UnknownActionType);
  CHECK_THROWS_AS(parse_action("not json at all"), MalformedAction);
  CHECK_THROWS_AS(parse_action(R"(["action-type","wait"])"), MalformedAction);
  CHECK_THROWS_AS(parse_action(R"({"kind":"wait"})"), MalformedAction);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"wait","extra":1})"), MalformedAction);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"click","target-element":-2})"), MalformedAction);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"click","target-element":"1"})"),
                  MalformedAction);
  CHECK_THROWS_AS(parse_action(R"({"action-type":"wait"} trailing)"), MalformedAction);
}

TEST_CASE("round trip over all variants with fuzzed payloads") {
  std::mt19937_64 rng(7);
  for (int kind = 0; kind < kActionKindCount; ++kind) {
    for (int rep = 0; rep < 1000; ++rep) {
      Action a = fuzz_action(kind, rng);
      std::string s = serialize_action(a);
      CHECK(parse_action(s) == a);
      CHECK(serialize_action(parse_action(s)) == s);
    }
  }
}

TEST_CASE("grounding resolves click targets to integer centers") {
  auto s = screen_with({clickable("button", "A", {0, 0, 50, 50}),
                        clickable("button", "B", {100, 200, 300, 260})});
  GroundedAction g = ground_action(Action::click(1), s);
  CHECK(g.x == 200);
  CHECK(g.y == 230);

  GroundedAction w = ground_action(Action::wait(), s);
  CHECK(w.kind == ActionKind::Wait);
  CHECK(w.x == -1);

  CHECK_THROWS_AS(ground_action(Action::click(2), s), IndexOutOfRange);
  CHECK_THROWS_AS(ground_action(Action::long_press(99), s), IndexOutOfRange);
}

TEST_CASE("grounded centers always land inside the target box") {
  // independent containment check against randomly generated layouts
  auto inside = [](int x, int y, const Bbox& b) {
    return x >= b.left && x < b.right && y >= b.top && y < b.bottom;
  };
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 1000; ++rep) {
    std::vector<UiElement> elements;
    int n = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      int left = static_cast<int>(rng() % 900);
      int top = static_cast<int>(rng() % 2200);
      int w = 1 + static_cast<int>(rng() % 170);
      int h = 1 + static_cast<int>(rng() % 150);
      elements.push_back(clickable("button", "x", {left, top, left + w, top + h}));
    }
    auto s = screen_with(elements);
    int idx = static_cast<int>(rng() % static_cast<uint64_t>(n));
    GroundedAction g = ground_action(Action::long_press(idx), s);
    CHECK(inside(g.x, g.y, s.clickable(idx)->bbox));
  }
}

TEST_CASE("history entries condense click targets and never keep indices") {
  auto s = screen_with({clickable("text-field", "Name", {0, 0, 10, 10}),
                        clickable("button", "Save", {0, 20, 10, 30})});

  HistoryEntry click = to_history_entry(Action::click(1), s);
  CHECK(click.action_type == "click");
  CHECK(click.target_descriptor == "button 'Save'");
  CHECK(!click.text_payload);

  HistoryEntry text = to_history_entry(Action::input_text("Sofija"), s);
  CHECK(text.action_type == "input-text");
  CHECK(!text.target_descriptor);
  CHECK(text.text_payload == "Sofija");

  HistoryEntry back = to_history_entry(Action::navigate_back(), s);
  CHECK(back.action_type == "navigate-back");
  CHECK(!back.target_descriptor);
  CHECK(!back.text_payload);

  HistoryEntry open = to_history_entry(Action::open_app("Contacts"), s);
  CHECK(open.text_payload == "Contacts");
  CHECK(render_history_entry(open) == "open-app Contacts");
  CHECK(render_history_entry(click) == "click button 'Save'");

  CHECK_THROWS_AS(to_history_entry(Action::click(5), s), IndexOutOfRange);
}

TEST_CASE("descriptors are present exactly for click and long-press") {
  auto s = screen_with({clickable("button", "Go", {0, 0, 10, 10})});
  std::mt19937_64 rng(3);
  for (int kind = 0; kind < kActionKindCount; ++kind) {
    Action a = fuzz_action(kind, rng);
    if (a.has_target()) a.target = 0;
    HistoryEntry e = to_history_entry(a, s);
    CHECK(e.target_descriptor.has_value() == a.has_target());
  }
}
