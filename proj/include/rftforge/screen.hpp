#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rftforge/errors.hpp"

namespace rftforge {

// Pixel rectangle. A box covers the half-open pixel ranges [left, right) x [top, bottom).
struct Bbox {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  bool contains(int x, int y) const {
    return x >= left && x < right && y >= top && y < bottom;
  }
  bool operator==(const Bbox&) const = default;
};

struct UiElement {
  std::string type;  // button, text-field, list-item, toggle, tab, icon, label
  std::string text;
  Bbox bbox;
  bool clickable = false;
  bool focused = false;

  bool operator==(const UiElement&) const = default;
};

// A structured screen. Clickable elements are indexed by their order of
// appearance in `elements`, starting at 0.
struct UiScreen {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<UiElement> elements;

  int clickable_count() const;
  // Element for a clickable index, or nullptr when the index is out of range.
  const UiElement* clickable(int index) const;

  bool operator==(const UiScreen&) const = default;
};

// One numbered label per clickable element, indices contiguous from 0.
std::vector<std::pair<int, Bbox>> annotate(const UiScreen& screen);

// Stable structural hash of a screen. Equal screens always collide; label
// numbering is derived data and does not participate.
uint64_t observation_fingerprint(const UiScreen& screen);

// Plain-text P3 pixmap: white canvas, 2px black element borders, red label
// markers at each clickable element's top-left corner. Deterministic bytes.
std::string render_ppm(const UiScreen& screen,
                       const std::vector<std::pair<int, Bbox>>& labels);

}  // namespace rftforge
