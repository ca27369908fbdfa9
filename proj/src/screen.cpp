#include "rftforge/screen.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "rftforge/rng.hpp"

namespace rftforge {

int UiScreen::clickable_count() const {
  int n = 0;
  for (const auto& e : elements) {
    if (e.clickable) ++n;
  }
  return n;
}

const UiElement* UiScreen::clickable(int index) const {
  if (index < 0) return nullptr;
  int n = 0;
  for (const auto& e : elements) {
    if (!e.clickable) continue;
    if (n == index) return &e;
    ++n;
  }
  return nullptr;
}

std::vector<std::pair<int, Bbox>> annotate(const UiScreen& screen) {
  std::vector<std::pair<int, Bbox>> labels;
  int index = 0;
  for (const auto& e : screen.elements) {
    if (!e.clickable) continue;
    labels.emplace_back(index++, e.bbox);
  }
  return labels;
}

namespace {

void hash_int(uint64_t& h, long long v) {
  h = fnv1a64(std::to_string(v), h);
  h = fnv1a64("\x1f", h);
}

void hash_str(uint64_t& h, const std::string& s) {
  h = fnv1a64(s, h);
  h = fnv1a64("\x1f", h);
}

}  // namespace

uint64_t observation_fingerprint(const UiScreen& screen) {
  uint64_t h = 0xcbf29ce484222325ULL;
  hash_str(h, screen.id);
  hash_int(h, screen.width);
  hash_int(h, screen.height);
  for (const auto& e : screen.elements) {
    hash_str(h, e.type);
    hash_str(h, e.text);
    hash_int(h, e.bbox.left);
    hash_int(h, e.bbox.top);
    hash_int(h, e.bbox.right);
    hash_int(h, e.bbox.bottom);
    hash_int(h, e.clickable ? 1 : 0);
    hash_int(h, e.focused ? 1 : 0);
    h = fnv1a64("\x1e", h);
  }
  return h;
}

namespace {

constexpr int kMaxRenderSide = 4096;
constexpr int kBorder = 2;
constexpr int kLabelW = 8;
constexpr int kLabelH = 6;

using Rgb = std::array<unsigned char, 3>;
constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kBlack{0, 0, 0};
constexpr Rgb kRed{255, 0, 0};

}  // namespace

std::string render_ppm(const UiScreen& screen,
                       const std::vector<std::pair<int, Bbox>>& labels) {
  if (screen.width > kMaxRenderSide || screen.height > kMaxRenderSide ||
      screen.width <= 0 || screen.height <= 0) {
    throw ScreenTooLarge("render_ppm: screen dimensions " + std::to_string(screen.width) +
                         "x" + std::to_string(screen.height) + " unsupported");
  }
  const int w = screen.width;
  const int h = screen.height;
  std::vector<Rgb> pix(static_cast<size_t>(w) * h, kWhite);
  auto put = [&](int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    pix[static_cast<size_t>(y) * w + x] = c;
  };

  for (const auto& e : screen.elements) {
    const Bbox& b = e.bbox;
    for (int y = b.top; y < b.bottom; ++y) {
      for (int x = b.left; x < b.right; ++x) {
        bool edge = x < b.left + kBorder || x >= b.right - kBorder ||
                    y < b.top + kBorder || y >= b.bottom - kBorder;
        if (edge) put(x, y, kBlack);
      }
    }
  }
  for (const auto& [index, b] : labels) {
    (void)index;
    for (int y = b.top; y < b.top + kLabelH; ++y) {
      for (int x = b.left; x < b.left + kLabelW; ++x) {
        put(x, y, kRed);
      }
    }
  }

  std::string out;
  out.reserve(static_cast<size_t>(w) * h * 12 + 32);
  out += "P3\n";
  out += std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb& c = pix[static_cast<size_t>(y) * w + x];
      if (x > 0) out += ' ';
      out += std::to_string(c[0]);
      out += ' ';
      out += std::to_string(c[1]);
      out += ' ';
      out += std::to_string(c[2]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace rftforge
