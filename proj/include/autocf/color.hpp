#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace autocf {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  auto operator<=>(const Rgb&) const = default;
};

/// "#RRGGBB", upper-case hex digits.
std::string to_hex(Rgb c);
/// Accepts "#RRGGBB" or "RRGGBB" (any case).
std::optional<Rgb> parse_hex(std::string_view text);

struct Hsl {
  double h = 0;  // degrees in [0, 360)
  double s = 0;  // [0, 1]
  double l = 0;  // [0, 1]
};

Hsl to_hsl(Rgb c);
Rgb from_hsl(Hsl c);

struct NamedColor {
  std::string_view name;
  Rgb rgb;
};

/// The 147 extended CSS color keywords, alphabetical. Aliases (gray/grey,
/// aqua/cyan, fuchsia/magenta, ...) are separate entries sharing an RGB.
std::span<const NamedColor> css_colors();

/// Closest CSS keyword by Euclidean RGB distance. Among aliases the
/// alphabetically first name is returned.
const NamedColor& nearest_web_color(Rgb c);

std::optional<Rgb> css_color_by_name(std::string_view name);

}  // namespace autocf
