#pragma once

#include <array>
#include <string>
#include <string_view>

namespace wmbench {

// Fixed object vocabulary; class ids are 1-based indices into kClassNames.
inline constexpr std::array<std::string_view, 12> kClassNames = {
    "chair", "table", "sofa", "bed", "plant", "tv", "lamp", "shelf", "cabinet", "toilet", "sink", "fridge"};

inline constexpr std::array<std::string_view, 8> kColorNames = {"red",   "green", "blue",  "yellow",
                                                               "white", "black", "brown", "gray"};

inline std::string class_name(int class_id) {
  if (class_id >= 1 && class_id <= static_cast<int>(kClassNames.size())) {
    return std::string(kClassNames[static_cast<std::size_t>(class_id - 1)]);
  }
  return class_id == 0 ? "background" : "class" + std::to_string(class_id);
}

/// Colour word of a generated instance name ("<color> <class>"); empty if absent.
inline std::string color_of(std::string_view display_name) {
  const auto sp = display_name.find(' ');
  if (sp == std::string_view::npos) return {};
  return std::string(display_name.substr(0, sp));
}

}  // namespace wmbench
