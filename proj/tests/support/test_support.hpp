#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "wmbench/rng.hpp"
#include "wmbench/scene.hpp"

namespace wmbench::testing {

/// Builds a scene from glyph rows plus INST lines, through the real parser.
inline GridScene scene_from_rows(const std::vector<std::string>& rows, const std::vector<std::string>& inst = {},
                                 double cell = 0.1) {
  std::string text = "GRID " + std::to_string(rows.front().size()) + " " + std::to_string(rows.size()) + " " +
                     std::to_string(cell) + "\n";
  for (const auto& r : rows) text += r + "\n";
  for (const auto& i : inst) text += i + "\n";
  return parse_scene_file(text);
}

/// Walled rectangle, `w` x `h` cells including the border.
inline GridScene open_room(int w, int h) {
  GridScene s(w, h, 0.1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) s.set_wall({x, y});
  s.finalize();
  return s;
}

/// Walled rectangle with independent random interior walls and, optionally,
/// a few single-cell instances.
inline GridScene random_scene(std::uint64_t seed, int w, int h, double wall_p, int instances = 0) {
  Rng rng(seed);
  GridScene s(w, h, 0.1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
      if (border || uniform01(rng) < wall_p) s.set_wall({x, y});
    }
  for (int k = 1; k <= instances; ++k) {
    const Cell c{uniform_int(rng, 1, w - 2), uniform_int(rng, 1, h - 2)};
    if (s.instance_at(c) != 0) continue;
    s.set_instance_cell(c, k, 1 + (k % 12));
    s.add_instance(k, InstanceInfo{1 + (k % 12), "obj" + std::to_string(k), c, static_cast<char>('a' + k - 1)});
  }
  s.finalize();
  return s;
}

inline Cell random_free_cell(const GridScene& s, Rng& rng) {
  const auto free = s.free_cells();
  return free[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(free.size()) - 1))];
}

inline Pose random_pose(const GridScene& s, Rng& rng) {
  return s.center_of(random_free_cell(s, rng), Heading(uniform_int(rng, 0, kHeadingCount - 1)));
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "wmbench") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = {}) const { return (child.empty() ? path_ : path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace wmbench::testing
