#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wmbench/rng.hpp"
#include "wmbench/scene.hpp"
#include "wmbench/trajectory.hpp"

namespace wmbench {

inline constexpr double kNoPath = std::numeric_limits<double>::infinity();

struct DatagenParams {
  double rho = 4.0;      // sampled points per m^2 of free area
  double alpha = 1.7;    // leaf-score weight on mean distance
  double r_f = 3.0;      // pruning and coverage radius, meters
  double eta = 0.2;      // leaf ratio
  int floor_min = 40;    // minimum number of sampled points
  double scale = 1.0;    // length scale applied to r_f (and 1/scale^2 to rho)
  double filter_threshold = 0.55;
  bool filter = false;

  double effective_rho() const { return rho / (scale * scale); }
  double effective_rf() const { return r_f * scale; }
  void validate() const;
};

using DistanceMatrix = std::vector<std::vector<double>>;

/// s(i) = ecc(i) + alpha * mean_{j != i} D_ij, reductions restricted to finite
/// entries (same component). Isolated points score 0.
std::vector<double> leaf_scores(const DistanceMatrix& D, double alpha);

struct WaypointSet {
  std::vector<Cell> points;  // accepted waypoints, in descending score order
  DistanceMatrix D;          // geodesic meters among `points`; kNoPath across components
  std::vector<double> scores;
  int sampled = 0;           // N_wp, before pruning
  double rho = 0.0;
  double alpha = 0.0;
  double r_f = 0.0;
};

/// Pairwise geodesic distances between cells.
DistanceMatrix geodesic_matrix(const GridScene& scene, std::span<const Cell> cells);

/// Greedy radius pruning of `candidates` by descending leaf score; ties go to
/// the lower index. Returns the kept indices in acceptance order.
std::vector<std::size_t> prune_by_radius(const DistanceMatrix& D, std::span<const double> scores, double r_f);

WaypointSet sample_waypoints(const GridScene& scene, double rho, double alpha, double r_f, int floor_min, Rng& rng);

struct GenerationLog {
  std::vector<std::string> warnings;
  int resampled_starts = 0;
};

/// Waypoint-to-waypoint trajectory generation with dynamic score update.
/// Every waypoint ends within r_f (geodesic) of a recorded pose.
std::vector<TrajectoryRecord> generate_trajectories(const GridScene& scene, const WaypointSet& ws, double eta, Rng& rng,
                                                    const std::string& scene_ref = {}, std::uint64_t seed = 0,
                                                    GenerationLog* log = nullptr);

/// Full pipeline for one scene: sampling, generation, optional filtering.
std::vector<TrajectoryRecord> generate_dataset(const GridScene& scene, const std::string& scene_ref,
                                               const DatagenParams& params, std::uint64_t seed,
                                               GenerationLog* log = nullptr);

/// Mean overlap_ratio between consecutive frames' front views; 1 for a
/// single-frame record.
double mean_consecutive_overlap(const TrajectoryRecord& r, double cell_size);
std::vector<TrajectoryRecord> filter_overlap(std::span<const TrajectoryRecord> records, double threshold,
                                             double cell_size = 0.1);

/// Content hash (FNV-1a, hex) of everything in the record except its id.
std::string record_id(const TrajectoryRecord& r);

class DatasetIntegrityError : public std::runtime_error {
 public:
  DatasetIntegrityError(std::string record, const std::string& what)
      : std::runtime_error(record + ": " + what), record_(std::move(record)) {}
  const std::string& record() const { return record_; }

 private:
  std::string record_;
};

struct DatasetManifest {
  int scenes = 0;
  int trajectories = 0;
  long long frames = 0;
  long long poses = 0;
  long long actions = 0;
  DatagenParams params;
  std::vector<std::string> ids;
};

DatasetManifest manifest_of(std::span<const TrajectoryRecord> records, const DatagenParams& params);
void write_dataset(std::span<const TrajectoryRecord> records, const DatagenParams& params, const std::string& dir);
std::vector<TrajectoryRecord> read_dataset(const std::string& dir, DatasetManifest* manifest = nullptr);

}  // namespace wmbench
