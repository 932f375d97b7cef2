#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmot/kitti_io.hpp"
#include "gmot/types.hpp"

namespace gmot {

/// Knobs for the scenario generator. Presets:
///   clean    - well separated straight lanes, every object visible
///              from frame 0 to the end
///   crossing - object pairs that swap sides through a shared point at
///              equal depth, so position alone cannot keep identities apart
///   random   - waypoint wanderers with staggered births and deaths
struct ScenarioConfig {
  std::string preset = "random";
  int objects = 6;
  int frames = 40;
  int sequences = 1;
  double world_extent = 40.0;  // lateral span; depth covers [6, 6 + extent]
  double sigma_pos = 0.05;     // detection center noise, meters
  double sigma_dim = 0.02;     // detection size noise, meters
  double sigma_yaw = 0.01;     // detection heading noise, radians
  double dropout = 0.0;        // per-object per-frame miss probability
  double fp_rate = 0.0;        // expected clutter detections per frame
  int emb_dim = 32;            // appearance embedding width
  double sigma_app = 0.05;     // embedding noise before renormalization
};

struct SynthSequence {
  SequenceData data;
  // Generator identity per detection, aligned with data.det_frames;
  // -1 marks clutter. Only available in memory, never written to disk.
  std::vector<std::vector<int>> det_identities;
};

struct SynthScenario {
  std::vector<SynthSequence> sequences;
};

/// Deterministic for a given (config, seed) on every platform.
SynthScenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Writes label/, det/, calib/ and feat/ under root using four-digit
/// sequence names. Appearance sidecars hold one row per detection in
/// frame-major file order.
void write_scenario(const SynthScenario& scenario, const std::string& root);

/// Loads a directory produced by write_scenario (or arranged the same way
/// by hand) back into per-sequence bundles. Missing feat/ sidecars leave
/// detection appearance vectors empty; missing label/ leaves gt_frames
/// empty. det/ and calib/ are required.
std::vector<SequenceData> load_sequence_dir(
    const std::string& root, const std::vector<std::string>& ids);

/// Sequence ids found under root/det, sorted.
std::vector<std::string> list_sequence_ids(const std::string& root);

}  // namespace gmot
