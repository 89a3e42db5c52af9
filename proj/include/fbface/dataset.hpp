#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbface/face.hpp"

namespace fbface {

enum class Partition { gallery, probe_fb, probe_dup1, probe_dup2, probe_fc, custom };
std::string to_string(Partition p);
Partition parse_partition(const std::string& text);

struct ManifestEntry {
  std::string image_id;
  std::string subject_id;
  std::filesystem::path image_path;  // resolved against the manifest directory
  EyeCoordinates eyes;
  bool eyes_imputed = false;  // no sidecar record; filled with the mean of located faces
  Partition partition = Partition::custom;
};

struct DatasetManifest {
  std::filesystem::path manifest_path;
  std::filesystem::path eyes_path;
  std::vector<ManifestEntry> entries;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// First line of every manifest; `eyes=` names the eye sidecar relative to the manifest.
inline constexpr const char* kManifestMagic = "# fbface-manifest v1";
inline constexpr const char* kManifestColumns = "image_id,subject_id,path,partition";
inline constexpr const char* kEyeColumns = "image_id,left_x,left_y,right_x,right_y";

/**
 * Loads and validates a manifest and its eye sidecar. Images must exist and
 * carry a readable PGM header. Entries without an eye record are flagged and
 * given the mean eye coordinates of the located entries. Errors name the
 * offending file and line.
 */
DatasetManifest ingest(const std::filesystem::path& manifest_path);

std::map<std::string, EyeCoordinates> read_eye_sidecar(const std::filesystem::path& path);
void write_eye_sidecar(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EyeCoordinates>>& rows);

/// Writes the manifest CSV (entry paths relative to the manifest directory where possible).
void write_manifest(const DatasetManifest& manifest);

/**
 * Synthetic face-like dataset. Each subject owns a fixed arrangement of
 * smooth blobs laid out relative to the eye landmarks; each image of that
 * subject adds the optional nuisance terms below and pixel noise, then is
 * rendered under its own pose so registration has work to do.
 */
struct SynthOptions {
  int subjects = 20;
  int images_per_subject = 5;
  /// Pixel noise standard deviation as a fraction of `amplitude`.
  double noise_sd = 0.02;
  std::uint64_t seed = 1;

  int width = 200;
  int height = 240;
  /// Gray-level scale of the face pattern.
  double amplitude = 60.0;
  /// Per-image lower-face ("expression") blob amplitude sd, fraction of `amplitude`.
  double expression_sd = 0.0;
  /// Per-image pose jitter: translation (px), rotation (deg), relative scale.
  double jitter_shift_px = 0.0;
  double jitter_rotation_deg = 0.0;
  double jitter_scale = 0.0;
};

/// Writes images/*.pgm, eyes.csv and manifest.csv under `out_dir`. Image 0 of
/// every subject goes to the gallery, the rest to probe_fb.
DatasetManifest synth_dataset(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace fbface
