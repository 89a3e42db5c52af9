#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fbface/dataset.hpp"
#include "fbface/discriminant.hpp"
#include "fbface/face.hpp"
#include "fbface/fbt.hpp"
#include "fbface/verification.hpp"

namespace fbface {

/// Environment variable consulted for the default output directory.
inline constexpr const char* kOutputDirEnv = "FBFACE_OUTPUT_DIR";

struct EyeNoise {
  EyeErrorModel model{3.6, 5.1};
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  AnalysisMode mode = AnalysisMode::local;
  FbtConfig fbt;
  std::optional<OcclusionVariant> occlusion;  // applied to probes only
  std::optional<EyeNoise> eye_noise;          // applied to every image
  ClassifierKind classifier = ClassifierKind::pfld;
  std::filesystem::path output_dir;
  unsigned threads = 0;

  /// Identifies the feature space; models refuse probes with another fingerprint.
  std::string fingerprint() const;
};

/// Features for every usable manifest entry, split by partition.
struct PreparedDataset {
  std::vector<LabeledSample> gallery;
  std::vector<LabeledSample> probes;
  std::vector<Exclusion> excluded;
  std::vector<std::string> imputed;  // entries whose eyes came from the mean
  std::vector<std::string> fallback;  // entries re-registered at the mean eyes
};

/**
 * Register, optionally perturb eyes and occlude probes, then extract features
 * (FBT descriptors for pfld, normalized pixels for the PCA baseline).
 * Entries that fail registration are retried at the mean eye coordinates of
 * the entries that registered; if that fails too they are excluded.
 */
PreparedDataset prepare(const ExperimentConfig& config, const DatasetManifest& manifest);

struct RunResult {
  ExperimentOutcome outcome;
  RocCurve roc;
  double p_verification_at_010 = 0.0;
  std::vector<Exclusion> excluded;
};

/// prepare -> train -> verify -> ROC, with no files written.
RunResult evaluate(const ExperimentConfig& config, const DatasetManifest& manifest);

/**
 * evaluate() plus artifacts in config.output_dir: descriptors.csv, model.bin
 * (pfld), roc.csv, roc.svg and run_manifest.json. A failed run leaves a
 * run_manifest.json with status "failed" and an INCOMPLETE marker, then rethrows.
 */
RunResult run(const ExperimentConfig& config, const DatasetManifest& manifest);

/// Pseudo-FLD model over the gallery features, tagged with the config fingerprint.
ModelBundle train_bundle(const ExperimentConfig& config, const std::vector<LabeledSample>& gallery);

/// `image_id,subject_id,partition,v0,v1,...` for every prepared sample.
void write_descriptors_csv(const std::filesystem::path& path, const PreparedDataset& data);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

}  // namespace fbface
