#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fbface/dissimilarity.hpp"
#include "fbface/pca.hpp"

namespace fbface {

inline constexpr int kRocThresholds = 100;

/// A claim is confirmed when its score does not exceed the threshold.
/// Scores fed to the protocol are therefore distance-like: small means match.
inline bool confirm_claim(double score, double threshold) { return score <= threshold; }

struct Claim {
  double score = 0.0;
  bool genuine = false;
};

/**
 * Scores of every probe against every claimable gallery subject. Column s of
 * `scores` is the claim "this probe is gallery_ids[s]"; the claim is genuine
 * when ground_truth[probe] equals gallery_ids[s].
 */
struct VerificationRun {
  std::vector<std::string> gallery_ids;
  std::vector<std::string> probe_ids;
  std::vector<std::string> ground_truth;
  Eigen::MatrixXd scores;

  std::vector<Claim> claims() const;
};

struct RocPoint {
  double p_false_alarm = 0.0;
  double p_verification = 0.0;
};

/// One point per threshold, thresholds ascending.
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<RocPoint> points;
};

/// 100 equally spaced thresholds from the smallest to the largest observed
/// score. Throws std::invalid_argument without at least one genuine and one
/// impostor claim.
RocCurve build_roc(std::span<const Claim> claims);
RocCurve build_roc(const VerificationRun& run);

/// Highest P_V among points whose P_F does not exceed `p_false_alarm`
/// (0 when no point qualifies).
double verification_at_false_alarm(const RocCurve& roc, double p_false_alarm);

/// min over points of max(P_F, 1 - P_V).
double equal_error_rate(const RocCurve& roc);

/// Header `threshold,p_false_alarm,p_verification`, then one row per point.
std::string roc_csv(const RocCurve& roc);
void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc);
RocCurve read_roc_csv(const std::filesystem::path& path);

/// Self-contained SVG plot of one or more labelled curves in the unit square.
std::string roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves,
                    const std::string& title);

enum class ClassifierKind { pfld, pca_baseline };
std::string to_string(ClassifierKind kind);
ClassifierKind parse_classifier(const std::string& text);

struct LabeledSample {
  std::string id;
  std::string subject;
  FeatureVector features;
};

struct Exclusion {
  std::string id;
  std::string reason;
};

struct ProtocolOptions {
  ClassifierKind classifier = ClassifierKind::pfld;
  int pca_sample_size = kPcaSampleSize;  // capped at the gallery size
  int pca_drop_leading = kPcaDropLeading;
  std::uint64_t pca_seed = kPcaSeed;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct ExperimentOutcome {
  VerificationRun run;
  std::vector<Exclusion> excluded;
};

/**
 * Trains on the gallery, then scores every probe against every gallery
 * subject. Probe scores are distance-like: the reciprocal of the classifier's
 * posterior score. Probes whose subject is missing from the gallery are
 * excluded and listed in the outcome.
 */
ExperimentOutcome run_experiment(const std::vector<LabeledSample>& gallery,
                                 const std::vector<LabeledSample>& probes,
                                 const ProtocolOptions& options = {});

}  // namespace fbface
