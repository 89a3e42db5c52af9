#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbface/dissimilarity.hpp"

namespace fbface {

/// Floor added to every distance before inversion so scores stay finite.
inline constexpr double kScoreEpsilon = 1e-12;

/// Singular values below this fraction of the largest are treated as zero.
inline constexpr double kPinvRelativeTolerance = 1e-10;

/// Moore-Penrose pseudo-inverse via SVD.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m,
                               double relative_tolerance = kPinvRelativeTolerance);

/**
 * One-vs-rest minimum-square-error discriminants over dissimilarity space.
 *
 * Row s of `weights` is the minimum-norm least-squares solution w_s of
 * [D - 1 center^T, 1] w_s = y_s, where y_s is +1 on subject s's training
 * objects and -1 elsewhere. The last column multiplies the augmented 1.
 */
struct DiscriminantModel {
  Eigen::MatrixXd weights;  // L x (N + 1)
  Eigen::VectorXd center;   // column means of the training dissimilarities
  std::vector<std::string> subject_ids;
  std::vector<std::string> object_ids;
};

struct PosteriorScores {
  std::vector<double> scores;
  std::vector<std::string> subject_ids;

  /// Index of the highest score (first on ties).
  std::size_t best() const;
};

/// [D - 1 center^T, 1], the augmented training set the pseudo-inverse is taken of.
Eigen::MatrixXd augmented_training_matrix(const Eigen::MatrixXd& dissimilarities,
                                          const Eigen::VectorXd& center);

/// Subjects are taken in order of first appearance in `labels`.
DiscriminantModel train_pfld(const DissimilarityMatrix& matrix,
                             const std::vector<std::string>& labels);

/// Explicit subject list; every listed subject needs at least one training object.
DiscriminantModel train_pfld(const DissimilarityMatrix& matrix,
                             const std::vector<std::string>& labels,
                             const std::vector<std::string>& subjects);

/// The L discriminant values g_s(x) for one embedded probe.
Eigen::VectorXd discriminant_responses(const DiscriminantModel& model,
                                       const DissimilarityVector& probe);

/// Scores 1 / (eps + ||g(x) - t_s||), where t_s is +1 at s and -1 elsewhere.
PosteriorScores score_probe(const DiscriminantModel& model, const DissimilarityVector& probe);

class ConfigMismatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// What the model container holds: the classifier, the descriptors that define
/// its dissimilarity space, and the fingerprint of the extraction settings.
struct ModelBundle {
  DiscriminantModel model;
  std::vector<FeatureVector> prototypes;
  std::string fingerprint;
};

inline constexpr std::uint64_t kModelFormatVersion = 1;

void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

/// Embeds and scores a raw probe descriptor; throws ConfigMismatchError when the
/// probe was extracted with settings other than the model's.
PosteriorScores score_descriptor(const ModelBundle& bundle, std::span<const double> descriptor,
                                 const std::string& fingerprint);

}  // namespace fbface
