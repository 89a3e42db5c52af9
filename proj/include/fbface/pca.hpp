#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "fbface/dissimilarity.hpp"

namespace fbface {

inline constexpr int kPcaSampleSize = 700;
inline constexpr int kPcaDropLeading = 3;
inline constexpr std::uint64_t kPcaSeed = 700003;

/// Eigenfaces baseline. Components are ordered by descending eigenvalue; the
/// first `drop_leading` are kept in the model but never used for projection.
struct PcaModel {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;   // d x c, orthonormal columns
  Eigen::VectorXd eigenvalues;  // sample covariance eigenvalues, non-increasing
  int drop_leading = kPcaDropLeading;
  std::vector<std::size_t> sample;  // indices of the images used for training

  Eigen::Index retained() const { return components.cols() - drop_leading; }
  auto retained_components() const { return components.rightCols(retained()); }
};

/**
 * Snapshot-method PCA: draws `sample_size` images without replacement (seeded),
 * eigendecomposes the sample_size x sample_size inner-product matrix of the
 * centred sample and lifts its eigenvectors to image space. Components with
 * eigenvalues below 1e-10 of the largest are discarded as numerically null.
 */
PcaModel train_pca(const std::vector<FeatureVector>& images, int sample_size,
                   int drop_leading = kPcaDropLeading, std::uint64_t seed = kPcaSeed);

/// Coefficients on the retained components.
Eigen::VectorXd pca_project(const PcaModel& model, std::span<const double> image);

/// mean + retained components * coefficients.
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& coefficients);

/// probes x gallery table of 1 / (eps + ||P(probe) - P(gallery)||).
Eigen::MatrixXd pca_match_scores(const PcaModel& model, const std::vector<FeatureVector>& gallery,
                                 const std::vector<FeatureVector>& probes);

}  // namespace fbface
