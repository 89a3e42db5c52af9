#include "fbface/pca.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fbface/discriminant.hpp"

namespace fbface {
namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

PcaModel train_pca(const std::vector<FeatureVector>& images, int sample_size, int drop_leading,
                   std::uint64_t seed) {
  if (sample_size < 2) throw std::invalid_argument("PCA needs a sample of at least two images");
  if (static_cast<std::size_t>(sample_size) > images.size()) {
    throw std::invalid_argument("PCA sample size exceeds the available images");
  }
  if (drop_leading < 0) throw std::invalid_argument("drop_leading must be non-negative");
  const std::size_t dim = images.front().size();
  for (const auto& im : images) {
    if (im.size() != dim) throw std::invalid_argument("image length mismatch");
  }

  PcaModel model;
  model.drop_leading = drop_leading;
  model.sample.resize(images.size());
  std::iota(model.sample.begin(), model.sample.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(model.sample.begin(), model.sample.end(), rng);
  model.sample.resize(static_cast<std::size_t>(sample_size));
  std::sort(model.sample.begin(), model.sample.end());

  const auto s = static_cast<Eigen::Index>(sample_size);
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd x(s, d);
  for (Eigen::Index r = 0; r < s; ++r) x.row(r) = as_vector(images[model.sample[r]]).transpose();
  model.mean = x.colwise().mean().transpose();
  x.rowwise() -= model.mean.transpose();

  const Eigen::MatrixXd gram = x * x.transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
  const double largest = values(s - 1);

  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = s - 1; k >= 0; --k) {
    if (values(k) > 1e-10 * largest && values(k) > 0.0) keep.push_back(k);
  }
  if (static_cast<Eigen::Index>(keep.size()) <= drop_leading) {
    throw std::invalid_argument("sample has no components left after dropping the leading ones");
  }

  const auto c = static_cast<Eigen::Index>(keep.size());
  model.components.resize(d, c);
  model.eigenvalues.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    const Eigen::Index src = keep[static_cast<std::size_t>(k)];
    model.components.col(k) = x.transpose() * eig.eigenvectors().col(src) / std::sqrt(values(src));
    model.eigenvalues(k) = values(src) / static_cast<double>(s - 1);
  }
  // Two passes of modified Gram-Schmidt in eigenvalue order clean up the
  // round-off that the lift amplifies for small eigenvalues.
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < c; ++k) {
      for (Eigen::Index j = 0; j < k; ++j) {
        model.components.col(k) -= model.components.col(j).dot(model.components.col(k)) *
                                   model.components.col(j);
      }
      model.components.col(k).normalize();
    }
  }
  return model;
}

Eigen::VectorXd pca_project(const PcaModel& model, std::span<const double> image) {
  if (static_cast<Eigen::Index>(image.size()) != model.mean.size()) {
    throw std::invalid_argument("image length does not match the PCA model");
  }
  return model.retained_components().transpose() * (as_vector(image) - model.mean);
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& coefficients) {
  if (coefficients.size() != model.retained()) {
    throw std::invalid_argument("coefficient count does not match the retained components");
  }
  return model.mean + model.retained_components() * coefficients;
}

Eigen::MatrixXd pca_match_scores(const PcaModel& model, const std::vector<FeatureVector>& gallery,
                                 const std::vector<FeatureVector>& probes) {
  std::vector<Eigen::VectorXd> g;
  g.reserve(gallery.size());
  for (const auto& im : gallery) g.push_back(pca_project(model, im));
  Eigen::MatrixXd scores(static_cast<Eigen::Index>(probes.size()),
                         static_cast<Eigen::Index>(gallery.size()));
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const Eigen::VectorXd q = pca_project(model, probes[p]);
    for (std::size_t k = 0; k < g.size(); ++k) {
      scores(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) =
          1.0 / (kScoreEpsilon + (q - g[k]).norm());
    }
  }
  return scores;
}

}  // namespace fbface
