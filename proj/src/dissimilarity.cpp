#include "fbface/dissimilarity.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace fbface {

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("descriptor length mismatch");
  double ss = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    ss += d * d;
  }
  return std::sqrt(ss);
}

DissimilarityMatrix build_matrix(const std::vector<FeatureVector>& train,
                                 std::vector<std::string> ids) {
  const auto n = static_cast<Eigen::Index>(train.size());
  if (n < 2) throw std::invalid_argument("dissimilarity matrix needs at least two objects");
  for (const auto& v : train) {
    if (v.size() != train.front().size()) throw std::invalid_argument("descriptor length mismatch");
  }
  if (ids.empty()) {
    for (Eigen::Index k = 0; k < n; ++k) ids.push_back(std::to_string(k));
  } else if (static_cast<Eigen::Index>(ids.size()) != n) {
    throw std::invalid_argument("object id count does not match descriptor count");
  }

  DissimilarityMatrix m{Eigen::MatrixXd::Zero(n, n), std::move(ids)};
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(train[i], train[j]);
      m.entries(i, j) = d;
      m.entries(j, i) = d;
    }
  }
  return m;
}

DissimilarityVector embed_probe(std::span<const double> probe,
                                const std::vector<FeatureVector>& train) {
  DissimilarityVector out{Eigen::VectorXd(static_cast<Eigen::Index>(train.size()))};
  for (std::size_t k = 0; k < train.size(); ++k) {
    out.distances(static_cast<Eigen::Index>(k)) = euclidean_distance(probe, train[k]);
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const DissimilarityMatrix& matrix) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << "object_id";
  for (const auto& id : matrix.object_ids) out << ',' << id;
  out << '\n';
  for (Eigen::Index i = 0; i < matrix.size(); ++i) {
    out << matrix.object_ids[i];
    for (Eigen::Index j = 0; j < matrix.size(); ++j) {
      out << ',' << detail::format_double(matrix.entries(i, j));
    }
    out << '\n';
  }
}

}  // namespace fbface
