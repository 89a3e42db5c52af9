#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fbface {

using FeatureVector = std::vector<double>;

/// Symmetric table of Euclidean distances between training objects.
struct DissimilarityMatrix {
  Eigen::MatrixXd entries;
  std::vector<std::string> object_ids;

  Eigen::Index size() const { return entries.rows(); }
};

/// Distances from one probe to every training object, aligned to object_ids.
struct DissimilarityVector {
  Eigen::VectorXd distances;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Requires N >= 2 descriptors of equal length. If `ids` is empty, objects are
/// numbered "0", "1", ...
DissimilarityMatrix build_matrix(const std::vector<FeatureVector>& train,
                                 std::vector<std::string> ids = {});

DissimilarityVector embed_probe(std::span<const double> probe,
                                const std::vector<FeatureVector>& train);

/// Diagnostic export: header row and first column carry the object ids.
void write_matrix_csv(const std::filesystem::path& path, const DissimilarityMatrix& matrix);

}  // namespace fbface
