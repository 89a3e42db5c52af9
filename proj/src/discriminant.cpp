#include "fbface/discriminant.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "binary_io.hpp"

namespace fbface {

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& m, double relative_tolerance) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = relative_tolerance * sv(0);
  Eigen::VectorXd inv(sv.size());
  for (Eigen::Index k = 0; k < sv.size(); ++k) inv(k) = sv(k) > cutoff ? 1.0 / sv(k) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::size_t PosteriorScores::best() const {
  if (scores.empty()) throw std::logic_error("no scores");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

Eigen::MatrixXd augmented_training_matrix(const Eigen::MatrixXd& dissimilarities,
                                          const Eigen::VectorXd& center) {
  const Eigen::Index n = dissimilarities.rows();
  Eigen::MatrixXd m(n, dissimilarities.cols() + 1);
  m.leftCols(dissimilarities.cols()) = dissimilarities.rowwise() - center.transpose();
  m.col(dissimilarities.cols()).setOnes();
  return m;
}

DiscriminantModel train_pfld(const DissimilarityMatrix& matrix,
                             const std::vector<std::string>& labels) {
  std::vector<std::string> subjects;
  for (const auto& label : labels) {
    if (std::find(subjects.begin(), subjects.end(), label) == subjects.end()) {
      subjects.push_back(label);
    }
  }
  return train_pfld(matrix, labels, subjects);
}

DiscriminantModel train_pfld(const DissimilarityMatrix& matrix,
                             const std::vector<std::string>& labels,
                             const std::vector<std::string>& subjects) {
  const Eigen::Index n = matrix.size();
  if (n < 2) throw std::invalid_argument("at least two training objects are required");
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("label count does not match the dissimilarity matrix");
  }
  if (subjects.size() < 2) throw std::invalid_argument("at least two subjects are required");

  std::map<std::string, Eigen::Index> column;
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (!column.emplace(subjects[s], static_cast<Eigen::Index>(s)).second) {
      throw std::invalid_argument("duplicate subject '" + subjects[s] + "'");
    }
  }
  const auto l = static_cast<Eigen::Index>(subjects.size());
  Eigen::MatrixXd targets = Eigen::MatrixXd::Constant(n, l, -1.0);
  std::vector<int> members(subjects.size(), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto it = column.find(labels[i]);
    if (it == column.end()) {
      throw std::invalid_argument("training label '" + labels[i] + "' is not a listed subject");
    }
    targets(i, it->second) = 1.0;
    ++members[it->second];
  }
  for (std::size_t s = 0; s < subjects.size(); ++s) {
    if (members[s] == 0) {
      throw std::invalid_argument("subject '" + subjects[s] + "' has no training objects");
    }
  }

  DiscriminantModel model;
  model.center = matrix.entries.colwise().mean().transpose();
  const Eigen::MatrixXd pinv = pseudo_inverse(augmented_training_matrix(matrix.entries, model.center));
  model.weights = (pinv * targets).transpose();
  model.subject_ids = subjects;
  model.object_ids = matrix.object_ids;
  return model;
}

Eigen::VectorXd discriminant_responses(const DiscriminantModel& model,
                                       const DissimilarityVector& probe) {
  const Eigen::Index n = model.center.size();
  if (probe.distances.size() != n) {
    throw std::invalid_argument("probe is not aligned to the training objects");
  }
  return model.weights.leftCols(n) * (probe.distances - model.center) + model.weights.col(n);
}

PosteriorScores score_probe(const DiscriminantModel& model, const DissimilarityVector& probe) {
  const Eigen::VectorXd g = discriminant_responses(model, probe);
  const Eigen::Index l = g.size();
  PosteriorScores out;
  out.subject_ids = model.subject_ids;
  out.scores.resize(static_cast<std::size_t>(l));
  for (Eigen::Index s = 0; s < l; ++s) {
    double ss = 0.0;
    for (Eigen::Index k = 0; k < l; ++k) {
      const double d = g(k) - (k == s ? 1.0 : -1.0);
      ss += d * d;
    }
    out.scores[static_cast<std::size_t>(s)] = 1.0 / (kScoreEpsilon + std::sqrt(ss));
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'F', 'B', 'F', 'M', 'O', 'D', 'E', 'L'};

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  detail::write_u64(out, static_cast<std::uint64_t>(m.rows()));
  detail::write_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) detail::write_f64(out, m(i, j));
  }
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = detail::read_u64(in);
  const auto cols = detail::read_u64(in);
  if (rows > (1u << 24) || cols > (1u << 24)) throw std::runtime_error("matrix size out of range");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = detail::read_f64(in);
  }
  return m;
}

void write_strings(std::ostream& out, const std::vector<std::string>& v) {
  detail::write_u64(out, v.size());
  for (const auto& s : v) detail::write_string(out, s);
}

std::vector<std::string> read_strings(std::istream& in) {
  const auto n = detail::read_u64(in);
  if (n > (1u << 24)) throw std::runtime_error("list size out of range");
  std::vector<std::string> v;
  v.reserve(n);
  for (std::uint64_t k = 0; k < n; ++k) v.push_back(detail::read_string(in));
  return v;
}

}  // namespace

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out.write(kMagic, sizeof kMagic);
  detail::write_u64(out, kModelFormatVersion);
  detail::write_string(out, bundle.fingerprint);
  write_strings(out, bundle.model.subject_ids);
  write_strings(out, bundle.model.object_ids);
  write_matrix(out, bundle.model.center);
  write_matrix(out, bundle.model.weights);
  const std::size_t dim = bundle.prototypes.empty() ? 0 : bundle.prototypes.front().size();
  Eigen::MatrixXd protos(static_cast<Eigen::Index>(bundle.prototypes.size()),
                         static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < bundle.prototypes.size(); ++i) {
    if (bundle.prototypes[i].size() != dim) throw std::invalid_argument("ragged prototypes");
    for (std::size_t j = 0; j < dim; ++j) {
      protos(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bundle.prototypes[i][j];
    }
  }
  write_matrix(out, protos);
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

ModelBundle load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open model");
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, kMagic)) {
    throw std::runtime_error(path.string() + ": not a model container");
  }
  const auto version = detail::read_u64(in);
  if (version != kModelFormatVersion) {
    throw std::runtime_error(path.string() + ": unsupported model version " +
                             std::to_string(version));
  }
  ModelBundle bundle;
  bundle.fingerprint = detail::read_string(in);
  bundle.model.subject_ids = read_strings(in);
  bundle.model.object_ids = read_strings(in);
  bundle.model.center = read_matrix(in);
  bundle.model.weights = read_matrix(in);
  const Eigen::MatrixXd protos = read_matrix(in);
  bundle.prototypes.resize(static_cast<std::size_t>(protos.rows()));
  for (Eigen::Index i = 0; i < protos.rows(); ++i) {
    auto& row = bundle.prototypes[static_cast<std::size_t>(i)];
    row.resize(static_cast<std::size_t>(protos.cols()));
    for (Eigen::Index j = 0; j < protos.cols(); ++j) row[static_cast<std::size_t>(j)] = protos(i, j);
  }
  const auto n = static_cast<Eigen::Index>(bundle.model.object_ids.size());
  if (bundle.model.center.size() != n || bundle.model.weights.cols() != n + 1 ||
      bundle.model.weights.rows() != static_cast<Eigen::Index>(bundle.model.subject_ids.size()) ||
      protos.rows() != n) {
    throw std::runtime_error(path.string() + ": inconsistent model dimensions");
  }
  return bundle;
}

PosteriorScores score_descriptor(const ModelBundle& bundle, std::span<const double> descriptor,
                                 const std::string& fingerprint) {
  if (fingerprint != bundle.fingerprint) {
    throw ConfigMismatchError("probe extracted with '" + fingerprint + "' but model expects '" +
                              bundle.fingerprint + "'");
  }
  return score_probe(bundle.model, embed_probe(descriptor, bundle.prototypes));
}

}  // namespace fbface
