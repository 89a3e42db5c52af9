#include "fbface/verification.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"
#include "fbface/discriminant.hpp"
#include "parallel.hpp"

namespace fbface {

std::vector<Claim> VerificationRun::claims() const {
  if (scores.rows() != static_cast<Eigen::Index>(probe_ids.size()) ||
      scores.cols() != static_cast<Eigen::Index>(gallery_ids.size()) ||
      ground_truth.size() != probe_ids.size()) {
    throw std::invalid_argument("verification run tables are not aligned");
  }
  std::vector<Claim> out;
  out.reserve(static_cast<std::size_t>(scores.size()));
  for (Eigen::Index p = 0; p < scores.rows(); ++p) {
    for (Eigen::Index s = 0; s < scores.cols(); ++s) {
      out.push_back({scores(p, s), ground_truth[static_cast<std::size_t>(p)] ==
                                       gallery_ids[static_cast<std::size_t>(s)]});
    }
  }
  return out;
}

RocCurve build_roc(std::span<const Claim> claims) {
  std::vector<double> genuine;
  std::vector<double> impostor;
  for (const Claim& c : claims) (c.genuine ? genuine : impostor).push_back(c.score);
  if (genuine.empty()) throw std::invalid_argument("ROC needs at least one true claim");
  if (impostor.empty()) throw std::invalid_argument("ROC needs at least one false claim");
  std::sort(genuine.begin(), genuine.end());
  std::sort(impostor.begin(), impostor.end());

  const double lo = std::min(genuine.front(), impostor.front());
  const double hi = std::max(genuine.back(), impostor.back());
  RocCurve roc;
  roc.thresholds.resize(kRocThresholds);
  roc.points.resize(kRocThresholds);
  for (int k = 0; k < kRocThresholds; ++k) {
    const double t = k == kRocThresholds - 1 ? hi : lo + (hi - lo) * k / (kRocThresholds - 1);
    const auto confirmed = [t](const std::vector<double>& sorted) {
      // Scores are sorted, so confirm_claim holds exactly on a prefix.
      const auto end = std::partition_point(sorted.begin(), sorted.end(),
                                            [t](double s) { return confirm_claim(s, t); });
      return static_cast<double>(end - sorted.begin()) / static_cast<double>(sorted.size());
    };
    roc.thresholds[k] = t;
    roc.points[k] = {confirmed(impostor), confirmed(genuine)};
  }
  return roc;
}

RocCurve build_roc(const VerificationRun& run) {
  const auto claims = run.claims();
  return build_roc(std::span<const Claim>(claims));
}

double verification_at_false_alarm(const RocCurve& roc, double p_false_alarm) {
  double best = 0.0;
  for (const auto& p : roc.points) {
    if (p.p_false_alarm <= p_false_alarm) best = std::max(best, p.p_verification);
  }
  return best;
}

double equal_error_rate(const RocCurve& roc) {
  double best = 1.0;
  for (const auto& p : roc.points) {
    best = std::min(best, std::max(p.p_false_alarm, 1.0 - p.p_verification));
  }
  return best;
}

std::string roc_csv(const RocCurve& roc) {
  std::ostringstream os;
  os << "threshold,p_false_alarm,p_verification\n";
  for (std::size_t k = 0; k < roc.points.size(); ++k) {
    os << detail::format_double(roc.thresholds[k]) << ','
       << detail::format_double(roc.points[k].p_false_alarm) << ','
       << detail::format_double(roc.points[k].p_verification) << '\n';
  }
  return os.str();
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& roc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << roc_csv(roc);
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

RocCurve read_roc_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open ROC table");
  std::string line;
  std::getline(in, line);
  if (line != "threshold,p_false_alarm,p_verification") {
    throw std::runtime_error(path.string() + ": unexpected ROC header");
  }
  RocCurve roc;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
    }
    roc.thresholds.push_back(std::stod(a));
    roc.points.push_back({std::stod(b), std::stod(c)});
  }
  return roc;
}

namespace {

std::string xml_escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string roc_svg(const std::vector<std::pair<std::string, RocCurve>>& curves,
                    const std::string& title) {
  constexpr double kSize = 360.0;
  constexpr double kLeft = 70.0;
  constexpr double kTop = 40.0;
  constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                     "#8c564b"};
  const auto px = [&](double pf) { return kLeft + pf * kSize; };
  const auto py = [&](double pv) { return kTop + (1.0 - pv) * kSize; };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kLeft + kSize + 170
     << "\" height=\"" << kTop + kSize + 60 << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kLeft + kSize / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  for (int g = 0; g <= 5; ++g) {
    const double v = g / 5.0;
    os << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(v))
       << "\" y2=\"" << num(py(1)) << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(px(1))
       << "\" y2=\"" << num(py(v)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(px(v)) << "\" y=\"" << num(py(0) + 16)
       << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
    os << "<text x=\"" << num(px(0) - 6) << "\" y=\"" << num(py(v) + 4)
       << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  os << "<rect x=\"" << num(px(0)) << "\" y=\"" << num(py(1)) << "\" width=\"" << num(kSize)
     << "\" height=\"" << num(kSize) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(px(0)) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(px(1))
     << "\" y2=\"" << num(py(1)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";
  os << "<text x=\"" << num(kLeft + kSize / 2) << "\" y=\"" << num(py(0) + 36)
     << "\" text-anchor=\"middle\">False alarm rate P_F</text>\n";
  os << "<text transform=\"translate(20 " << num(kTop + kSize / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">Verification rate P_V</text>\n";

  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& p : curves[c].second.points) {
      os << num(px(p.p_false_alarm)) << ',' << num(py(p.p_verification)) << ' ';
    }
    os << "\"/>\n";
    const double ly = kTop + 10 + 20.0 * static_cast<double>(c);
    os << "<line x1=\"" << num(px(1) + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(px(1) + 40)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(px(1) + 46) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(curves[c].first)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string to_string(ClassifierKind kind) {
  return kind == ClassifierKind::pfld ? "pfld" : "pca_baseline";
}

ClassifierKind parse_classifier(const std::string& text) {
  if (text == "pfld") return ClassifierKind::pfld;
  if (text == "pca_baseline" || text == "pca") return ClassifierKind::pca_baseline;
  throw std::invalid_argument("unknown classifier '" + text + "'");
}

ExperimentOutcome run_experiment(const std::vector<LabeledSample>& gallery,
                                 const std::vector<LabeledSample>& probes,
                                 const ProtocolOptions& options) {
  if (gallery.size() < 2) throw std::invalid_argument("gallery needs at least two images");

  ExperimentOutcome outcome;
  VerificationRun& run = outcome.run;
  std::map<std::string, Eigen::Index> subject_column;
  std::vector<FeatureVector> gallery_features;
  std::vector<std::string> gallery_labels;
  for (const auto& g : gallery) {
    if (subject_column.emplace(g.subject, static_cast<Eigen::Index>(run.gallery_ids.size())).second) {
      run.gallery_ids.push_back(g.subject);
    }
    gallery_features.push_back(g.features);
    gallery_labels.push_back(g.subject);
  }
  if (run.gallery_ids.size() < 2) throw std::invalid_argument("gallery needs at least two subjects");

  std::vector<const LabeledSample*> accepted;
  for (const auto& p : probes) {
    if (!subject_column.contains(p.subject)) {
      outcome.excluded.push_back({p.id, "subject '" + p.subject + "' is not in the gallery"});
      continue;
    }
    accepted.push_back(&p);
    run.probe_ids.push_back(p.id);
    run.ground_truth.push_back(p.subject);
  }

  const auto l = static_cast<Eigen::Index>(run.gallery_ids.size());
  run.scores.resize(static_cast<Eigen::Index>(accepted.size()), l);

  if (options.classifier == ClassifierKind::pfld) {
    const DissimilarityMatrix matrix = build_matrix(gallery_features);
    const DiscriminantModel model = train_pfld(matrix, gallery_labels, run.gallery_ids);
    detail::parallel_for(accepted.size(), options.threads, [&](std::size_t p) {
      const PosteriorScores post = score_probe(model, embed_probe(accepted[p]->features, gallery_features));
      for (Eigen::Index s = 0; s < l; ++s) {
        run.scores(static_cast<Eigen::Index>(p), s) = 1.0 / post.scores[static_cast<std::size_t>(s)];
      }
    });
  } else {
    const int sample = std::min<int>(options.pca_sample_size, static_cast<int>(gallery.size()));
    const PcaModel model = train_pca(gallery_features, sample, options.pca_drop_leading, options.pca_seed);
    std::vector<FeatureVector> probe_features;
    probe_features.reserve(accepted.size());
    for (const auto* p : accepted) probe_features.push_back(p->features);
    const Eigen::MatrixXd posterior = pca_match_scores(model, gallery_features, probe_features);
    for (Eigen::Index p = 0; p < posterior.rows(); ++p) {
      Eigen::VectorXd best = Eigen::VectorXd::Zero(l);
      for (std::size_t k = 0; k < gallery.size(); ++k) {
        const Eigen::Index s = subject_column.at(gallery[k].subject);
        best(s) = std::max(best(s), posterior(p, static_cast<Eigen::Index>(k)));
      }
      for (Eigen::Index s = 0; s < l; ++s) run.scores(p, s) = 1.0 / best(s);
    }
  }
  return outcome;
}

}  // namespace fbface
