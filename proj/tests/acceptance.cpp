// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: fbface_acceptance [path-to-fbface-cli]

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fbface/bessel.hpp"
#include "fbface/dataset.hpp"
#include "fbface/discriminant.hpp"
#include "fbface/experiment.hpp"
#include "fbface/fbt.hpp"
#include "fbface/pca.hpp"
#include "fbface/verification.hpp"
#include "oracles.hpp"
#include "patterns.hpp"
#include "tempdir.hpp"

using namespace fbface;
namespace fs = std::filesystem;

namespace {

// Frozen synthetic benchmark.
SynthOptions benchmark_options() {
  SynthOptions o;
  o.subjects = 20;
  o.images_per_subject = 5;
  o.noise_sd = 0.02;
  o.seed = 3;
  o.expression_sd = 0.5;
  return o;
}
constexpr std::uint64_t kEyeNoiseSeed = 7;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double frobenius_relative(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

struct Benchmark {
  testing::TempDir dir{"acceptance_bench"};
  DatasetManifest manifest;
  Benchmark() { manifest = synth_dataset(benchmark_options(), dir.path()); }

  double pv(AnalysisMode mode, std::optional<OcclusionVariant> occ, bool eye_noise) const {
    ExperimentConfig c;
    c.mode = mode;
    c.occlusion = occ;
    if (eye_noise) c.eye_noise = EyeNoise{EyeErrorModel{3.6, 5.1}, kEyeNoiseSeed};
    return evaluate(c, manifest).p_verification_at_010;
  }
};

Benchmark& benchmark() {
  static Benchmark b;
  return b;
}

// Unoccluded, unperturbed runs shared by criteria 6 and 7.
struct Baseline {
  double global = 0.0;
  double local = 0.0;
};

Baseline& baseline() {
  static Baseline b{benchmark().pv(AnalysisMode::global, std::nullopt, false),
                    benchmark().pv(AnalysisMode::local, std::nullopt, false)};
  return b;
}

Outcome bessel() {
  Outcome out;
  int roots = 0;
  double worst = 0.0;
  for (int n = 0; n <= 30; ++n) {
    for (double a : bessel_roots(n, 6)) {
      worst = std::max(worst, std::abs(oracle::bessel_series(n, a)));
      ++roots;
    }
  }
  out.require(roots == 186, "root count " + std::to_string(roots));
  out.require(worst <= 1e-10, "max |J(root)| " + fmt(worst));
  double rec = 0.0;
  for (int n = 1; n <= 31; ++n) {
    for (double x = 0.25; x <= 50.0; x += 0.25) {
      rec = std::max(rec, std::abs(bessel_j(n - 1, x) + bessel_j(n + 1, x) - (2.0 * n / x) * bessel_j(n, x)));
    }
  }
  out.require(rec <= 1e-9, "recurrence residual " + fmt(rec));
  if (out.ok) out.detail = "186 roots, max |J| " + fmt(worst) + ", recurrence " + fmt(rec);
  return out;
}

Outcome fbt() {
  Outcome out;
  constexpr int side = 131;
  constexpr Point center{65.0, 65.0};
  const FbtEngine engine{FbtConfig{}};
  FbtConfig mag_cfg;
  mag_cfg.variant = DescriptorVariant::magnitude;
  const FbtEngine mag(mag_cfg);
  double worst_rmse = 0.0;
  double worst_rot = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto terms = testing::random_terms(seed, 5, 30, 6);
    const RasterImage img = testing::render(terms, side, side, center, 65.0);
    worst_rmse = std::max(worst_rmse, testing::relative_rmse(engine.inverse(engine.forward(img, center)), terms));
    const auto base = descriptor_vector(mag.forward(img, center));
    for (double deg : {30.0, 90.0}) {
      const auto rot = descriptor_vector(
          mag.forward(testing::render(terms, side, side, center, 65.0, deg * std::numbers::pi / 180.0), center));
      double diff = 0.0;
      double ref = 0.0;
      for (std::size_t k = 0; k < base.size(); ++k) {
        diff += (rot[k] - base[k]) * (rot[k] - base[k]);
        ref += base[k] * base[k];
      }
      worst_rot = std::max(worst_rot, std::sqrt(diff / ref));
    }
  }
  out.require(worst_rmse <= 0.05, "round trip rmse " + fmt(worst_rmse));
  out.require(worst_rot <= 0.02, "rotation magnitude change " + fmt(worst_rot));
  const std::size_t len = descriptor_vector(engine.forward(RasterImage(side, side), center)).size();
  out.require(len == 372, "descriptor length " + std::to_string(len));
  if (out.ok) out.detail = "rmse " + fmt(worst_rmse) + ", rotation " + fmt(worst_rot) + ", length 372";
  return out;
}

Outcome normalization() {
  Outcome out;
  int faces = 0;
  double worst_mean = 0.0;
  double worst_sd = 0.0;
  for (const auto& e : benchmark().manifest.entries) {
    const NormalizedFace f = register_face(read_pgm(e.image_path), e.eyes);
    ++faces;
    if (f.image.width() != 130 || f.image.height() != 150) {
      out.require(false, e.image_id + " is " + std::to_string(f.image.width()) + "x" +
                             std::to_string(f.image.height()));
      continue;
    }
    double sum = 0.0;
    double sq = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < f.image.size(); ++k) {
      if (!f.mask[k]) continue;
      sum += f.image.pixels()[k];
      sq += f.image.pixels()[k] * f.image.pixels()[k];
      ++n;
    }
    const double mean = sum / n;
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_sd = std::max(worst_sd, std::abs(std::sqrt(sq / n - mean * mean) - 1.0));
  }
  out.require(worst_mean <= 1e-6, "mean off by " + fmt(worst_mean));
  out.require(worst_sd <= 1e-6, "std off by " + fmt(worst_sd));
  if (out.ok) out.detail = std::to_string(faces) + " faces at 130x150";
  return out;
}

std::vector<FeatureVector> clusters(std::uint64_t seed, int subjects, int per_subject, int dim, double noise,
                                    std::vector<std::string>* labels) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<FeatureVector> out;
  for (int s = 0; s < subjects; ++s) {
    FeatureVector centre(static_cast<std::size_t>(dim));
    for (double& x : centre) x = 3.0 * g(rng);
    for (int k = 0; k < per_subject; ++k) {
      FeatureVector v = centre;
      for (double& x : v) x += noise * g(rng);
      out.push_back(v);
      if (labels) labels->push_back("s" + std::to_string(s));
    }
  }
  return out;
}

Outcome classifier() {
  Outcome out;
  double worst_hit = 0.0;
  double worst_pinv = 0.0;
  int argmax_changes = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::vector<std::string> labels;
    const auto features = clusters(seed, 6, 2, 60, 0.8, &labels);
    const auto d = build_matrix(features);
    const auto model = train_pfld(d, labels);
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const auto g = discriminant_responses(model, {d.entries.row(i).transpose()});
      for (std::size_t s = 0; s < model.subject_ids.size(); ++s) {
        const double target = model.subject_ids[s] == labels[static_cast<std::size_t>(i)] ? 1.0 : -1.0;
        worst_hit = std::max(worst_hit, std::abs(g(static_cast<Eigen::Index>(s)) - target));
      }
    }
    const Eigen::MatrixXd m = augmented_training_matrix(d.entries, model.center);
    const Eigen::MatrixXd p = pseudo_inverse(m);
    worst_pinv = std::max({worst_pinv, frobenius_relative(m * p * m, m), frobenius_relative(p * m * p, p),
                           frobenius_relative((m * p).transpose(), m * p),
                           frobenius_relative((p * m).transpose(), p * m)});

    const auto probes = clusters(seed + 100, 6, 1, 60, 0.0, nullptr);
    for (double c : {0.01, 3.0, 1e4}) {
      std::vector<FeatureVector> scaled = features;
      for (auto& v : scaled)
        for (double& x : v) x *= c;
      const auto scaled_model = train_pfld(build_matrix(scaled), labels);
      for (const auto& probe : probes) {
        FeatureVector sp = probe;
        for (double& x : sp) x *= c;
        argmax_changes += score_probe(model, embed_probe(probe, features)).best() !=
                          score_probe(scaled_model, embed_probe(sp, scaled)).best();
      }
    }
  }
  out.require(worst_hit <= 1e-6, "target miss " + fmt(worst_hit));
  out.require(worst_pinv <= 1e-8, "pinv identity residual " + fmt(worst_pinv));
  out.require(argmax_changes == 0, std::to_string(argmax_changes) + " argmax changes under scaling");
  if (out.ok) out.detail = "target miss " + fmt(worst_hit) + ", pinv " + fmt(worst_pinv);
  return out;
}

Outcome protocol() {
  Outcome out;
  std::vector<Claim> separated;
  for (int k = 0; k < 20; ++k) separated.push_back({0.05 * k, true});
  for (int k = 0; k < 80; ++k) separated.push_back({2.0 + 0.0125 * k, false});
  const RocCurve roc = build_roc(separated);
  out.require(roc.points.size() == 100, "points " + std::to_string(roc.points.size()));
  bool monotone = true;
  for (std::size_t k = 1; k < roc.points.size(); ++k) {
    monotone &= roc.points[k].p_false_alarm >= roc.points[k - 1].p_false_alarm &&
                roc.points[k].p_verification >= roc.points[k - 1].p_verification;
  }
  out.require(monotone, "not monotone");
  out.require(roc.points.back().p_false_alarm == 1.0 && roc.points.back().p_verification == 1.0,
              "last point is not (1,1)");
  bool corner = false;
  for (const auto& p : roc.points) corner |= p.p_false_alarm == 0.0 && p.p_verification == 1.0;
  out.require(corner, "no (0,1) point for separated scores");

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g;
  std::bernoulli_distribution genuine(0.1);
  std::vector<Claim> random;
  for (int k = 0; k < 10000; ++k) random.push_back({g(rng), genuine(rng)});
  const RocCurve diag = build_roc(random);
  double off = 0.0;
  for (const auto& p : diag.points) off = std::max(off, std::abs(p.p_verification - p.p_false_alarm));
  out.require(diag.points.size() == 100, "monte carlo curve size");
  out.require(off <= 0.05, "diagonal deviation " + fmt(off));
  if (out.ok) out.detail = "diagonal deviation " + fmt(off);
  return out;
}

Outcome occlusion() {
  Outcome out;
  const Baseline& b = baseline();
  const double g = benchmark().pv(AnalysisMode::global, OcclusionVariant::eye_mouth, false);
  const double l = benchmark().pv(AnalysisMode::local, OcclusionVariant::eye_mouth, false);
  out.detail = "clean G " + fmt(b.global) + " L " + fmt(b.local) + ", occluded G " + fmt(g) + " L " + fmt(l);
  out.require(b.local >= 0.95, "unoccluded local below 0.95");
  out.require(l > g, "local does not beat global");
  out.require(b.local - l < b.global - g, "local degrades at least as much as global");
  return out;
}

Outcome localization() {
  Outcome out;
  const Baseline& b = baseline();
  const double g = benchmark().pv(AnalysisMode::global, std::nullopt, true);
  const double l = benchmark().pv(AnalysisMode::local, std::nullopt, true);
  out.detail = "clean G " + fmt(b.global) + " L " + fmt(b.local) + ", perturbed G " + fmt(g) + " L " + fmt(l);
  out.require(g < b.global, "global not reduced");
  out.require(l < b.local, "local not reduced");
  out.require(l - g < b.local - b.global, "local advantage did not shrink");
  return out;
}

Outcome pca_wiring() {
  Outcome out;
  ExperimentConfig c;
  c.classifier = ClassifierKind::pca_baseline;
  const PreparedDataset data = prepare(c, benchmark().manifest);
  std::vector<FeatureVector> gallery;
  std::vector<FeatureVector> probes;
  for (const auto& s : data.gallery) gallery.push_back(s.features);
  for (const auto& s : data.probes) probes.push_back(s.features);
  const PcaModel m = train_pca(gallery, std::min<int>(kPcaSampleSize, static_cast<int>(gallery.size())));
  out.require(m.drop_leading == 3, "drops " + std::to_string(m.drop_leading));
  const Eigen::MatrixXd gram = m.components.transpose() * m.components;
  const double ortho = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  out.require(ortho <= 1e-8, "orthonormality " + fmt(ortho));
  const Eigen::MatrixXd base = pca_match_scores(m, gallery, probes);
  double moved = 0.0;
  for (Eigen::Index comp = 0; comp < 3; ++comp) {
    std::vector<FeatureVector> shifted = probes;
    for (auto& p : shifted)
      for (std::size_t k = 0; k < p.size(); ++k) p[k] += 25.0 * m.components(static_cast<Eigen::Index>(k), comp);
    moved = std::max(moved, (pca_match_scores(m, gallery, shifted) - base).cwiseAbs().maxCoeff());
  }
  out.require(moved <= 1e-8, "excluded component moved a score by " + fmt(moved));
  if (out.ok) out.detail = "orthonormality " + fmt(ortho) + ", excluded-component change " + fmt(moved);
  return out;
}

Outcome determinism(const std::string& cli) {
  Outcome out;
  const fs::path base = benchmark().dir.path();
  const fs::path manifest = base / "manifest.csv";
  std::vector<std::string> csv;
  for (const char* name : {"det_a", "det_b"}) {
    const fs::path dir = base / name;
    if (!cli.empty()) {
      const std::string cmd = "\"" + cli + "\" run --mode local --occlusion eye_mouth --out \"" + dir.string() +
                              "\" \"" + manifest.string() + "\" > /dev/null";
      out.require(std::system(cmd.c_str()) == 0, std::string("cli run failed for ") + name);
    } else {
      ExperimentConfig c;
      c.occlusion = OcclusionVariant::eye_mouth;
      c.output_dir = dir;
      run(c, benchmark().manifest);
    }
    csv.push_back(testing::read_file(dir / "roc.csv"));
  }
  out.require(!csv[0].empty(), "empty roc.csv");
  out.require(csv[0] == csv[1], "roc.csv differs between runs");
  if (out.ok) out.detail = std::string(cli.empty() ? "library" : "cli") + " runs, " + std::to_string(csv[0].size()) +
                           " identical bytes";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    const char* name;
    double limit_s;  // 0: no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {"bessel correctness", 5.0, bessel},
      {"fbt fidelity", 30.0, fbt},
      {"normalization contract", 0.0, normalization},
      {"classifier interpolation", 0.0, classifier},
      {"protocol sanity", 0.0, protocol},
      {"occlusion ordering", 120.0, occlusion},
      {"localization-error ordering", 120.0, localization},
      {"pca baseline wiring", 0.0, pca_wiring},
      {"end-to-end determinism", 0.0, [&] { return determinism(cli); }},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.limit_s > 0 && secs >= c.limit_s) o.require(false, "took " + fmt(secs) + " s, limit " + fmt(c.limit_s));
    failures += !o.ok;
    std::printf("%s %d %s (%.2f s): %s\n", o.ok ? "PASS" : "FAIL", index, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
