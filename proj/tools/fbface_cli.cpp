#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fbface/dataset.hpp"
#include "fbface/discriminant.hpp"
#include "fbface/experiment.hpp"

namespace fs = std::filesystem;
using namespace fbface;

namespace {

struct ConfigFlags {
  std::string mode = "local";
  int max_order = 30;
  int max_root = 6;
  double angular_step = 3.0;
  int radial_samples = 0;
  std::string occlusion = "none";
  double eye_noise_mean = 0.0;
  double eye_noise_sd = 0.0;
  std::uint64_t eye_noise_seed = 1;
  std::string classifier = "pfld";
  std::string descriptor_variant = "raw_372";
  std::string out;
  unsigned threads = 0;

  void attach(CLI::App* app) {
    app->add_option("--mode", mode, "global or local")->check(CLI::IsMember({"global", "local"}));
    app->add_option("--max-order", max_order, "highest Bessel order n");
    app->add_option("--max-root", max_root, "roots per order");
    app->add_option("--angular-step", angular_step, "polar sampling step in degrees");
    app->add_option("--radial-samples", radial_samples, "quadrature rings (0: one per pixel of radius)");
    app->add_option("--occlusion", occlusion, "probe occlusion: none, eye_mouth or mouth_nose")
        ->check(CLI::IsMember({"none", "eye_mouth", "mouth_nose"}));
    app->add_option("--eye-noise-mean", eye_noise_mean, "mean eye displacement in px (0: off)");
    app->add_option("--eye-noise-sd", eye_noise_sd, "sd of the eye displacement in px");
    app->add_option("--eye-noise-seed", eye_noise_seed, "seed for the eye displacement");
    app->add_option("--classifier", classifier, "pfld or pca_baseline")
        ->check(CLI::IsMember({"pfld", "pca_baseline"}));
    app->add_option("--descriptor-variant", descriptor_variant, "raw_372 or magnitude_186")
        ->check(CLI::IsMember({"raw_372", "magnitude_186"}));
    add_out(app);
    app->add_option("--threads", threads, "worker threads (0: all cores)");
  }

  void add_out(CLI::App* app) {
    app->add_option("--out", out, std::string("output directory (default $") + kOutputDirEnv + ")");
  }

  ExperimentConfig config() const {
    ExperimentConfig c;
    c.mode = parse_analysis_mode(mode);
    c.fbt.max_order = max_order;
    c.fbt.max_root = max_root;
    c.fbt.angular_step_deg = angular_step;
    c.fbt.radial_samples = radial_samples;
    c.fbt.variant = parse_descriptor_variant(descriptor_variant);
    c.fbt.validate();
    if (occlusion != "none") c.occlusion = parse_occlusion(occlusion);
    if (eye_noise_mean > 0.0) c.eye_noise = EyeNoise{{eye_noise_mean, eye_noise_sd}, eye_noise_seed};
    c.classifier = parse_classifier(classifier);
    c.output_dir = output_dir();
    c.threads = threads;
    return c;
  }

  fs::path output_dir() const {
    if (!out.empty()) return out;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    throw std::runtime_error(std::string("no output directory: pass --out or set ") + kOutputDirEnv);
  }
};

void report_exclusions(const std::vector<Exclusion>& excluded) {
  for (const auto& e : excluded) std::cerr << "excluded " << e.id << ": " << e.reason << '\n';
}

int cmd_synth(const SynthOptions& options, const fs::path& out) {
  const DatasetManifest m = synth_dataset(options, out);
  std::cout << "wrote " << m.entries.size() << " images to " << out.string() << '\n'
            << "manifest: " << m.manifest_path.string() << '\n';
  return 0;
}

int cmd_ingest_check(const fs::path& manifest_path) {
  const DatasetManifest m = ingest(manifest_path);
  std::map<std::string, int> partitions;
  std::map<std::string, int> subjects;
  int imputed = 0;
  for (const auto& e : m.entries) {
    ++partitions[to_string(e.partition)];
    ++subjects[e.subject_id];
    if (e.eyes_imputed) {
      ++imputed;
      std::cout << "imputed eyes: " << e.image_id << '\n';
    }
  }
  std::cout << m.entries.size() << " entries, " << subjects.size() << " subjects\n";
  for (const auto& [name, count] : partitions) std::cout << "  " << name << ": " << count << '\n';
  std::cout << imputed << " entries with imputed eye coordinates\n";
  return 0;
}

int cmd_extract(const fs::path& manifest_path, const ConfigFlags& flags) {
  const ExperimentConfig config = flags.config();
  const PreparedDataset data = prepare(config, ingest(manifest_path));
  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / "descriptors.csv";
  write_descriptors_csv(path, data);
  report_exclusions(data.excluded);
  std::cout << "wrote " << data.gallery.size() + data.probes.size() << " descriptors to "
            << path.string() << '\n';
  return 0;
}

int cmd_train(const fs::path& manifest_path, const ConfigFlags& flags) {
  const ExperimentConfig config = flags.config();
  if (config.classifier != ClassifierKind::pfld) {
    throw std::runtime_error("train builds pfld models; the PCA baseline is trained inside `run`");
  }
  const PreparedDataset data = prepare(config, ingest(manifest_path));
  report_exclusions(data.excluded);
  fs::create_directories(config.output_dir);
  const fs::path path = config.output_dir / "model.bin";
  save_model(path, train_bundle(config, data.gallery));
  std::cout << "trained on " << data.gallery.size() << " gallery images; model: " << path.string()
            << '\n';
  return 0;
}

int cmd_verify(const fs::path& manifest_path, const fs::path& model_path, const ConfigFlags& flags) {
  const ExperimentConfig config = flags.config();
  const ModelBundle bundle = load_model(model_path);
  if (bundle.fingerprint != config.fingerprint()) {
    throw ConfigMismatchError("model was trained with " + bundle.fingerprint + ", flags give " +
                              config.fingerprint());
  }
  const PreparedDataset data = prepare(config, ingest(manifest_path));
  std::vector<Exclusion> excluded = data.excluded;

  const auto& subjects = bundle.model.subject_ids;
  VerificationRun run;
  run.gallery_ids = subjects;
  std::vector<std::vector<double>> rows;
  for (const auto& p : data.probes) {
    if (std::find(subjects.begin(), subjects.end(), p.subject) == subjects.end()) {
      excluded.push_back({p.id, "subject " + p.subject + " not in the model"});
      continue;
    }
    const PosteriorScores s = score_descriptor(bundle, p.features, config.fingerprint());
    std::vector<double> row;
    for (double v : s.scores) row.push_back(1.0 / v);
    rows.push_back(std::move(row));
    run.probe_ids.push_back(p.id);
    run.ground_truth.push_back(p.subject);
  }
  if (rows.empty()) throw std::runtime_error("no probes to verify");
  run.scores.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(subjects.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      run.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = rows[i][s];
    }
  }
  report_exclusions(excluded);

  fs::create_directories(config.output_dir);
  {
    std::ofstream out(config.output_dir / "scores.csv");
    out << "probe_id,subject_id";
    for (const auto& s : subjects) out << ',' << s;
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out << run.probe_ids[i] << ',' << run.ground_truth[i];
      for (double v : rows[i]) out << ',' << v;
      out << '\n';
    }
  }
  const RocCurve roc = build_roc(run);
  write_roc_csv(config.output_dir / "roc.csv", roc);
  std::cout << "P_V at P_F=0.10: " << verification_at_false_alarm(roc, 0.10)
            << "\nEER: " << equal_error_rate(roc) << '\n';
  return 0;
}

int cmd_roc_plot(const std::vector<std::string>& inputs, std::vector<std::string> labels,
                 const std::string& title, const fs::path& out) {
  if (!labels.empty() && labels.size() != inputs.size()) {
    throw std::runtime_error("give one --label per ROC file");
  }
  std::vector<std::pair<std::string, RocCurve>> curves;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::string label = labels.empty() ? fs::path(inputs[i]).parent_path().filename().string()
                                             : labels[i];
    curves.emplace_back(label.empty() ? inputs[i] : label, read_roc_csv(inputs[i]));
  }
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream file(out, std::ios::binary);
  if (!file) throw std::runtime_error(out.string() + ": cannot open for writing");
  file << roc_svg(curves, title);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_run(const fs::path& manifest_path, const ConfigFlags& flags) {
  const ExperimentConfig config = flags.config();
  const DatasetManifest manifest = ingest(manifest_path);
  const RunResult result = run(config, manifest);
  report_exclusions(result.excluded);
  std::cout << "P_V at P_F=0.10: " << result.p_verification_at_010
            << "\nEER: " << equal_error_rate(result.roc)
            << "\nartifacts: " << config.output_dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier-Bessel face verification"};
  app.require_subcommand(1);

  SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic face dataset");
  synth_cmd->add_option("--subjects", synth.subjects)->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--images-per-subject", synth.images_per_subject)->check(CLI::Range(1, 100000));
  synth_cmd->add_option("--noise-sd", synth.noise_sd, "pixel noise sd as a fraction of the amplitude");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--expression-sd", synth.expression_sd, "per-image lower-face variation");
  synth_cmd->add_option("--jitter-shift", synth.jitter_shift_px, "pose translation sd in px");
  synth_cmd->add_option("--jitter-rotation", synth.jitter_rotation_deg, "pose rotation sd in degrees");
  synth_cmd->add_option("--jitter-scale", synth.jitter_scale, "pose relative scale sd");
  synth_cmd->add_option("--out", synth_out, "dataset directory")->required();

  std::string manifest;
  auto* ingest_cmd = app.add_subcommand("ingest-check", "validate a manifest and its eye sidecar");
  ingest_cmd->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);

  ConfigFlags flags;
  auto* extract_cmd = app.add_subcommand("extract", "write descriptors.csv for every image");
  auto* train_cmd = app.add_subcommand("train", "train a pfld model on the gallery partition");
  auto* verify_cmd = app.add_subcommand("verify", "score the probes against a trained model");
  auto* run_cmd = app.add_subcommand("run", "preprocess, extract, train, verify and plot");
  std::string model;
  verify_cmd->add_option("--model", model, "model.bin from `train`")->required()->check(CLI::ExistingFile);
  for (auto* cmd : {extract_cmd, train_cmd, verify_cmd, run_cmd}) {
    cmd->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
    flags.attach(cmd);
  }

  std::vector<std::string> roc_inputs;
  std::vector<std::string> roc_labels;
  std::string title = "Verification ROC";
  std::string svg_out;
  auto* plot_cmd = app.add_subcommand("roc-plot", "render ROC CSV files as one SVG");
  plot_cmd->add_option("roc", roc_inputs, "roc.csv files")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--label", roc_labels, "legend label per file");
  plot_cmd->add_option("--title", title);
  plot_cmd->add_option("--out", svg_out, "output SVG file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) return cmd_synth(synth, synth_out);
    if (*ingest_cmd) return cmd_ingest_check(manifest);
    if (*extract_cmd) return cmd_extract(manifest, flags);
    if (*train_cmd) return cmd_train(manifest, flags);
    if (*verify_cmd) return cmd_verify(manifest, model, flags);
    if (*plot_cmd) return cmd_roc_plot(roc_inputs, roc_labels, title, svg_out);
    if (*run_cmd) return cmd_run(manifest, flags);
  } catch (const std::exception& e) {
    std::cerr << "fbface: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
