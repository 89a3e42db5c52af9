#include "fbface/experiment.hpp"

#include <cstdio>
#include <fstream>

#include "binary_io.hpp"
#include "json.hpp"
#include "parallel.hpp"
#include "seeding.hpp"

namespace fbface {
namespace {

using nlohmann::json;

bool is_probe(Partition p) { return p != Partition::gallery; }

struct Attempt {
  std::optional<NormalizedFace> face;
  EyeCoordinates eyes;
  std::string error;
};

Attempt try_register(const RasterImage& image, const EyeCoordinates& eyes) {
  Attempt a;
  a.eyes = eyes;
  try {
    a.face = register_face(image, eyes);
  } catch (const RegistrationError& e) {
    a.error = e.what();
  }
  return a;
}

json config_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = to_string(c.mode);
  j["classifier"] = to_string(c.classifier);
  if (c.classifier == ClassifierKind::pca_baseline) {
    j["fbt"] = "ignored";
    j["mode"] = "ignored";
  } else {
    j["fbt"] = {{"max_order", c.fbt.max_order},
                {"max_root", c.fbt.max_root},
                {"angular_step", c.fbt.angular_step_deg},
                {"radial_samples", c.fbt.radial_samples},
                {"descriptor_variant", to_string(c.fbt.variant)}};
  }
  j["occlusion"] = c.occlusion ? json(to_string(*c.occlusion)) : json(nullptr);
  if (c.eye_noise) {
    j["eye_noise"] = {{"mean_px", c.eye_noise->model.mean_px},
                      {"sd_px", c.eye_noise->model.sd_px},
                      {"seed", c.eye_noise->seed}};
  } else {
    j["eye_noise"] = nullptr;
  }
  j["fingerprint"] = c.fingerprint();
  return j;
}

json exclusions_json(const std::vector<Exclusion>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back({{"id", e.id}, {"reason", e.reason}});
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace

std::string ExperimentConfig::fingerprint() const {
  if (classifier == ClassifierKind::pca_baseline) return "pixels/130x150";
  return "mode=" + to_string(mode) + "/" + fbt.fingerprint();
}

ModelBundle train_bundle(const ExperimentConfig& config, const std::vector<LabeledSample>& gallery) {
  std::vector<FeatureVector> features;
  std::vector<std::string> labels;
  std::vector<std::string> ids;
  for (const auto& g : gallery) {
    features.push_back(g.features);
    labels.push_back(g.subject);
    ids.push_back(g.id);
  }
  ModelBundle bundle;
  bundle.model = train_pfld(build_matrix(features, ids), labels);
  bundle.prototypes = std::move(features);
  bundle.fingerprint = config.fingerprint();
  return bundle;
}

PreparedDataset prepare(const ExperimentConfig& config, const DatasetManifest& manifest) {
  std::optional<DescriptorExtractor> extractor;
  if (config.classifier == ClassifierKind::pfld) extractor.emplace(config.fbt, config.mode);

  const std::size_t n = manifest.entries.size();
  std::vector<std::optional<RasterImage>> images(n);
  std::vector<std::string> load_errors(n);
  std::vector<Attempt> attempts(n);
  detail::parallel_for(n, config.threads, [&](std::size_t i) {
    const ManifestEntry& entry = manifest.entries[i];
    try {
      images[i] = read_pgm(entry.image_path);
    } catch (const ImageIoError& e) {
      load_errors[i] = e.what();
      return;
    }
    EyeCoordinates eyes = entry.eyes;
    if (config.eye_noise) {
      eyes = perturb_eyes(eyes, config.eye_noise->model, detail::stream_seed(config.eye_noise->seed, i));
    }
    attempts[i] = try_register(*images[i], eyes);
  });

  PreparedDataset out;
  EyeCoordinates sum;
  std::size_t located = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!attempts[i].face) continue;
    sum.left.x += attempts[i].eyes.left.x;
    sum.left.y += attempts[i].eyes.left.y;
    sum.right.x += attempts[i].eyes.right.x;
    sum.right.y += attempts[i].eyes.right.y;
    ++located;
  }
  if (located > 0) {
    const double k = static_cast<double>(located);
    const EyeCoordinates mean{{sum.left.x / k, sum.left.y / k}, {sum.right.x / k, sum.right.y / k}};
    for (std::size_t i = 0; i < n; ++i) {
      if (attempts[i].face || !images[i]) continue;
      Attempt retry = try_register(*images[i], mean);
      if (retry.face) {
        out.fallback.push_back(manifest.entries[i].image_id);
        attempts[i] = std::move(retry);
      }
    }
  }

  std::vector<FeatureVector> features(n);
  detail::parallel_for(n, config.threads, [&](std::size_t i) {
    if (!attempts[i].face) return;
    NormalizedFace face = std::move(*attempts[i].face);
    attempts[i].face.reset();
    if (config.occlusion && is_probe(manifest.entries[i].partition)) {
      face = occlude(face, *config.occlusion);
    }
    if (extractor) {
      features[i] = extractor->extract(face);
    } else {
      features[i].assign(face.image.pixels().begin(), face.image.pixels().end());
    }
  });

  for (std::size_t i = 0; i < n; ++i) {
    const ManifestEntry& entry = manifest.entries[i];
    if (entry.eyes_imputed) out.imputed.push_back(entry.image_id);
    if (!images[i]) {
      out.excluded.push_back({entry.image_id, load_errors[i]});
      continue;
    }
    if (features[i].empty()) {
      out.excluded.push_back({entry.image_id, "registration failed: " + attempts[i].error});
      continue;
    }
    LabeledSample sample{entry.image_id, entry.subject_id, std::move(features[i])};
    (is_probe(entry.partition) ? out.probes : out.gallery).push_back(std::move(sample));
  }
  return out;
}

RunResult evaluate(const ExperimentConfig& config, const DatasetManifest& manifest) {
  const PreparedDataset data = prepare(config, manifest);
  ProtocolOptions options;
  options.classifier = config.classifier;
  options.threads = config.threads;
  RunResult result;
  result.outcome = run_experiment(data.gallery, data.probes, options);
  result.roc = build_roc(result.outcome.run);
  result.p_verification_at_010 = verification_at_false_alarm(result.roc, 0.10);
  result.excluded = data.excluded;
  result.excluded.insert(result.excluded.end(), result.outcome.excluded.begin(),
                         result.outcome.excluded.end());
  return result;
}

void write_descriptors_csv(const std::filesystem::path& path, const PreparedDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const std::size_t dim = !data.gallery.empty() ? data.gallery.front().features.size()
                          : !data.probes.empty() ? data.probes.front().features.size()
                                                 : 0;
  out << "image_id,subject_id,partition";
  for (std::size_t k = 0; k < dim; ++k) out << ",v" << k;
  out << '\n';
  const auto rows = [&](const std::vector<LabeledSample>& v, const char* part) {
    for (const auto& s : v) {
      out << s.id << ',' << s.subject << ',' << part;
      for (double x : s.features) out << ',' << detail::format_double(x);
      out << '\n';
    }
  };
  rows(data.gallery, "gallery");
  rows(data.probes, "probe");
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::string file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open for hashing");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize k = 0; k < in.gcount(); ++k) {
      h ^= static_cast<unsigned char>(buf[k]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

RunResult run(const ExperimentConfig& config, const DatasetManifest& manifest) {
  const auto& dir = config.output_dir;
  if (dir.empty()) throw std::invalid_argument("run needs an output directory");
  std::filesystem::create_directories(dir);
  std::filesystem::remove(dir / "INCOMPLETE");

  json doc;
  doc["format"] = "fbface-run v1";
  doc["config"] = config_json(config);
  doc["seeds"] = {{"eye_noise", config.eye_noise ? json(config.eye_noise->seed) : json(nullptr)},
                  {"pca_sample", config.classifier == ClassifierKind::pca_baseline
                                     ? json(kPcaSeed)
                                     : json(nullptr)}};
  json inputs;
  inputs["manifest"] = file_hash(manifest.manifest_path);
  if (!manifest.eyes_path.empty() && std::filesystem::exists(manifest.eyes_path)) {
    inputs["eyes"] = file_hash(manifest.eyes_path);
  }
  json images = json::object();
  for (const auto& e : manifest.entries) images[e.image_id] = file_hash(e.image_path);
  inputs["images"] = images;
  doc["inputs"] = inputs;

  const auto fail = [&](const std::string& stage, const std::string& what) {
    doc["status"] = "failed";
    doc["failed_stage"] = stage;
    doc["error"] = what;
    write_text(dir / "run_manifest.json", doc.dump(2) + "\n");
    write_text(dir / "INCOMPLETE", "run failed during " + stage + ": " + what + "\n");
  };

  std::string stage = "prepare";
  try {
    const PreparedDataset data = prepare(config, manifest);
    stage = "extract";
    write_descriptors_csv(dir / "descriptors.csv", data);

    stage = "train";
    if (config.classifier == ClassifierKind::pfld) {
      save_model(dir / "model.bin", train_bundle(config, data.gallery));
    }

    stage = "verify";
    ProtocolOptions options;
    options.classifier = config.classifier;
    options.threads = config.threads;
    RunResult result;
    result.outcome = run_experiment(data.gallery, data.probes, options);
    result.roc = build_roc(result.outcome.run);
    result.p_verification_at_010 = verification_at_false_alarm(result.roc, 0.10);
    result.excluded = data.excluded;
    result.excluded.insert(result.excluded.end(), result.outcome.excluded.begin(),
                           result.outcome.excluded.end());

    stage = "report";
    write_roc_csv(dir / "roc.csv", result.roc);
    const std::string label = config.classifier == ClassifierKind::pfld
                                  ? to_string(config.mode) + " FBT"
                                  : std::string("PCA baseline");
    write_text(dir / "roc.svg", roc_svg({{label, result.roc}}, "Verification ROC"));

    doc["status"] = "ok";
    doc["excluded"] = exclusions_json(result.excluded);
    doc["imputed_eyes"] = data.imputed;
    doc["registration_fallback"] = data.fallback;
    doc["counts"] = {{"gallery", data.gallery.size()},
                     {"probes", result.outcome.run.probe_ids.size()},
                     {"subjects", result.outcome.run.gallery_ids.size()}};
    doc["results"] = {{"p_verification_at_p_false_alarm_0.10", result.p_verification_at_010},
                      {"equal_error_rate", equal_error_rate(result.roc)}};
    json artifacts = {"descriptors.csv", "roc.csv", "roc.svg", "run_manifest.json"};
    if (config.classifier == ClassifierKind::pfld) artifacts.push_back("model.bin");
    doc["artifacts"] = artifacts;
    write_text(dir / "run_manifest.json", doc.dump(2) + "\n");
    return result;
  } catch (const std::exception& e) {
    fail(stage, e.what());
    throw;
  }
}

}  // namespace fbface
