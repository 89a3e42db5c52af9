#include "fbface/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "seeding.hpp"

namespace fbface {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string where(const std::filesystem::path& path, int line) {
  return path.string() + ":" + std::to_string(line) + ": ";
}

double parse_number(const std::string& text, const std::filesystem::path& path, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ManifestError(where(path, line) + "'" + text + "' is not a number");
  }
}

}  // namespace

std::string to_string(Partition p) {
  switch (p) {
    case Partition::gallery: return "gallery";
    case Partition::probe_fb: return "probe_fb";
    case Partition::probe_dup1: return "probe_dup1";
    case Partition::probe_dup2: return "probe_dup2";
    case Partition::probe_fc: return "probe_fc";
    case Partition::custom: return "custom";
  }
  return "custom";
}

Partition parse_partition(const std::string& text) {
  for (Partition p : {Partition::gallery, Partition::probe_fb, Partition::probe_dup1,
                      Partition::probe_dup2, Partition::probe_fc, Partition::custom}) {
    if (text == to_string(p)) return p;
  }
  throw std::invalid_argument("unknown partition '" + text + "'");
}

std::map<std::string, EyeCoordinates> read_eye_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError(path.string() + ": cannot open eye sidecar");
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || trim(line) != kEyeColumns) {
    throw ManifestError(where(path, lineno) + "expected header '" + kEyeColumns + "'");
  }
  std::map<std::string, EyeCoordinates> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw ManifestError(where(path, lineno) + "expected 5 fields");
    // Rows with blank coordinates mark faces that were not located.
    if (std::any_of(f.begin() + 1, f.end(), [](const std::string& s) { return s.empty(); })) {
      continue;
    }
    EyeCoordinates e{{parse_number(f[1], path, lineno), parse_number(f[2], path, lineno)},
                     {parse_number(f[3], path, lineno), parse_number(f[4], path, lineno)}};
    if (!out.emplace(f[0], e).second) {
      throw ManifestError(where(path, lineno) + "duplicate image_id '" + f[0] + "'");
    }
  }
  return out;
}

void write_eye_sidecar(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, EyeCoordinates>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << kEyeColumns << '\n';
  for (const auto& [id, e] : rows) {
    out << id << ',' << detail::format_double(e.left.x) << ',' << detail::format_double(e.left.y)
        << ',' << detail::format_double(e.right.x) << ',' << detail::format_double(e.right.y)
        << '\n';
  }
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

DatasetManifest ingest(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ManifestError(manifest_path.string() + ": cannot open manifest");
  const auto root = manifest_path.parent_path();

  DatasetManifest manifest;
  manifest.manifest_path = manifest_path;
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line) || trim(line).rfind(kManifestMagic, 0) != 0) {
    throw ManifestError(where(manifest_path, lineno) + "expected '" + kManifestMagic + "'");
  }
  {
    std::istringstream extra(trim(line).substr(std::string(kManifestMagic).size()));
    std::string token;
    while (extra >> token) {
      if (token.rfind("eyes=", 0) == 0) {
        manifest.eyes_path = root / token.substr(5);
      } else {
        throw ManifestError(where(manifest_path, lineno) + "unknown directive '" + token + "'");
      }
    }
  }
  ++lineno;
  if (!std::getline(in, line) || trim(line) != kManifestColumns) {
    throw ManifestError(where(manifest_path, lineno) + "expected header '" + kManifestColumns + "'");
  }

  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw ManifestError(where(manifest_path, lineno) + "expected 4 fields");
    if (f[0].empty() || f[1].empty() || f[2].empty()) {
      throw ManifestError(where(manifest_path, lineno) + "empty field");
    }
    if (!seen.insert(f[0]).second) {
      throw ManifestError(where(manifest_path, lineno) + "duplicate image_id '" + f[0] + "'");
    }
    ManifestEntry entry;
    entry.image_id = f[0];
    entry.subject_id = f[1];
    entry.image_path = std::filesystem::path(f[2]).is_absolute() ? std::filesystem::path(f[2]) : root / f[2];
    try {
      entry.partition = parse_partition(f[3]);
    } catch (const std::invalid_argument& e) {
      throw ManifestError(where(manifest_path, lineno) + e.what());
    }
    try {
      check_pgm(entry.image_path);
    } catch (const ImageIoError& e) {
      throw ManifestError(where(manifest_path, lineno) + e.what());
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (manifest.entries.empty()) throw ManifestError(manifest_path.string() + ": no entries");

  std::map<std::string, EyeCoordinates> eyes;
  if (!manifest.eyes_path.empty()) eyes = read_eye_sidecar(manifest.eyes_path);
  EyeCoordinates sum;
  std::size_t located = 0;
  for (auto& entry : manifest.entries) {
    const auto it = eyes.find(entry.image_id);
    if (it == eyes.end()) {
      entry.eyes_imputed = true;
      continue;
    }
    entry.eyes = it->second;
    sum.left.x += it->second.left.x;
    sum.left.y += it->second.left.y;
    sum.right.x += it->second.right.x;
    sum.right.y += it->second.right.y;
    ++located;
  }
  if (located < manifest.entries.size()) {
    if (located == 0) {
      throw ManifestError(manifest_path.string() + ": no eye coordinates to impute missing ones from");
    }
    const double n = static_cast<double>(located);
    const EyeCoordinates mean{{sum.left.x / n, sum.left.y / n}, {sum.right.x / n, sum.right.y / n}};
    for (auto& entry : manifest.entries) {
      if (entry.eyes_imputed) entry.eyes = mean;
    }
  }
  return manifest;
}

void write_manifest(const DatasetManifest& manifest) {
  const auto root = manifest.manifest_path.parent_path();
  std::ofstream out(manifest.manifest_path, std::ios::binary);
  if (!out) throw std::runtime_error(manifest.manifest_path.string() + ": cannot open for writing");
  out << kManifestMagic;
  if (!manifest.eyes_path.empty()) {
    out << " eyes=" << manifest.eyes_path.lexically_relative(root).generic_string();
  }
  out << '\n' << kManifestColumns << '\n';
  for (const auto& e : manifest.entries) {
    auto rel = e.image_path.lexically_relative(root);
    if (rel.empty()) rel = e.image_path;
    out << e.image_id << ',' << e.subject_id << ',' << rel.generic_string() << ','
        << to_string(e.partition) << '\n';
  }
  if (!out) throw std::runtime_error(manifest.manifest_path.string() + ": write failed");
}

namespace {

struct Blob {
  double x, y, sx, sy, amp;

  double at(double u, double v) const {
    const double du = (u - x) / sx;
    const double dv = (v - y) / sy;
    const double q = du * du + dv * dv;
    return q > 36.0 ? 0.0 : amp * std::exp(-0.5 * q);
  }
};

std::vector<Blob> subject_layout(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const EyeTargets t;
  std::vector<Blob> blobs;
  // Face oval, shared structure with per-subject proportions.
  blobs.push_back({65.0, 80.0, uni(34, 40), uni(42, 50), 0.35});
  for (const Point eye : {t.right, t.left}) {
    blobs.push_back({eye.x, eye.y, uni(4.5, 5.5), uni(3.0, 4.0), -uni(0.9, 1.1)});
    blobs.push_back({eye.x + uni(-1, 1), eye.y - uni(14, 16), uni(8.5, 9.5), uni(2.3, 2.7), -uni(0.55, 0.65)});
  }
  blobs.push_back({65.0 + uni(-2, 2), uni(86, 96), uni(4, 7), uni(6, 10), uni(0.2, 0.5)});
  blobs.push_back({65.0 + uni(-2, 2), uni(112, 122), uni(9, 15), uni(2.5, 4.5), -uni(0.5, 0.9)});
  // Identity detail around the eyes and brows.
  for (int k = 0; k < 10; ++k) {
    blobs.push_back({uni(18, 112), uni(32, 90), uni(1.5, 3.0), uni(1.5, 3.0), uni(-1.0, 1.0)});
  }
  // Identity detail in the lower face.
  for (int k = 0; k < 5; ++k) {
    blobs.push_back({uni(25, 105), uni(90, 140), uni(8, 14), uni(8, 14), uni(-0.8, 0.8)});
  }
  return blobs;
}

std::vector<Blob> expression_layout(std::mt19937_64& rng, double sd) {
  std::vector<Blob> blobs;
  if (sd <= 0.0) return blobs;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, sd);
  const auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  for (int k = 0; k < 5; ++k) {
    blobs.push_back({uni(28, 102), uni(96, 142), uni(5, 11), uni(4, 9), gauss(rng)});
  }
  return blobs;
}

}  // namespace

DatasetManifest synth_dataset(const SynthOptions& o, const std::filesystem::path& out_dir) {
  if (o.subjects < 2) throw std::invalid_argument("synthetic dataset needs at least two subjects");
  if (o.images_per_subject < 1) throw std::invalid_argument("need at least one image per subject");
  if (!(o.noise_sd >= 0.0) || !(o.expression_sd >= 0.0)) {
    throw std::invalid_argument("noise levels must be non-negative");
  }
  if (o.width < 100 || o.height < 100) throw std::invalid_argument("synthetic images must be >= 100 px");

  const auto image_dir = out_dir / "images";
  std::error_code ec;
  std::filesystem::create_directories(image_dir, ec);
  if (ec) throw std::runtime_error(image_dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.manifest_path = out_dir / "manifest.csv";
  manifest.eyes_path = out_dir / "eyes.csv";
  std::vector<std::pair<std::string, EyeCoordinates>> eye_rows;
  const EyeTargets targets;
  const double target_distance = targets.left.x - targets.right.x;

  char name[64];
  for (int s = 0; s < o.subjects; ++s) {
    std::mt19937_64 subject_rng(detail::stream_seed(o.seed, 1, static_cast<std::uint64_t>(s)));
    const auto layout = subject_layout(subject_rng);
    std::snprintf(name, sizeof name, "s%03d", s);
    const std::string subject = name;

    for (int k = 0; k < o.images_per_subject; ++k) {
      std::mt19937_64 rng(detail::stream_seed(o.seed, 2, (static_cast<std::uint64_t>(s) << 20) | k));
      std::uniform_real_distribution<double> sym(-1.0, 1.0);
      std::normal_distribution<double> gauss(0.0, 1.0);

      const double angle = o.jitter_rotation_deg * sym(rng) * std::numbers::pi / 180.0;
      const double dist = target_distance * (1.0 + o.jitter_scale * sym(rng));
      const Point mid{0.5 * o.width + o.jitter_shift_px * sym(rng),
                      0.42 * o.height + o.jitter_shift_px * sym(rng)};
      const Point axis{std::cos(angle) * dist / 2.0, std::sin(angle) * dist / 2.0};
      const EyeCoordinates eyes{{mid.x + axis.x, mid.y + axis.y}, {mid.x - axis.x, mid.y - axis.y}};
      auto blobs = layout;
      const auto expression = expression_layout(rng, o.expression_sd);
      blobs.insert(blobs.end(), expression.begin(), expression.end());

      // Inverse of the registration warp: source pixel -> frame coordinates.
      const double scale = target_distance / dist;
      const double c = std::cos(-angle) * scale;
      const double sn = std::sin(-angle) * scale;
      RasterImage image(o.width, o.height);
      for (int y = 0; y < o.height; ++y) {
        for (int x = 0; x < o.width; ++x) {
          const double dx = x - eyes.right.x;
          const double dy = y - eyes.right.y;
          const double u = targets.right.x + c * dx - sn * dy;
          const double v = targets.right.y + sn * dx + c * dy;
          double f = 0.0;
          for (const Blob& b : blobs) f += b.at(u, v);
          double noise = 0.0;
          if (o.noise_sd > 0.0) noise = o.noise_sd * gauss(rng);
          image.at(x, y) = 128.0 + o.amplitude * (f + noise);
        }
      }

      std::snprintf(name, sizeof name, "%s_%02d", subject.c_str(), k);
      const std::string id = name;
      const auto path = image_dir / (id + ".pgm");
      write_pgm(path, image);
      eye_rows.emplace_back(id, eyes);
      manifest.entries.push_back(
          {id, subject, path, eyes, false, k == 0 ? Partition::gallery : Partition::probe_fb});
    }
  }
  write_eye_sidecar(manifest.eyes_path, eye_rows);
  write_manifest(manifest);
  return manifest;
}

}  // namespace fbface
