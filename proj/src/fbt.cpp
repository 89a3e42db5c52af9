#include "fbface/fbt.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "binary_io.hpp"

namespace fbface {

std::string to_string(DescriptorVariant v) {
  return v == DescriptorVariant::raw ? "raw_372" : "magnitude_186";
}

DescriptorVariant parse_descriptor_variant(const std::string& text) {
  if (text == "raw_372" || text == "raw") return DescriptorVariant::raw;
  if (text == "magnitude_186" || text == "magnitude") return DescriptorVariant::magnitude;
  throw std::invalid_argument("unknown descriptor variant '" + text + "'");
}

void FbtConfig::validate() const {
  if (max_order < 0 || max_order > kMaxBesselOrder) {
    throw std::invalid_argument("max_order must lie in [0, " + std::to_string(kMaxBesselOrder) +
                                "]");
  }
  if (max_root < 1) throw std::invalid_argument("max_root must be at least 1");
  if (!(angular_step_deg > 0.0) || angular_step_deg > 360.0) {
    throw std::invalid_argument("angular step must lie in (0, 360]");
  }
  const double count = 360.0 / angular_step_deg;
  if (std::abs(count - std::round(count)) > 1e-9) {
    throw std::invalid_argument("360 must be divisible by the angular step");
  }
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw std::invalid_argument("radius must be positive");
  }
  if (radial_samples < 0) throw std::invalid_argument("radial_samples must be non-negative");
  if (rings() < 8) throw std::invalid_argument("at least 8 radial samples are required");
}

int FbtConfig::angular_samples() const {
  return static_cast<int>(std::lround(360.0 / angular_step_deg));
}

int FbtConfig::rings() const {
  return radial_samples > 0 ? radial_samples : static_cast<int>(std::ceil(radius - 1e-9));
}

std::size_t FbtConfig::descriptor_length() const {
  const auto per_block = static_cast<std::size_t>(max_order + 1) * max_root;
  return variant == DescriptorVariant::raw ? 2 * per_block : per_block;
}

std::string FbtConfig::fingerprint() const {
  std::ostringstream os;
  os << "fbt/order=" << max_order << "/root=" << max_root
     << "/step=" << detail::format_double(angular_step_deg) << "/rings=";
  if (radial_samples > 0) {
    os << radial_samples;
  } else {
    os << "auto";
  }
  os << "/variant=" << to_string(variant);
  return os.str();
}

PolarGrid::PolarGrid(double radius, int rings, int angles)
    : radius_(radius), rings_(rings), angles_(angles) {
  if (!(radius > 0.0) || rings < 1 || angles < 1) {
    throw std::invalid_argument("invalid polar grid geometry");
  }
  values_.assign(static_cast<std::size_t>(rings + 1) * angles, 0.0);
}

double PolarGrid::ring_radius(int j) const {
  if (j >= rings_) return radius_;
  return (j + 0.5) * radius_ / rings_;
}

double PolarGrid::angle(int k) const { return 2.0 * std::numbers::pi * k / angles_; }

FbtEngine::FbtEngine(FbtConfig config) : config_(config) {
  config_.validate();
  roots_ = shared_root_table(config_.max_order, config_.max_root);
  rings_ = config_.rings();
  rows_ = rings_ + 1;
  angles_ = config_.angular_samples();

  const PolarGrid geometry(config_.radius, rings_, angles_);
  const int orders = config_.max_order + 1;
  const int nroots = config_.max_root;
  const double r2 = config_.radius * config_.radius;

  radial_.resize(static_cast<std::size_t>(orders) * nroots * rows_);
  norm_.resize(static_cast<std::size_t>(orders) * nroots);
  for (int n = 0; n < orders; ++n) {
    for (int i = 0; i < nroots; ++i) {
      const double alpha = roots_->root(n, i + 1);
      for (int j = 0; j < rows_; ++j) {
        radial_[(static_cast<std::size_t>(n) * nroots + i) * rows_ + j] =
            j == rings_ ? 0.0 : bessel_j(n, alpha * geometry.ring_radius(j) / config_.radius);
      }
      const double jn1 = bessel_j(n + 1, alpha);
      const double scale = n == 0 ? 1.0 : 2.0;
      norm_[static_cast<std::size_t>(n) * nroots + i] =
          scale / (std::numbers::pi * r2 * jn1 * jn1);
    }
  }

  cos_.resize(static_cast<std::size_t>(orders) * angles_);
  sin_.resize(cos_.size());
  for (int n = 0; n < orders; ++n) {
    for (int k = 0; k < angles_; ++k) {
      const double t = n * geometry.angle(k);
      cos_[static_cast<std::size_t>(n) * angles_ + k] = std::cos(t);
      sin_[static_cast<std::size_t>(n) * angles_ + k] = std::sin(t);
    }
  }
}

PolarGrid FbtEngine::empty_grid() const { return PolarGrid(config_.radius, rings_, angles_); }

PolarGrid FbtEngine::to_polar(const RasterImage& image, Point center) const {
  const double radius = config_.radius;
  constexpr double kSlack = 1e-9;
  if (center.x - radius < -0.5 - kSlack || center.y - radius < -0.5 - kSlack ||
      center.x + radius > image.width() - 0.5 + kSlack ||
      center.y + radius > image.height() - 0.5 + kSlack) {
    throw std::invalid_argument("polar disk of radius " + detail::format_double(radius) +
                                " leaves the image");
  }
  PolarGrid grid = empty_grid();
  for (int j = 0; j < rings_; ++j) {
    const double r = grid.ring_radius(j);
    for (int k = 0; k < angles_; ++k) {
      const double t = grid.angle(k);
      grid.value(j, k) = image.sample_bilinear(center.x + r * std::cos(t), center.y + r * std::sin(t));
    }
  }
  return grid;
}

FbtDescriptor FbtEngine::forward(const PolarGrid& grid) const {
  if (grid.rings() != rings_ || grid.angles() != angles_ || grid.radius() != config_.radius) {
    throw std::invalid_argument("polar grid does not match the engine configuration");
  }
  const int orders = config_.max_order + 1;
  const int nroots = config_.max_root;

  // Angular projections per ring: cos_proj(n, j) = sum_k f(j, k) cos(n theta_k).
  std::vector<double> cos_proj(static_cast<std::size_t>(orders) * rings_);
  std::vector<double> sin_proj(cos_proj.size());
  for (int n = 0; n < orders; ++n) {
    const double* c = &cos_[static_cast<std::size_t>(n) * angles_];
    const double* s = &sin_[static_cast<std::size_t>(n) * angles_];
    for (int j = 0; j < rings_; ++j) {
      double sc = 0.0;
      double ss = 0.0;
      for (int k = 0; k < angles_; ++k) {
        const double f = grid.value(j, k);
        sc += f * c[k];
        ss += f * s[k];
      }
      cos_proj[static_cast<std::size_t>(n) * rings_ + j] = sc;
      sin_proj[static_cast<std::size_t>(n) * rings_ + j] = ss;
    }
  }

  const double area = grid.ring_width() * (2.0 * std::numbers::pi / angles_);
  FbtDescriptor out{Eigen::MatrixXd::Zero(orders, nroots), Eigen::MatrixXd::Zero(orders, nroots),
                    config_};
  for (int n = 0; n < orders; ++n) {
    for (int i = 0; i < nroots; ++i) {
      double sa = 0.0;
      double sb = 0.0;
      for (int j = 0; j < rings_; ++j) {
        const double w = grid.ring_radius(j) * radial(n, i, j);
        sa += w * cos_proj[static_cast<std::size_t>(n) * rings_ + j];
        sb += w * sin_proj[static_cast<std::size_t>(n) * rings_ + j];
      }
      const double scale = norm_[static_cast<std::size_t>(n) * nroots + i] * area;
      out.a_coeffs(n, i) = scale * sa;
      out.b_coeffs(n, i) = n == 0 ? 0.0 : scale * sb;
    }
  }
  return out;
}

FbtDescriptor FbtEngine::forward(const RasterImage& image, Point center) const {
  return forward(to_polar(image, center));
}

void FbtEngine::check_compatible(const FbtDescriptor& d) const {
  if (d.a_coeffs.rows() != config_.max_order + 1 || d.a_coeffs.cols() != config_.max_root ||
      d.b_coeffs.rows() != d.a_coeffs.rows() || d.b_coeffs.cols() != d.a_coeffs.cols()) {
    throw std::invalid_argument("descriptor shape does not match the engine configuration");
  }
}

PolarGrid FbtEngine::inverse(const FbtDescriptor& descriptor) const {
  check_compatible(descriptor);
  const int orders = config_.max_order + 1;
  const int nroots = config_.max_root;
  PolarGrid grid = empty_grid();
  std::vector<double> ring_a(orders);
  std::vector<double> ring_b(orders);
  for (int j = 0; j < rings_; ++j) {
    for (int n = 0; n < orders; ++n) {
      double sa = 0.0;
      double sb = 0.0;
      for (int i = 0; i < nroots; ++i) {
        sa += descriptor.a_coeffs(n, i) * radial(n, i, j);
        sb += descriptor.b_coeffs(n, i) * radial(n, i, j);
      }
      ring_a[n] = sa;
      ring_b[n] = sb;
    }
    for (int k = 0; k < angles_; ++k) {
      double v = 0.0;
      for (int n = 0; n < orders; ++n) {
        v += ring_a[n] * cos_[static_cast<std::size_t>(n) * angles_ + k] +
             ring_b[n] * sin_[static_cast<std::size_t>(n) * angles_ + k];
      }
      grid.value(j, k) = v;
    }
  }
  return grid;
}

double FbtEngine::evaluate(const FbtDescriptor& descriptor, double r, double theta) const {
  check_compatible(descriptor);
  if (r < 0.0 || r > config_.radius) throw std::invalid_argument("radius outside the disk");
  double v = 0.0;
  for (int n = 0; n <= config_.max_order; ++n) {
    const double c = std::cos(n * theta);
    const double s = std::sin(n * theta);
    for (int i = 0; i < config_.max_root; ++i) {
      const double a = descriptor.a_coeffs(n, i);
      const double b = descriptor.b_coeffs(n, i);
      if (a == 0.0 && b == 0.0) continue;
      const double jr = bessel_j(n, roots_->root(n, i + 1) * r / config_.radius);
      v += jr * (a * c + b * s);
    }
  }
  return v;
}

PolarGrid to_polar(const RasterImage& image, Point center, const FbtConfig& config) {
  return FbtEngine(config).to_polar(image, center);
}

FbtDescriptor fbt_forward(const RasterImage& image, Point center, const FbtConfig& config) {
  return FbtEngine(config).forward(image, center);
}

PolarGrid fbt_inverse(const FbtDescriptor& descriptor) {
  return FbtEngine(descriptor.config).inverse(descriptor);
}

std::vector<double> flatten(const FbtDescriptor& d) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * d.a_coeffs.size()));
  for (const Eigen::MatrixXd* block : {&d.a_coeffs, &d.b_coeffs}) {
    for (Eigen::Index n = 0; n < block->rows(); ++n) {
      for (Eigen::Index i = 0; i < block->cols(); ++i) out.push_back((*block)(n, i));
    }
  }
  return out;
}

std::vector<double> magnitudes(const FbtDescriptor& d) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(d.a_coeffs.size()));
  for (Eigen::Index n = 0; n < d.a_coeffs.rows(); ++n) {
    for (Eigen::Index i = 0; i < d.a_coeffs.cols(); ++i) {
      out.push_back(std::hypot(d.a_coeffs(n, i), d.b_coeffs(n, i)));
    }
  }
  return out;
}

std::vector<double> descriptor_vector(const FbtDescriptor& d) {
  return d.config.variant == DescriptorVariant::raw ? flatten(d) : magnitudes(d);
}

void write_descriptor_binary(const std::filesystem::path& path, const FbtDescriptor& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  for (double v : flatten(d)) detail::write_f64(out, v);
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

std::vector<double> read_descriptor_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open descriptor");
  const auto bytes = std::filesystem::file_size(path);
  if (bytes % sizeof(double) != 0) throw std::runtime_error(path.string() + ": truncated descriptor");
  std::vector<double> out(bytes / sizeof(double));
  for (double& v : out) v = detail::read_f64(in);
  return out;
}

void write_descriptor_csv(const std::filesystem::path& path, const FbtDescriptor& d) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  const FbtConfig& c = d.config;
  out << "# fbt max_order=" << c.max_order << " max_root=" << c.max_root
      << " angular_step=" << detail::format_double(c.angular_step_deg)
      << " radial_samples=" << c.radial_samples << " radius=" << detail::format_double(c.radius) << '\n';
  for (double v : flatten(d)) out << detail::format_double(v) << '\n';
}

FbtDescriptor read_descriptor_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path.string() + ": cannot open descriptor");
  std::string line;
  std::getline(in, line);
  std::istringstream header(line);
  std::string tag;
  header >> tag;
  if (tag != "#") throw std::runtime_error(path.string() + ": missing config header");
  header >> tag;
  if (tag != "fbt") throw std::runtime_error(path.string() + ": missing config header");
  FbtConfig config;
  while (header >> tag) {
    const auto eq = tag.find('=');
    if (eq == std::string::npos) throw std::runtime_error(path.string() + ": bad header field");
    const std::string key = tag.substr(0, eq);
    const std::string value = tag.substr(eq + 1);
    if (key == "max_order") {
      config.max_order = std::stoi(value);
    } else if (key == "max_root") {
      config.max_root = std::stoi(value);
    } else if (key == "angular_step") {
      config.angular_step_deg = std::stod(value);
    } else if (key == "radial_samples") {
      config.radial_samples = std::stoi(value);
    } else if (key == "radius") {
      config.radius = std::stod(value);
    } else {
      throw std::runtime_error(path.string() + ": unknown header field '" + key + "'");
    }
  }
  config.validate();
  const int orders = config.max_order + 1;
  FbtDescriptor d{Eigen::MatrixXd::Zero(orders, config.max_root),
                  Eigen::MatrixXd::Zero(orders, config.max_root), config};
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (!line.empty()) values.push_back(std::stod(line));
  }
  if (values.size() != 2 * static_cast<std::size_t>(d.a_coeffs.size())) {
    throw std::runtime_error(path.string() + ": expected " +
                             std::to_string(2 * d.a_coeffs.size()) + " values");
  }
  std::size_t at = 0;
  for (Eigen::MatrixXd* block : {&d.a_coeffs, &d.b_coeffs}) {
    for (int n = 0; n < orders; ++n) {
      for (int i = 0; i < config.max_root; ++i) (*block)(n, i) = values[at++];
    }
  }
  return d;
}

}  // namespace fbface
