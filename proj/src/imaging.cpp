#include "ipla/imaging.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "ipla/diagnostics.hpp"

namespace ipla {

std::vector<double> disk_psf(std::size_t depth) {
  if (depth == 0 || depth % 2 == 0) throw std::invalid_argument("blur depth must be odd");
  const auto r = static_cast<std::ptrdiff_t>(depth / 2);
  const double radius_sq = 0.25 * static_cast<double>(depth * depth);
  std::vector<double> psf(depth * depth, 0.0);
  double total = 0.0;
  for (std::ptrdiff_t a = -r; a <= r; ++a) {
    for (std::ptrdiff_t b = -r; b <= r; ++b) {
      if (static_cast<double>(a * a + b * b) <= radius_sq) {
        psf[static_cast<std::size_t>((a + r) * static_cast<std::ptrdiff_t>(depth) + (b + r))] = 1.0;
        total += 1.0;
      }
    }
  }
  for (double& w : psf) w /= total;
  return psf;
}

Image phantom(std::size_t side) {
  if (side == 0) throw std::invalid_argument("phantom: side must be positive");
  Image img(static_cast<Eigen::Index>(side * side));
  const double n = static_cast<double>(side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double u = (static_cast<double>(i) + 0.5) / n;
      const double v = (static_cast<double>(j) + 0.5) / n;
      double val = 0.1;
      if (u >= 0.15 && u < 0.45 && v >= 0.1 && v < 0.55) val = 0.6;
      if (u >= 0.2 && u < 0.3 && v >= 0.65 && v < 0.9) val = 1.0;
      if (u >= 0.6 && u < 0.85 && v >= 0.12 && v < 0.35) val = 0.35;
      if ((u - 0.68) * (u - 0.68) + (v - 0.65) * (v - 0.65) < 0.04) val = 0.9;
      img[static_cast<Eigen::Index>(i * side + j)] = val;
    }
  }
  return img;
}

ImageProblem make_problem(std::size_t side, std::size_t depth, double sigma, double beta,
                          std::uint64_t seed, std::optional<Image> truth) {
  if (depth == 0 || depth % 2 == 0 || depth >= side) {
    throw std::invalid_argument("blur depth must be odd and smaller than the image side");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  ImageProblem p;
  p.side = side;
  p.truth = truth ? std::move(*truth) : phantom(side);
  require_dim(p.truth, side * side, "truth image");
  p.depth = depth;
  p.psf = disk_psf(depth);
  p.sigma = sigma;
  p.beta = beta;
  p.seed = seed;
  p.blur = std::make_shared<CirculantBlur>(p.psf, depth, side);
  p.observed = p.blur->apply(p.truth);
  RandomStream rng(seed);
  Point noise(p.observed.size());
  rng.fill_normal(noise);
  if (sigma > 0.0) p.observed += sigma * noise;
  return p;
}

double rmse(const Image& a, const Image& b) {
  if (a.size() != b.size() || a.size() == 0) throw std::invalid_argument("rmse: size mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

ImageStart parse_image_start(const std::string& name) {
  if (name == "observed") return ImageStart::observed;
  if (name == "backprojection") return ImageStart::backprojection;
  if (name == "zero") return ImageStart::zero;
  throw std::invalid_argument("unknown start '" + name + "' (expected observed, backprojection or zero)");
}

std::string to_string(ImageStart start) {
  switch (start) {
    case ImageStart::observed: return "observed";
    case ImageStart::backprojection: return "backprojection";
    case ImageStart::zero: return "zero";
  }
  return "?";
}

DeconvolutionResult deconvolve_sample(const ImageProblem& prob, const DeconvolutionSettings& s) {
  if (s.burn_in >= s.n_steps) throw std::invalid_argument("deconvolution: burn_in must be below n_steps");
  if (!(s.max_failure_rate >= 0.0)) throw std::invalid_argument("deconvolution: max_failure_rate must be >= 0");
  const double sigma = prob.sigma > 0.0 ? prob.sigma : std::numeric_limits<double>::infinity();
  auto v = std::make_shared<DeconvolutionPotential>(prob.blur, prob.observed, sigma, prob.beta);
  const auto solver = make_prox_solver("pdhg", v, s.pdhg);

  ChainConfig cfg;
  cfg.sampler = SamplerKind::ipla;
  cfg.ipla.tau = s.tau;
  cfg.ipla.delta = s.delta;
  cfg.ipla.prox_max_iterations = s.prox_max_iterations;
  cfg.ipla.warm_start = s.warm_start;
  cfg.ipla.tolerate_prox_failures = true;
  cfg.n_steps = s.n_steps;
  cfg.burn_in = s.burn_in;
  cfg.thinning = s.thinning;
  cfg.keep_samples = true;
  cfg.moment_orders.clear();
  cfg.seed = s.seed;
  switch (s.start) {
    case ImageStart::observed: cfg.x0 = prob.observed; break;
    case ImageStart::backprojection: cfg.x0 = prob.blur->adjoint(prob.observed); break;
    case ImageStart::zero: cfg.x0 = Image::Zero(prob.observed.size()); break;
  }

  const double allowed = s.max_failure_rate * static_cast<double>(s.n_steps);
  Image sum = Image::Zero(prob.observed.size());
  std::size_t count = 0;
  std::size_t failures = 0;
  auto observer = [&](const ChainState& st, const StepInfo& info) {
    if (info.prox_failed && static_cast<double>(++failures) > allowed) {
      std::ostringstream os;
      os << "deconvolution aborted: " << failures << " prox failures in " << st.step
         << " steps (last certified error " << info.prox_error << ", requested " << s.delta << ")";
      throw std::runtime_error(os.str());
    }
    if (st.step > s.burn_in) {
      sum += st.x;
      ++count;
    }
  };

  DeconvolutionResult out;
  out.start = cfg.x0;
  out.trace = run_chain(*v, solver.get(), cfg, observer);
  out.mean = sum / static_cast<double>(count);
  out.samples = out.trace.samples.size();
  for (double q : s.quantiles) out.quantiles.emplace_back(q, quantile_image(out.trace.samples, q));
  out.trace.samples.clear();
  out.steps = out.trace.steps;
  out.prox_iterations = out.trace.prox_iterations;
  out.prox_failures = out.trace.prox_failures;
  out.rmse_mean = rmse(out.mean, prob.truth);
  out.rmse_observed = rmse(prob.observed, prob.truth);
  return out;
}

// ------------------------------------------------------------------ I/O

namespace {

constexpr std::array<char, 8> kRawMagic{'I', 'P', 'L', 'A', 'I', 'M', 'G', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return v;
}

// Next header token of a PGM file, skipping whitespace and # comments.
std::string pgm_token(std::istream& is) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

std::size_t parse_size(const std::string& tok, const std::string& path) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw IoError(path + ": malformed PGM header");
  }
  return static_cast<std::size_t>(std::stoull(tok));
}

}  // namespace

void write_pgm(const std::string& path, const Image& image, std::size_t side) {
  require_dim(image, side * side, "pgm export");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "P5\n" << side << " " << side << "\n255\n";
  std::vector<unsigned char> bytes(side * side);
  for (std::size_t k = 0; k < bytes.size(); ++k) {
    const double v = std::clamp(image[static_cast<Eigen::Index>(k)], 0.0, 1.0);
    bytes[k] = static_cast<unsigned char>(std::lround(255.0 * (std::isnan(v) ? 0.0 : v)));
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError("failed writing " + path);
}

Image read_pgm(const std::string& path, std::size_t* side) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  if (pgm_token(is) != "P5") throw IoError(path + ": not a binary PGM (P5)");
  const std::size_t w = parse_size(pgm_token(is), path);
  const std::size_t h = parse_size(pgm_token(is), path);
  const std::size_t maxval = parse_size(pgm_token(is), path);
  if (w == 0 || w != h) throw IoError(path + ": image must be square");
  if (maxval == 0 || maxval > 255) throw IoError(path + ": only 8-bit PGM is supported");
  std::vector<unsigned char> bytes(w * h);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (is.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError(path + ": truncated PGM data");
  Image img(static_cast<Eigen::Index>(w * h));
  for (std::size_t k = 0; k < bytes.size(); ++k) {
    img[static_cast<Eigen::Index>(k)] = static_cast<double>(bytes[k]) / static_cast<double>(maxval);
  }
  if (side) *side = w;
  return img;
}

void write_raw(const std::string& path, const Image& image, std::size_t side) {
  require_dim(image, side * side, "raw export");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(kRawMagic.data(), kRawMagic.size());
  put_u64(os, side);
  for (Eigen::Index k = 0; k < image.size(); ++k) put_u64(os, std::bit_cast<std::uint64_t>(image[k]));
  if (!os) throw IoError("failed writing " + path);
}

Image read_raw(const std::string& path, std::size_t* side) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kRawMagic) throw IoError(path + ": bad raw image magic");
  const std::uint64_t n = get_u64(is);
  if (!is || n == 0 || n > (1u << 20)) throw IoError(path + ": bad raw image side");
  Image img(static_cast<Eigen::Index>(n * n));
  for (Eigen::Index k = 0; k < img.size(); ++k) {
    const std::uint64_t bits = get_u64(is);
    if (!is) throw IoError(path + ": truncated raw image data");
    img[k] = std::bit_cast<double>(bits);
  }
  if (side) *side = static_cast<std::size_t>(n);
  return img;
}

}  // namespace ipla
