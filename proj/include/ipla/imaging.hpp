#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ipla/blur.hpp"
#include "ipla/prox.hpp"
#include "ipla/samplers.hpp"

namespace ipla {

/// Uniform disk of diameter `depth` pixels (odd), normalised to sum 1,
/// returned as a depth x depth row-major stencil.
std::vector<double> disk_psf(std::size_t depth);

/// Piecewise-constant test image with values in [0, 1].
Image phantom(std::size_t side);

struct ImageProblem {
  std::size_t side = 0;
  Image truth;
  std::size_t depth = 1;
  std::vector<double> psf;
  double sigma = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Image observed;
  std::shared_ptr<const CirculantBlur> blur;
};

/// Blurs `truth` (the phantom when not given) with the disk PSF and adds
/// N(0, sigma^2) noise drawn from RandomStream(seed).
ImageProblem make_problem(std::size_t side, std::size_t depth, double sigma, double beta,
                          std::uint64_t seed, std::optional<Image> truth = std::nullopt);

double rmse(const Image& a, const Image& b);

enum class ImageStart { observed, backprojection, zero };
ImageStart parse_image_start(const std::string& name);
std::string to_string(ImageStart start);

struct DeconvolutionSettings {
  double tau = 1e-4;
  double delta = 0.1;  // absolute prox accuracy
  std::size_t n_steps = 550;
  std::size_t burn_in = 50;
  std::size_t thinning = 1;
  std::size_t prox_max_iterations = 2000;
  PdhgOptions pdhg;
  bool warm_start = true;
  double max_failure_rate = 0.05;
  std::uint64_t seed = 0;
  ImageStart start = ImageStart::backprojection;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
};

struct DeconvolutionResult {
  Image start;
  Image mean;
  std::vector<std::pair<double, Image>> quantiles;
  std::size_t samples = 0;
  std::size_t steps = 0;
  std::size_t prox_iterations = 0;
  std::size_t prox_failures = 0;
  double rmse_mean = 0.0;
  double rmse_observed = 0.0;
  ChainTrace trace;  // trajectory only; samples are summarised above
};

/// IPLA with the primal-dual TV prox on the deconvolution posterior.
/// Throws std::runtime_error once prox failures exceed
/// max_failure_rate * n_steps.
DeconvolutionResult deconvolve_sample(const ImageProblem& prob, const DeconvolutionSettings& s);

/// Binary PGM (P5, 8-bit). Values are clamped to [0, 1] on export.
void write_pgm(const std::string& path, const Image& image, std::size_t side);
Image read_pgm(const std::string& path, std::size_t* side = nullptr);

/// Raw float64 format: 8-byte magic "IPLAIMG1", side as little-endian
/// uint64, then side^2 little-endian doubles in row-major order.
void write_raw(const std::string& path, const Image& image, std::size_t side);
Image read_raw(const std::string& path, std::size_t* side = nullptr);

}  // namespace ipla
