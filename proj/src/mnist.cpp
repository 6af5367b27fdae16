#include "isg/mnist.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "isg/rng.hpp"

namespace isg {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  if (off + 4 > b.size()) throw std::runtime_error("IDX: truncated header");
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

void write_be32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

ImageSet parse_idx_images(const std::vector<std::uint8_t>& bytes) {
  if (read_be32(bytes, 0) != kImageMagic)
    throw std::runtime_error("IDX: bad magic for image tensor (want 0x00000803)");
  const std::uint32_t count = read_be32(bytes, 4);
  const std::uint32_t rows = read_be32(bytes, 8);
  const std::uint32_t cols = read_be32(bytes, 12);
  if (count > (1u << 24) || rows > 4096 || cols > 4096)
    throw std::runtime_error("IDX: dimension overflow");
  const std::size_t payload = std::size_t(count) * rows * cols;
  if (bytes.size() != 16 + payload)
    throw std::runtime_error("IDX: payload length mismatch (expected " +
                             std::to_string(16 + payload) + " bytes, got " +
                             std::to_string(bytes.size()) + ")");
  ImageSet set;
  set.count = static_cast<int>(count);
  set.rows = static_cast<int>(rows);
  set.cols = static_cast<int>(cols);
  set.pixels.assign(bytes.begin() + 16, bytes.end());
  return set;
}

std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes) {
  if (read_be32(bytes, 0) != kLabelMagic)
    throw std::runtime_error("IDX: bad magic for label vector (want 0x00000801)");
  const std::uint32_t count = read_be32(bytes, 4);
  if (count > (1u << 24)) throw std::runtime_error("IDX: dimension overflow");
  if (bytes.size() != 8 + std::size_t(count))
    throw std::runtime_error("IDX: payload length mismatch for labels");
  return std::vector<std::uint8_t>(bytes.begin() + 8, bytes.end());
}

std::vector<std::uint8_t> serialize_idx_images(const ImageSet& set) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + set.pixels.size());
  write_be32(out, kImageMagic);
  write_be32(out, static_cast<std::uint32_t>(set.count));
  write_be32(out, static_cast<std::uint32_t>(set.rows));
  write_be32(out, static_cast<std::uint32_t>(set.cols));
  out.insert(out.end(), set.pixels.begin(), set.pixels.end());
  return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  if (raw.size() < 2 || raw[0] != 0x1f || raw[1] != 0x8b) return raw;

  gzFile gz = gzopen(path.c_str(), "rb");
  if (!gz) throw std::runtime_error("gzopen failed: " + path);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int got;
  while ((got = gzread(gz, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + got);
  bool ok = got == 0;
  gzclose(gz);
  if (!ok) throw std::runtime_error("gzip inflate failed: " + path);
  return out;
}

BWImage binarize(const ImageSet& set, int index, double threshold) {
  if (index < 0 || index >= set.count) throw std::invalid_argument("binarize: index out of range");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("binarize: threshold must be in (0,1)");
  BWImage img;
  img.rows = set.rows;
  img.cols = set.cols;
  img.spins.resize(std::size_t(set.rows) * set.cols);
  const std::uint8_t* px = set.image(index);
  for (std::size_t i = 0; i < img.spins.size(); ++i)
    img.spins[i] = px[i] / 255.0 > threshold ? +1 : -1;
  return img;
}

LearnedParams learn_params(const std::vector<BWImage>& training, double weight_scale) {
  if (training.empty()) throw std::invalid_argument("learn_params: empty training set");
  const int rows = training[0].rows, cols = training[0].cols;
  if (rows != cols) throw std::invalid_argument("learn_params: images must be square grids");
  for (const BWImage& img : training)
    if (img.rows != rows || img.cols != cols)
      throw std::invalid_argument("learn_params: image dimension mismatch");

  LearnedParams out;
  out.rows = rows;
  out.cols = cols;

  const std::vector<Edge> grid = build_grid(rows);
  const double inv_m = 1.0 / static_cast<double>(training.size());

  out.weights.assign(grid.size(), 0.0);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double sum = 0.0;
    for (const BWImage& img : training)
      sum += static_cast<double>(img.spins[grid[k].u]) * img.spins[grid[k].v];
    out.weights[k] = sum * inv_m;
  }
  out.biases.assign(std::size_t(rows) * cols, 0.0);
  for (std::size_t i = 0; i < out.biases.size(); ++i) {
    double sum = 0.0;
    for (const BWImage& img : training) sum += img.spins[i];
    out.biases[i] = sum * inv_m;
  }

  double wmax = 0.0, bmax = 0.0;
  for (double w : out.weights) wmax = std::max(wmax, std::abs(w));
  for (double b : out.biases) bmax = std::max(bmax, std::abs(b));
  if (wmax > 0.0)
    for (double& w : out.weights) w *= weight_scale / wmax;
  if (bmax > 0.0)
    for (double& b : out.biases) b /= bmax;
  return out;
}

IsingModel observation_model(const LearnedParams& params, const BWImage& noisy, double p) {
  if (!(p > 0.0 && p < 0.5))
    throw std::invalid_argument("observation_model: p must be in (0, 0.5)");
  if (noisy.rows != params.rows || noisy.cols != params.cols)
    throw std::invalid_argument("observation_model: image dimension mismatch");

  const double evidence = 0.5 * std::log((1.0 - p) / p);
  std::vector<double> biases(params.biases.size());
  double bmax = 0.0;
  for (std::size_t i = 0; i < biases.size(); ++i) {
    biases[i] = params.biases[i] + evidence * noisy.spins[i];
    bmax = std::max(bmax, std::abs(biases[i]));
  }
  if (bmax > 0.0)
    for (double& b : biases) b /= bmax;

  std::vector<Edge> edges = build_grid(params.rows);
  for (std::size_t k = 0; k < edges.size(); ++k) edges[k].w = params.weights[k];

  ModelMeta meta;
  meta.model_class = "mnist";
  return IsingModel(params.rows * params.cols, std::move(edges), std::move(biases), params.rows,
                    std::move(meta));
}

BWImage add_noise(const BWImage& image, double p, std::uint64_t seed) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("add_noise: p must be in [0,1]");
  Rng rng = Rng(seed).stream("noise");
  BWImage out = image;
  for (std::int8_t& s : out.spins)
    if (rng.bernoulli(p)) s = -s;
  return out;
}

}  // namespace isg
