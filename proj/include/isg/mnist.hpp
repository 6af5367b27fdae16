#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "isg/model.hpp"

namespace isg {

// Images from an IDX container (big-endian headers, raw byte payload).
struct ImageSet {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;  // empty unless attach_labels()

  const std::uint8_t* image(int index) const { return pixels.data() + std::size_t(index) * rows * cols; }
  bool has_labels() const { return !labels.empty(); }
};

// Black/white image as spins, +1 = ink.
struct BWImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::int8_t> spins;  // rows * cols, entries in {-1,+1}
};

// Parsers for the two IDX layouts used by MNIST: magic 0x00000803 for a
// 3-D image tensor and 0x00000801 for a 1-D label vector. Bad magic,
// truncated payload, and overflowing dimensions are distinct errors.
ImageSet parse_idx_images(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> parse_idx_labels(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> serialize_idx_images(const ImageSet& set);
std::vector<std::uint8_t> serialize_idx_labels(const std::vector<std::uint8_t>& labels);

// Reads a file, inflating it first when it is gzip-compressed.
std::vector<std::uint8_t> read_file_maybe_gzip(const std::string& path);

// Threshold on the pixel value scaled to [0,1] by /255; strictly above
// the threshold maps to +1, ties to -1.
BWImage binarize(const ImageSet& set, int index, double threshold = 0.5);

// Grid Ising parameters learned from binarized training images:
// raw weight of a grid edge is the mean product of its endpoint spins,
// raw bias the mean spin. Weights are rescaled so max |w| = weight_scale
// and biases so max |b| = 1 (all-zero raws are left as zeros).
struct LearnedParams {
  int rows = 0;
  int cols = 0;
  std::vector<double> weights;  // canonical grid edge order
  std::vector<double> biases;
};

LearnedParams learn_params(const std::vector<BWImage>& training, double weight_scale);

// Per-test-image de-noising model: learned weights, and observed biases
//   b_i + (1/2) I_i ln((1-p)/p)
// rescaled so max |b| = 1. p is the pixel flip probability, in (0, 0.5).
IsingModel observation_model(const LearnedParams& params, const BWImage& noisy, double p);

// Flip each spin independently with probability p.
BWImage add_noise(const BWImage& image, double p, std::uint64_t seed);

}  // namespace isg
