#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "stf/tensor.hpp"

namespace stf {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Labeled images, channel-major, pixel values in [0,1].
struct Dataset {
  std::size_t channels = 3;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_classes = 10;
  std::vector<float> images;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_numel() const { return channels * height * width; }

  /// [n, C, H, W] for the given sample indices.
  Tensor batch_images(std::span<const std::size_t> indices) const;
  std::vector<int> batch_labels(std::span<const std::size_t> indices) const;
  Dataset slice(std::size_t begin, std::size_t count) const;
  void validate() const;
};

inline constexpr std::size_t kCifarRecordBytes = 3073;

/// One CIFAR-10 binary batch: records of 1 label byte followed by 3072 pixel
/// bytes (R plane, G plane, B plane; each 32x32 row-major).
Dataset load_cifar10_binary(const std::filesystem::path& file);
/// Concatenation of several batch files.
Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& files);

enum class SyntheticGenerator {
  /// 4 classes: horizontal, vertical, diagonal and anti-diagonal bars with a
  /// random offset, random colour in [0.5,1] per channel, background noise in
  /// [0, 0.3].
  bars,
  /// 2 classes: a bright square (side size/4, values in [0.7,1]) in the left
  /// (class 0) or right (class 1) half over background in [0, 0.05]. The
  /// left-minus-right pixel sum separates the classes.
  blobs,
  /// The bars classes with overlapping intensities: background noise in
  /// [0, 0.5], colour in [0.35, 0.85], and each bar pixel drawn only with
  /// probability 3/4. Not separable at 100%.
  noisy_bars,
};

std::optional<SyntheticGenerator> parse_generator(std::string_view name);
std::string_view to_string(SyntheticGenerator generator);
std::size_t generator_classes(SyntheticGenerator generator);

/// Deterministic in (generator, n, seed, size). Labels cycle 0..K-1 so class
/// counts are balanced whenever K divides n.
Dataset synthetic_dataset(SyntheticGenerator generator, std::size_t n, std::uint64_t seed,
                          std::size_t image_size = 16);

}  // namespace stf
