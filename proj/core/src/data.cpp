#include "stf/data.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <string>

#include "stf/rng.hpp"

namespace stf {

Tensor Dataset::batch_images(std::span<const std::size_t> indices) const {
  const std::size_t n = image_numel();
  std::vector<float> data;
  data.reserve(indices.size() * n);
  for (std::size_t i : indices) {
    if (i >= size()) throw std::out_of_range("dataset index " + std::to_string(i) + " out of range");
    auto first = images.begin() + static_cast<std::ptrdiff_t>(i * n);
    data.insert(data.end(), first, first + static_cast<std::ptrdiff_t>(n));
  }
  return Tensor::from_data({indices.size(), channels, height, width}, std::move(data));
}

std::vector<int> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > size()) throw std::out_of_range("dataset slice out of range");
  Dataset d = *this;
  const std::size_t n = image_numel();
  d.images.assign(images.begin() + static_cast<std::ptrdiff_t>(begin * n),
                  images.begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  d.labels.assign(labels.begin() + static_cast<std::ptrdiff_t>(begin),
                  labels.begin() + static_cast<std::ptrdiff_t>(begin + count));
  return d;
}

void Dataset::validate() const {
  if (images.size() != size() * image_numel()) throw DatasetError("dataset: image buffer size mismatch");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      throw DatasetError("dataset: label " + std::to_string(y) + " outside [0, " +
                         std::to_string(num_classes) + ")");
    }
  }
}

Dataset load_cifar10_binary(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DatasetError("cannot open CIFAR-10 batch " + file.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Dataset d;
  d.channels = 3;
  d.height = 32;
  d.width = 32;
  d.num_classes = 10;
  const std::size_t records = bytes.size() / kCifarRecordBytes;
  if (bytes.size() % kCifarRecordBytes != 0) {
    throw DatasetError(file.string() + ": truncated record at byte offset " +
                       std::to_string(records * kCifarRecordBytes) + " (file size " +
                       std::to_string(bytes.size()) + ")");
  }
  d.images.resize(records * 3072);
  d.labels.resize(records);
  for (std::size_t r = 0; r < records; ++r) {
    const std::size_t offset = r * kCifarRecordBytes;
    const unsigned label = bytes[offset];
    if (label > 9) {
      throw DatasetError(file.string() + ": label " + std::to_string(label) + " > 9 at byte offset " +
                         std::to_string(offset));
    }
    d.labels[r] = static_cast<int>(label);
    for (std::size_t p = 0; p < 3072; ++p) {
      d.images[r * 3072 + p] = static_cast<float>(bytes[offset + 1 + p]) / 255.0f;
    }
  }
  return d;
}

Dataset load_cifar10_binary(const std::vector<std::filesystem::path>& files) {
  if (files.empty()) throw DatasetError("no CIFAR-10 batch files given");
  Dataset all = load_cifar10_binary(files.front());
  for (std::size_t i = 1; i < files.size(); ++i) {
    Dataset d = load_cifar10_binary(files[i]);
    all.images.insert(all.images.end(), d.images.begin(), d.images.end());
    all.labels.insert(all.labels.end(), d.labels.begin(), d.labels.end());
  }
  return all;
}

std::optional<SyntheticGenerator> parse_generator(std::string_view name) {
  if (name == "bars") return SyntheticGenerator::bars;
  if (name == "blobs") return SyntheticGenerator::blobs;
  if (name == "noisy_bars") return SyntheticGenerator::noisy_bars;
  return std::nullopt;
}

std::string_view to_string(SyntheticGenerator generator) {
  switch (generator) {
    case SyntheticGenerator::bars: return "bars";
    case SyntheticGenerator::blobs: return "blobs";
    case SyntheticGenerator::noisy_bars: return "noisy_bars";
  }
  return "unknown";
}

std::size_t generator_classes(SyntheticGenerator generator) {
  return generator == SyntheticGenerator::blobs ? 2 : 4;
}

namespace {

struct BarStyle {
  double noise_hi;
  double colour_lo;
  double colour_hi;
  double keep;  // probability a bar pixel is drawn
};

constexpr BarStyle kCleanBars{0.3, 0.5, 1.0, 1.0};
constexpr BarStyle kNoisyBars{0.5, 0.35, 0.85, 0.75};

void draw_bars(float* img, std::size_t size, int label, CounterRng& rng, const BarStyle& style) {
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < 3 * plane; ++i) img[i] = static_cast<float>(rng.uniform(0.0, style.noise_hi));
  float colour[3];
  for (auto& c : colour) c = static_cast<float>(rng.uniform(style.colour_lo, style.colour_hi));
  const auto s = static_cast<long>(size);
  const long offset = static_cast<long>(rng.below(size / 2)) - static_cast<long>(size / 4);
  for (long y = 0; y < s; ++y)
    for (long x = 0; x < s; ++x) {
      long dist = 0;
      switch (label) {
        case 0: dist = y - (s / 2 + offset); break;
        case 1: dist = x - (s / 2 + offset); break;
        case 2: dist = (y - x) - offset; break;
        default: dist = (y + x - (s - 1)) - offset; break;
      }
      if ((dist == 0 || dist == 1) && (style.keep >= 1.0 || rng.uniform() < style.keep)) {
        for (std::size_t c = 0; c < 3; ++c) img[c * plane + static_cast<std::size_t>(y * s + x)] = colour[c];
      }
    }
}

void draw_blob(float* img, std::size_t size, int label, CounterRng& rng) {
  const std::size_t plane = size * size;
  for (std::size_t i = 0; i < 3 * plane; ++i) img[i] = static_cast<float>(rng.uniform(0.0, 0.05));
  const std::size_t side = std::max<std::size_t>(1, size / 4);
  const std::size_t half = size / 2;
  const std::size_t x0 = (label == 0 ? 0 : half) + rng.below(half - side + 1);
  const std::size_t y0 = rng.below(size - side + 1);
  for (std::size_t y = y0; y < y0 + side; ++y)
    for (std::size_t x = x0; x < x0 + side; ++x)
      for (std::size_t c = 0; c < 3; ++c) img[c * plane + y * size + x] = static_cast<float>(rng.uniform(0.7, 1.0));
}

}  // namespace

Dataset synthetic_dataset(SyntheticGenerator generator, std::size_t n, std::uint64_t seed,
                          std::size_t image_size) {
  const std::size_t classes = generator_classes(generator);
  if (n < 2 * classes) {
    throw std::invalid_argument("synthetic_dataset: need at least 2 samples per class");
  }
  if (image_size < 4 || image_size % 2 != 0) {
    throw std::invalid_argument("synthetic_dataset: image size must be even and >= 4");
  }
  Dataset d;
  d.channels = 3;
  d.height = d.width = image_size;
  d.num_classes = classes;
  d.images.resize(n * d.image_numel());
  d.labels.resize(n);
  CounterRng root = CounterRng(seed).derive("synthetic").derive(to_string(generator));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % classes);
    CounterRng rng = root.derive(i);
    float* img = d.images.data() + i * d.image_numel();
    switch (generator) {
      case SyntheticGenerator::bars: draw_bars(img, image_size, label, rng, kCleanBars); break;
      case SyntheticGenerator::noisy_bars: draw_bars(img, image_size, label, rng, kNoisyBars); break;
      case SyntheticGenerator::blobs: draw_blob(img, image_size, label, rng); break;
    }
    d.labels[i] = label;
  }
  return d;
}

}  // namespace stf
