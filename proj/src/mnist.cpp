#include "otafl/mnist.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

namespace otafl::mnist {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error("idx: truncated header while reading " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

std::vector<model::LabeledExample> load_idx(const std::string& images_path,
                                            const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("idx: cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("idx: cannot open " + labels_path);

  if (read_u32_be(images, "image magic") != kImagesMagic)
    throw std::runtime_error("idx: bad image magic in " + images_path);
  if (read_u32_be(labels, "label magic") != kLabelsMagic)
    throw std::runtime_error("idx: bad label magic in " + labels_path);

  const std::uint32_t n_images = read_u32_be(images, "image count");
  const std::uint32_t rows = read_u32_be(images, "rows");
  const std::uint32_t cols = read_u32_be(images, "cols");
  const std::uint32_t n_labels = read_u32_be(labels, "label count");
  if (n_images != n_labels)
    throw std::runtime_error("idx: image/label count mismatch");

  const std::size_t pixels = std::size_t(rows) * cols;
  std::vector<model::LabeledExample> out(n_images);
  std::vector<unsigned char> buf(pixels);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), pixels))
      throw std::runtime_error("idx: truncated image data in " + images_path);
    char y;
    if (!labels.read(&y, 1))
      throw std::runtime_error("idx: truncated label data in " + labels_path);
    auto& ex = out[i];
    ex.label = static_cast<unsigned char>(y);
    ex.features.resize(pixels);
    for (std::size_t j = 0; j < pixels; ++j) ex.features[j] = buf[j] / 255.0;
  }
  return out;
}

}  // namespace otafl::mnist
