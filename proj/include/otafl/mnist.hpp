#pragma once

#include <string>
#include <vector>

#include "otafl/model.hpp"

namespace otafl::mnist {

// IDX image/label pair (magic 0x00000803 / 0x00000801, big-endian header,
// raw u8 pixels). Pixels are scaled to [0, 1].
std::vector<model::LabeledExample> load_idx(const std::string& images_path,
                                            const std::string& labels_path);

}  // namespace otafl::mnist
