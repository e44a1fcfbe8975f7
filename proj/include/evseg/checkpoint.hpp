#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evseg/tensor.hpp"

namespace evseg {

// Single-file tensor archive: a text header with a JSON manifest (name,
// shape, dtype, byte offset, element count per tensor) followed by the
// concatenated raw little-endian float64 payload. Round-trips bit-exactly.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, const Tensor*>>& tensors,
                  const nlohmann::json& meta);

struct TensorArchive {
    std::map<std::string, Tensor> tensors;
    nlohmann::json meta;
};

TensorArchive load_tensors(const std::string& path);

}  // namespace evseg
