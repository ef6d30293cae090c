#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ncn/tensor.hpp"

namespace ncn {

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

// Checkpoint directory layout:
//   manifest.json  {"format": "ncn-checkpoint", "version": 1,
//                   "params": [{"name", "shape", "file"}, ...], "meta": {...}}
//   <name>.f32     raw little-endian float32 values, row-major
// `meta_json` is an arbitrary JSON object stored verbatim under "meta".
void save_checkpoint(const std::filesystem::path& dir, const std::vector<NamedTensor>& params,
                     const std::string& meta_json = "{}");

struct Checkpoint {
    std::vector<NamedTensor> params;
    std::string meta_json;
};

Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace ncn
