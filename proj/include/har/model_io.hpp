#pragma once

#include <cstdint>
#include <string>

#include "har/dataset.hpp"
#include "har/lstm.hpp"
#include "har/training.hpp"

namespace har {

// Binary model format (all integers and floats little-endian):
//
//   magic          6 bytes  "LWHAR1"
//   version        u16      currently 1
//   window_size    u32
//   stride         u32
//   batch_size     u32
//   epochs         u32
//   learning_rate  f64
//   l2_coeff       f64
//   hidden         u32
//   layers         u32
//   seed           u64
//   aggregation    u8       0 = sum, 1 = last
//   normalize      u8       0 = off, 1 = on
//   channel means  3 x f64
//   channel stds   3 x f64
//   tensor_count   u32      always 32
//   shape table    tensor_count x (u32 rows, u32 cols); vectors are rows x 1
//   payload        f64 tensors, row-major, in order:
//                    layer1: i(w_x,w_h,b,peephole) f(w_x,w_h,b,peephole)
//                            candidate(w_x,w_h,b) o(w_x,w_h,b,peephole)
//                    layer2: same          head_w, head_b
//   checksum       u64      FNV-1a 64 of every preceding byte
//
// load(save(m)) reproduces all tensors bit-exactly.

inline constexpr char kModelMagic[6] = {'L', 'W', 'H', 'A', 'R', '1'};
inline constexpr std::uint16_t kModelVersion = 1;

struct ModelData {
    NetworkParams params;
    Hyperparameters hp;
    NormStats norm;
};

// FNV-1a 64-bit fold, the checksum used by the model format.
std::uint64_t fnv1a64(const void* data, std::size_t len);

std::string serialize_model(const NetworkParams& params, const Hyperparameters& hp,
                            const NormStats& norm);
ModelData deserialize_model(const std::string& bytes);

// Throws IoError on unreadable/unwritable paths, FormatError on bad
// magic/version/structure, ChecksumError on corruption or truncation.
void save_model(const NetworkParams& params, const Hyperparameters& hp,
                const NormStats& norm, const std::string& path);
ModelData load_model(const std::string& path);

}  // namespace har
