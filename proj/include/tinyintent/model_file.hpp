#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tinyintent/quantize.hpp"
#include "tinyintent/trainer.hpp"

namespace tinyintent {

// Self-describing binary model container. Layout, all integers little-endian:
//
//   magic "ODIC" | u32 version=1
//   u32 config_nbytes | config fields, each u32:
//     word_emb_dim, char_emb_dim, lstm_hidden, max_seq_len, max_word_len,
//     num_labels, word_vocab_size, char_vocab_size, conv_activation,
//     lowercase, n_conv, n_conv kernel sizes, n_conv filter counts
//   label map, word vocab, char vocab blocks:
//     u32 count, then count x (u16 byte length, UTF-8 token) in id order
//   u32 tensor_count, then per tensor:
//     u16 name length, name
//     u8 dtype {0 = f32, 1 = i8 affine}
//     u32 rank, rank x u32 dims
//     f32 scale, i32 zero_point   (i8 only)
//     raw values (f32 or i8)
//   u64 FNV-1a checksum over all preceding bytes

inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class TensorDType : std::uint8_t { F32 = 0, I8Affine = 1 };

struct TensorRecord {
    std::string name;
    std::vector<int> shape;
    TensorDType dtype = TensorDType::F32;
    std::vector<float> f32;
    std::vector<std::int8_t> i8;
    float scale = 1.0f;
    std::int32_t zero_point = 0;

    std::size_t element_count() const {
        std::size_t n = shape.empty() ? 0 : 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
};

struct LoadedModel {
    ModelConfig config;
    Vocabulary label_map;
    Vocabulary word_vocab;
    Vocabulary char_vocab;
    std::vector<TensorRecord> tensors;

    bool quantized() const {
        for (const TensorRecord& t : tensors)
            if (t.dtype == TensorDType::I8Affine) return true;
        return false;
    }
};

std::vector<std::uint8_t> serialize_model(const TrainedModel& model);
std::vector<std::uint8_t> serialize_model(const QuantizedModel& model);

// Throws BadMagicError / BadVersionError / ChecksumError / TruncatedError /
// FormatError, each distinct.
LoadedModel parse_model(std::span<const std::uint8_t> bytes);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
void save_model(const QuantizedModel& model, const std::filesystem::path& path);
LoadedModel load_model(const std::filesystem::path& path);

// Rebuilds float parameters from the records (dequantizing int8 ones),
// validating names and shapes against the config. Training buffers are left
// unmaterialized; they appear lazily if the result is trained further. The
// rvalue overload consumes the loaded records and vocabularies to keep the
// load-path peak memory at roughly one float per weight.
TrainedModel to_trained_model(const LoadedModel& loaded);
TrainedModel to_trained_model(LoadedModel&& loaded);

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t n);

}  // namespace tinyintent
