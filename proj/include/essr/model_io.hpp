#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "essr/network.hpp"

namespace essr {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 76;
inline constexpr std::size_t kModelFooterBytes = 62;  // stopping metadata, before the checksum
inline constexpr std::size_t kModelChecksumBytes = 4;

/// Bytes of one layer record for a model of dimension n and k classes.
std::size_t layer_record_bytes(std::size_t n, std::size_t k) noexcept;

std::vector<std::uint8_t> serialize(const TrainedModel& model);
TrainedModel deserialize(const std::vector<std::uint8_t>& bytes);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace essr
