#pragma once

#include <string>

#include "gradalign/data.hpp"
#include "gradalign/model.hpp"

namespace gradalign {

// Model container "GAM1" (little-endian): magic, u32 layer_count, then per
// layer u32 rows / u32 cols, f64 weights row-major, f64 biases; trailing
// u32 class_count.
void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

// Dataset container "GDA1" (little-endian): magic, u32 count, u32 n,
// u32 class_count, u8 has_delta, then per sample u32 label, n×f32 features
// and, when has_delta, n×f32 delta. Round-trips at f32 precision.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace gradalign
