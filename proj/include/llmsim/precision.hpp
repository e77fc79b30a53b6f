#pragma once

#include <array>
#include <string>
#include <string_view>

namespace llmsim {

enum class Precision { fp32, fp16, fp8, fp4 };

inline constexpr std::array<Precision, 4> kAllPrecisions = {
    Precision::fp32, Precision::fp16, Precision::fp8, Precision::fp4};

constexpr double bytes_per_element(Precision p) {
  switch (p) {
    case Precision::fp32: return 4.0;
    case Precision::fp16: return 2.0;
    case Precision::fp8: return 1.0;
    case Precision::fp4: return 0.5;
  }
  return 0.0;
}

std::string_view to_string(Precision p);

// Accepts "fp32", "fp16", "fp8", "fp4"; throws ConfigError otherwise.
Precision parse_precision(std::string_view text);

}  // namespace llmsim
