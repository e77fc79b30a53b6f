#include "llmsim/precision.hpp"

#include <string>

#include "llmsim/errors.hpp"

namespace llmsim {

std::string_view to_string(Precision p) {
  switch (p) {
    case Precision::fp32: return "fp32";
    case Precision::fp16: return "fp16";
    case Precision::fp8: return "fp8";
    case Precision::fp4: return "fp4";
  }
  return "unknown";
}

Precision parse_precision(std::string_view text) {
  for (Precision p : kAllPrecisions) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError("precision", "unknown precision '" + std::string(text) +
                                     "' (expected fp32, fp16, fp8 or fp4)");
}

}  // namespace llmsim
