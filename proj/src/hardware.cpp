#include "llmsim/hardware.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "llmsim/errors.hpp"

namespace llmsim {
namespace {

constexpr double kGB = 1e9;
constexpr double kTB = 1e12;
constexpr double kTFLOPS = 1e12;

bool in_unit_interval(double x) { return x > 0.0 && x <= 1.0; }

}  // namespace

double GpuSpec::peak(Precision p) const {
  auto it = peak_compute.find(p);
  if (!supports(p) || it == peak_compute.end()) {
    throw UnsupportedPrecisionError(name + " does not support " +
                                    std::string(to_string(p)));
  }
  return it->second;
}

void validate(const GpuSpec& gpu) {
  if (!(gpu.hbm_capacity > 0)) throw ConfigError("hbm_capacity", "must be > 0");
  if (!(gpu.hbm_bandwidth > 0)) throw ConfigError("hbm_bandwidth", "must be > 0");
  if (!(gpu.link_bandwidth_bidir > 0)) {
    throw ConfigError("link_bandwidth_bidir", "must be > 0");
  }
  if (gpu.supported_precisions.empty()) {
    throw ConfigError("precisions", "at least one precision required");
  }
  for (Precision p : gpu.supported_precisions) {
    auto it = gpu.peak_compute.find(p);
    if (it == gpu.peak_compute.end() || !(it->second > 0)) {
      throw ConfigError("peak_" + std::string(to_string(p)),
                        "peak compute must be > 0 for every supported precision");
    }
  }
}

void validate(const NodeSpec& node) {
  validate(node.gpu);
  if (node.n_gpus < 1) throw ConfigError("node_size", "must be >= 1");
  if (node.activation_reserve < 0 || !std::isfinite(node.activation_reserve)) {
    throw ConfigError("activation_reserve", "must be a finite value >= 0");
  }
}

void validate(const Calibration& c) {
  if (!in_unit_interval(c.gemm_efficiency)) {
    throw ConfigError("gemm_efficiency", "must be in (0, 1]");
  }
  if (!in_unit_interval(c.attention_efficiency)) {
    throw ConfigError("attention_efficiency", "must be in (0, 1]");
  }
  if (!in_unit_interval(c.memory_efficiency)) {
    throw ConfigError("memory_efficiency", "must be in (0, 1]");
  }
  if (!(c.allreduce_step_latency >= 0) || !std::isfinite(c.allreduce_step_latency)) {
    throw ConfigError("allreduce_step_latency", "must be a finite value >= 0");
  }
  if (!(c.p2p_overlap_fraction >= 0 && c.p2p_overlap_fraction < 1)) {
    throw ConfigError("p2p_overlap_fraction", "must be in [0, 1)");
  }
  if (c.aggregate_link_override && !(*c.aggregate_link_override > 0)) {
    throw ConfigError("aggregate_link_override", "must be > 0 when set");
  }
  if (!in_unit_interval(c.causal_factor)) {
    throw ConfigError("causal_factor", "must be in (0, 1]");
  }
}

// Capacities, precision support and link figures follow the vendor tables;
// HBM bandwidth and dense peak rates are datasheet defaults (no sparsity)
// and are meant to be overridden from config.
GpuSpec make_gpu_preset(std::string_view name) {
  if (name == "mi325x") {
    return GpuSpec{
        .name = "mi325x",
        .hbm_capacity = 256 * kGB,
        .hbm_bandwidth = 6.0 * kTB,
        .peak_compute = {{Precision::fp32, 163.4 * kTFLOPS},
                         {Precision::fp16, 1307.4 * kTFLOPS},
                         {Precision::fp8, 2614.9 * kTFLOPS}},
        .link_bandwidth_bidir = 128 * kGB,
        .supported_precisions = {Precision::fp32, Precision::fp16,
                                 Precision::fp8},
    };
  }
  if (name == "mi355x") {
    return GpuSpec{
        .name = "mi355x",
        .hbm_capacity = 288 * kGB,
        .hbm_bandwidth = 8.0 * kTB,
        .peak_compute = {{Precision::fp32, 157.3 * kTFLOPS},
                         {Precision::fp16, 2516.6 * kTFLOPS},
                         {Precision::fp8, 5033.2 * kTFLOPS},
                         {Precision::fp4, 10066.3 * kTFLOPS}},
        .link_bandwidth_bidir = 153.6 * kGB,
        .supported_precisions = {Precision::fp32, Precision::fp16,
                                 Precision::fp8, Precision::fp4},
    };
  }
  throw ConfigError("gpu", "unknown gpu preset '" + std::string(name) + "'");
}

std::vector<std::string> gpu_preset_names() { return {"mi325x", "mi355x"}; }

double aggregate_link_bandwidth(const GpuSpec& gpu, std::uint64_t group_size,
                                const Calibration& calib) {
  if (group_size < 2) {
    throw std::invalid_argument("aggregate_link_bandwidth: group_size must be >= 2");
  }
  if (calib.aggregate_link_override) return *calib.aggregate_link_override;
  return gpu.link_bandwidth_bidir * static_cast<double>(group_size - 1);
}

}  // namespace llmsim
