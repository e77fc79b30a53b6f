#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "llmsim/precision.hpp"

namespace llmsim {

// Capacities in bytes, bandwidths in bytes/s, compute in FLOP/s.
struct GpuSpec {
  std::string name;
  double hbm_capacity = 0;
  double hbm_bandwidth = 0;
  std::map<Precision, double> peak_compute;
  // Usable bidirectional capacity of one peer-to-peer link.
  double link_bandwidth_bidir = 0;
  std::set<Precision> supported_precisions;

  bool supports(Precision p) const { return supported_precisions.contains(p); }
  // Throws UnsupportedPrecisionError if `p` is not supported.
  double peak(Precision p) const;

  bool operator==(const GpuSpec&) const = default;
};

void validate(const GpuSpec& gpu);

enum class Topology { all_to_all };

struct NodeSpec {
  GpuSpec gpu;
  std::uint64_t n_gpus = 8;
  Topology topology = Topology::all_to_all;
  // HBM held back from the KV budget for activations and workspace.
  double activation_reserve = 0;

  bool operator==(const NodeSpec&) const = default;
};

void validate(const NodeSpec& node);

// Efficiency knobs that stand in for silicon measurements. The member
// defaults equal the committed configs/calibration/default.ini.
struct Calibration {
  double gemm_efficiency = 0.90;
  double attention_efficiency = 0.80;
  double memory_efficiency = 0.95;
  double allreduce_step_latency = 2e-6;
  double p2p_overlap_fraction = 0.90;
  std::optional<double> aggregate_link_override;
  // Fraction of the score matrix computed under a causal mask in prefill.
  double causal_factor = 0.5;

  bool operator==(const Calibration&) const = default;
};

void validate(const Calibration& calib);

GpuSpec make_gpu_preset(std::string_view name);
std::vector<std::string> gpu_preset_names();

// Bandwidth a `group_size`-GPU collective can drive on an all-to-all node:
// every rank uses its (group_size - 1) peer links concurrently.
double aggregate_link_bandwidth(const GpuSpec& gpu, std::uint64_t group_size,
                                const Calibration& calib);

}  // namespace llmsim
