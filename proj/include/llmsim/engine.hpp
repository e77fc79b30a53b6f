#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "llmsim/hardware.hpp"
#include "llmsim/kernels.hpp"
#include "llmsim/model.hpp"
#include "llmsim/parallelism.hpp"
#include "llmsim/workload.hpp"

namespace llmsim {

// Context length charged to decode attention: the prompt alone, the prompt
// plus half the output (default), or the full final context.
enum class DecodeContext { start, mid, end };

std::string_view to_string(DecodeContext policy);
DecodeContext parse_decode_context(std::string_view text);

struct KernelShare {
  double time = 0;
  std::uint64_t count = 0;  // invocations per full pass
  double share = 0;         // time / phase total
};

struct PhaseBreakdown {
  Phase phase = Phase::prefill;
  std::map<KernelKind, KernelShare> per_kernel;
  double total = 0;
  // Compute time of each pipeline stage, P2P excluded.
  std::vector<double> stage_times;

  double time_of(KernelKind kind) const;
  std::uint64_t count_of(KernelKind kind) const;
  double communication_time() const;
};

struct Scenario {
  ParallelPlan plan;
  ModelDeployment deployment;
  WorkloadSpec workload;
  std::uint64_t nano_batch = 1;
  NodeSpec node;
  Calibration calibration;
  DecodeContext decode_context = DecodeContext::mid;
  // false: latency what-if that skips the KV admission check (weights must
  // still fit). Sweeps always enforce it.
  bool enforce_kv_capacity = true;
};

struct InferenceEstimate {
  double ttft = 0;
  double tpot = 0;
  double tps = 0;
  std::uint64_t global_batch = 0;
  std::uint64_t nano_batch = 0;
  std::uint64_t n_dp = 0;
  MemoryReport memory;
  PhaseBreakdown prefill_breakdown;
  PhaseBreakdown decode_breakdown;
};

// Throws InvalidPlanError or InfeasibleError("kv_capacity") if the scenario
// cannot run.
void require_feasible(const Scenario& scenario);

// One full pass of a nano-batch through every pipeline stage: per-layer
// kernels times the layer count, plus (pp - 1) stage-to-stage transfers.
PhaseBreakdown transformer_pass_time(Phase phase, const Scenario& scenario);

PhaseBreakdown ttft(const Scenario& scenario);
PhaseBreakdown tpot(const Scenario& scenario);

// Output tokens per second:
//   (nano_batch × pp × OSL × dp) / (ttft + OSL × tpot)
double throughput(double ttft, double tpot, std::uint64_t nano_batch,
                  const ParallelPlan& plan, const WorkloadSpec& workload);

InferenceEstimate estimate(const Scenario& scenario);

}  // namespace llmsim
