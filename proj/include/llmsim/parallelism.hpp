#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmsim/errors.hpp"
#include "llmsim/hardware.hpp"
#include "llmsim/model.hpp"
#include "llmsim/workload.hpp"

namespace llmsim {

// DP×TP×PP degrees. Written as "dpA.tpB.ppC" with every factor explicit.
struct ParallelPlan {
  std::uint64_t dp = 1;
  std::uint64_t tp = 1;
  std::uint64_t pp = 1;

  std::uint64_t gpus() const { return dp * tp * pp; }
  std::uint64_t gpus_per_replica() const { return tp * pp; }
  std::string to_string() const;

  // Throws ConfigError on anything but the exact grammar.
  static ParallelPlan parse(std::string_view text);

  auto operator<=>(const ParallelPlan&) const = default;
};

enum class ViolationKind {
  zero_degree,
  occupancy,
  q_heads_divisibility,
  kv_heads_divisibility,
  pipeline_depth,
};

std::string_view to_string(ViolationKind kind);

struct PlanViolation {
  ViolationKind kind;
  std::string message;
};

std::vector<PlanViolation> validate_plan(const ParallelPlan& plan,
                                         const NodeSpec& node,
                                         const ModelArch& arch);

class InvalidPlanError : public Error {
 public:
  InvalidPlanError(ParallelPlan plan, std::vector<PlanViolation> violations);

  const ParallelPlan& plan() const noexcept { return plan_; }
  const std::vector<PlanViolation>& violations() const noexcept {
    return violations_;
  }

 private:
  ParallelPlan plan_;
  std::vector<PlanViolation> violations_;
};

// Throws InvalidPlanError when validate_plan reports anything.
void require_valid_plan(const ParallelPlan& plan, const NodeSpec& node,
                        const ModelArch& arch);

// Every valid plan on the node, ordered by (dp, tp, pp).
std::vector<ParallelPlan> enumerate_valid_plans(const NodeSpec& node,
                                                const ModelArch& arch);

struct LayerRange {
  std::uint64_t begin = 0;  // inclusive
  std::uint64_t end = 0;    // exclusive

  std::uint64_t size() const { return end - begin; }
  bool operator==(const LayerRange&) const = default;
};

// Contiguous balanced split of [0, n_layers); earlier stages absorb the
// remainder.
std::vector<LayerRange> partition_layers(std::uint64_t n_layers,
                                         std::uint64_t pp);

struct ShardLayout {
  double weight_bytes_per_gpu = 0;
  std::uint64_t q_heads_per_gpu = 0;
  std::uint64_t kv_heads_per_gpu = 0;
  std::vector<LayerRange> stage_layer_ranges;
  // Share of per-token KV bytes held by one GPU of the largest stage.
  double kv_fraction_per_gpu = 0;
  GemmShapeSet gemm_shapes_per_gpu;
};

ShardLayout shard_layout(const ParallelPlan& plan, const NodeSpec& node,
                         const ModelDeployment& dep);

struct MemoryReport {
  double per_gpu_capacity = 0;
  double weights_per_gpu = 0;
  double activation_reserve = 0;
  double kv_budget_per_gpu = 0;
  double kv_bytes_per_token_per_gpu = 0;
  // Full ISL+OSL reservation of one request; zero when no workload is given.
  double kv_bytes_per_request_per_gpu = 0;
  // kv_budget_per_gpu over every GPU of every replica.
  double system_kv_budget = 0;
};

// Throws InfeasibleError("weights_capacity") when weights plus reserve
// exceed HBM.
MemoryReport kv_capacity(const ParallelPlan& plan, const NodeSpec& node,
                         const ModelDeployment& dep,
                         const std::optional<WorkloadSpec>& workload = {});

enum class BatchPolicy { power_of_two, exact };

std::uint64_t max_nano_batch(const ParallelPlan& plan, const NodeSpec& node,
                             const ModelDeployment& dep,
                             const WorkloadSpec& workload,
                             BatchPolicy policy = BatchPolicy::power_of_two);

}  // namespace llmsim
