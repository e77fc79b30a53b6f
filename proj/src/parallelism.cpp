#include "llmsim/parallelism.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace llmsim {
namespace {

// Parses "<prefix><digits>" from the front of `text`, advancing it.
std::uint64_t take_factor(std::string_view& text, std::string_view prefix,
                          std::string_view whole) {
  auto fail = [&] {
    return ConfigError("plan", fmt::format("'{}' does not match dpA.tpB.ppC", whole));
  };
  if (!text.starts_with(prefix)) throw fail();
  text.remove_prefix(prefix.size());
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) throw fail();
  text.remove_prefix(static_cast<std::size_t>(ptr - text.data()));
  return value;
}

}  // namespace

std::string ParallelPlan::to_string() const {
  return fmt::format("dp{}.tp{}.pp{}", dp, tp, pp);
}

ParallelPlan ParallelPlan::parse(std::string_view text) {
  const std::string_view whole = text;
  ParallelPlan plan;
  plan.dp = take_factor(text, "dp", whole);
  plan.tp = take_factor(text, ".tp", whole);
  plan.pp = take_factor(text, ".pp", whole);
  if (!text.empty()) {
    throw ConfigError("plan", fmt::format("'{}' does not match dpA.tpB.ppC", whole));
  }
  return plan;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::zero_degree: return "zero_degree";
    case ViolationKind::occupancy: return "occupancy";
    case ViolationKind::q_heads_divisibility: return "q_heads_divisibility";
    case ViolationKind::kv_heads_divisibility: return "kv_heads_divisibility";
    case ViolationKind::pipeline_depth: return "pipeline_depth";
  }
  return "unknown";
}

std::vector<PlanViolation> validate_plan(const ParallelPlan& plan,
                                         const NodeSpec& node,
                                         const ModelArch& arch) {
  std::vector<PlanViolation> out;
  if (plan.dp == 0 || plan.tp == 0 || plan.pp == 0) {
    out.push_back({ViolationKind::zero_degree,
                   fmt::format("{}: every degree must be >= 1", plan.to_string())});
    return out;
  }
  if (plan.gpus() != node.n_gpus) {
    out.push_back({ViolationKind::occupancy,
                   fmt::format("{} uses {} GPUs but the node has {}",
                               plan.to_string(), plan.gpus(), node.n_gpus)});
  }
  if (arch.n_q_heads % plan.tp != 0) {
    out.push_back({ViolationKind::q_heads_divisibility,
                   fmt::format("tp={} does not divide {} query heads", plan.tp,
                               arch.n_q_heads)});
  }
  if (arch.n_kv_heads % plan.tp != 0) {
    out.push_back({ViolationKind::kv_heads_divisibility,
                   fmt::format("tp={} does not divide {} kv heads", plan.tp,
                               arch.n_kv_heads)});
  }
  if (plan.pp > arch.n_layers) {
    out.push_back({ViolationKind::pipeline_depth,
                   fmt::format("pp={} exceeds {} layers", plan.pp, arch.n_layers)});
  }
  return out;
}

InvalidPlanError::InvalidPlanError(ParallelPlan plan,
                                   std::vector<PlanViolation> violations)
    : Error([&] {
        std::string msg = "invalid plan " + plan.to_string();
        for (const auto& v : violations) msg += "; " + v.message;
        return msg;
      }()),
      plan_(plan),
      violations_(std::move(violations)) {}

void require_valid_plan(const ParallelPlan& plan, const NodeSpec& node,
                        const ModelArch& arch) {
  auto violations = validate_plan(plan, node, arch);
  if (!violations.empty()) throw InvalidPlanError(plan, std::move(violations));
}

std::vector<ParallelPlan> enumerate_valid_plans(const NodeSpec& node,
                                                const ModelArch& arch) {
  std::vector<ParallelPlan> plans;
  const std::uint64_t n = node.n_gpus;
  for (std::uint64_t dp = 1; dp <= n; ++dp) {
    if (n % dp != 0) continue;
    for (std::uint64_t tp = 1; tp <= n / dp; ++tp) {
      if ((n / dp) % tp != 0) continue;
      ParallelPlan plan{dp, tp, n / dp / tp};
      if (validate_plan(plan, node, arch).empty()) plans.push_back(plan);
    }
  }
  std::sort(plans.begin(), plans.end());
  return plans;
}

std::vector<LayerRange> partition_layers(std::uint64_t n_layers,
                                         std::uint64_t pp) {
  if (pp == 0 || pp > n_layers) {
    throw std::invalid_argument("partition_layers: need 1 <= pp <= n_layers");
  }
  const std::uint64_t base = n_layers / pp;
  const std::uint64_t extra = n_layers % pp;
  std::vector<LayerRange> ranges;
  ranges.reserve(pp);
  std::uint64_t begin = 0;
  for (std::uint64_t s = 0; s < pp; ++s) {
    const std::uint64_t size = base + (s < extra ? 1 : 0);
    ranges.push_back({begin, begin + size});
    begin += size;
  }
  return ranges;
}

ShardLayout shard_layout(const ParallelPlan& plan, const NodeSpec& node,
                         const ModelDeployment& dep) {
  require_valid_plan(plan, node, dep.arch);
  const ModelArch& arch = dep.arch;

  ShardLayout layout;
  layout.weight_bytes_per_gpu =
      weight_bytes(dep) / static_cast<double>(plan.gpus_per_replica());
  layout.q_heads_per_gpu = arch.n_q_heads / plan.tp;
  layout.kv_heads_per_gpu = arch.n_kv_heads / plan.tp;
  layout.stage_layer_ranges = partition_layers(arch.n_layers, plan.pp);
  // Stage 0 holds the most layers and therefore binds the KV budget.
  const double largest_stage =
      static_cast<double>(layout.stage_layer_ranges.front().size());
  layout.kv_fraction_per_gpu = largest_stage / static_cast<double>(arch.n_layers) /
                               static_cast<double>(plan.tp);
  layout.gemm_shapes_per_gpu = sharded_gemm_shapes(arch, plan.tp);
  return layout;
}

MemoryReport kv_capacity(const ParallelPlan& plan, const NodeSpec& node,
                         const ModelDeployment& dep,
                         const std::optional<WorkloadSpec>& workload) {
  const ShardLayout layout = shard_layout(plan, node, dep);

  MemoryReport r;
  r.per_gpu_capacity = node.gpu.hbm_capacity;
  r.weights_per_gpu = layout.weight_bytes_per_gpu;
  r.activation_reserve = node.activation_reserve;
  r.kv_budget_per_gpu = r.per_gpu_capacity - r.weights_per_gpu - r.activation_reserve;
  if (r.kv_budget_per_gpu < 0) {
    throw InfeasibleError(
        "weights_capacity", -r.kv_budget_per_gpu,
        fmt::format("{}: weights need {:.4g} GB per GPU but only {:.4g} GB is "
                    "available (deficit {:.4g} GB)",
                    plan.to_string(), r.weights_per_gpu / 1e9,
                    (r.per_gpu_capacity - r.activation_reserve) / 1e9,
                    -r.kv_budget_per_gpu / 1e9));
  }
  r.kv_bytes_per_token_per_gpu = kv_bytes_per_token(dep) * layout.kv_fraction_per_gpu;
  if (workload) {
    r.kv_bytes_per_request_per_gpu =
        r.kv_bytes_per_token_per_gpu * static_cast<double>(workload->total());
  }
  r.system_kv_budget = r.kv_budget_per_gpu * static_cast<double>(plan.gpus());
  return r;
}

std::uint64_t max_nano_batch(const ParallelPlan& plan, const NodeSpec& node,
                             const ModelDeployment& dep,
                             const WorkloadSpec& workload, BatchPolicy policy) {
  const MemoryReport r = kv_capacity(plan, node, dep, workload);
  const double raw = std::floor(r.kv_budget_per_gpu / r.kv_bytes_per_request_per_gpu);
  if (!(raw >= 1)) return 0;
  const auto count = raw >= 9.2e18 ? std::uint64_t{1} << 63
                                   : static_cast<std::uint64_t>(raw);
  return policy == BatchPolicy::power_of_two ? std::bit_floor(count) : count;
}

}  // namespace llmsim
