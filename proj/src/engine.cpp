#include "llmsim/engine.hpp"

#include <array>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

#include "llmsim/errors.hpp"

namespace llmsim {
namespace {

struct LayerKernel {
  KernelKind kind;
  double time;               // one invocation
  std::uint64_t per_layer;   // invocations per layer
};

double decode_context_length(const WorkloadSpec& w, DecodeContext policy) {
  const double isl = static_cast<double>(w.avg_isl);
  const double osl = static_cast<double>(w.avg_osl);
  switch (policy) {
    case DecodeContext::start: return isl;
    case DecodeContext::mid: return isl + osl / 2.0;
    case DecodeContext::end: return isl + osl;
  }
  return isl;
}

// Kernels of one transformer block on one GPU of a TP group.
std::array<LayerKernel, 9> layer_kernels(Phase phase, const Scenario& s) {
  const ModelArch& arch = s.deployment.arch;
  const GpuSpec& gpu = s.node.gpu;
  const Calibration& cal = s.calibration;
  const Precision w = s.deployment.weight_precision;
  const Precision a = s.deployment.activation_precision;
  const Precision kv = s.deployment.kv_precision;
  const double act = bytes_per_element(a);
  const std::uint64_t tp = s.plan.tp;

  const std::uint64_t tokens =
      phase == Phase::prefill ? s.nano_batch * s.workload.avg_isl : s.nano_batch;
  const double n_tokens = static_cast<double>(tokens);
  const double d = static_cast<double>(arch.d_hidden);
  const GemmShapeSet g = sharded_gemm_shapes(arch, tp);

  const AttentionShape attn{
      .batch = s.nano_batch,
      .seq_len = phase == Phase::prefill
                     ? static_cast<double>(s.workload.avg_isl)
                     : decode_context_length(s.workload, s.decode_context),
      .n_q_heads = arch.n_q_heads / tp,
      .n_kv_heads = arch.n_kv_heads / tp,
      .d_head = arch.d_head,
  };
  const double rope_bytes = 2.0 * n_tokens *
                            static_cast<double>((attn.n_q_heads + attn.n_kv_heads) *
                                                arch.d_head) *
                            act;
  // Residual stream tensor: what every all-reduce aggregates.
  const double residual = n_tokens * d * act;

  auto gemm = [&](GemmShape shape, KernelKind kind) {
    return gemm_cost(shape.m, tokens, shape.k, w, a, gpu, cal, kind).total_time;
  };

  return {{
      {KernelKind::qkv_proj, gemm(g.qkv, KernelKind::qkv_proj), 1},
      {KernelKind::rope,
       elementwise_cost(KernelKind::rope, rope_bytes, gpu, cal).total_time, 1},
      {KernelKind::attention, attention_cost(phase, attn, kv, a, gpu, cal).total_time, 1},
      {KernelKind::out_proj, gemm(g.out_proj, KernelKind::out_proj), 1},
      {KernelKind::all_reduce, ring_allreduce_cost(residual, tp, gpu, cal).total_time, 2},
      // two reads, one write
      {KernelKind::residual_add,
       elementwise_cost(KernelKind::residual_add, 3.0 * residual, gpu, cal).total_time, 2},
      {KernelKind::norm,
       elementwise_cost(KernelKind::norm, 2.0 * residual, gpu, cal).total_time, 2},
      {KernelKind::fc1, gemm(g.fc1, KernelKind::fc1), 1},
      {KernelKind::fc2, gemm(g.fc2, KernelKind::fc2), 1},
  }};
}

}  // namespace

std::string_view to_string(DecodeContext policy) {
  switch (policy) {
    case DecodeContext::start: return "start";
    case DecodeContext::mid: return "mid";
    case DecodeContext::end: return "end";
  }
  return "mid";
}

DecodeContext parse_decode_context(std::string_view text) {
  if (text == "start") return DecodeContext::start;
  if (text == "mid") return DecodeContext::mid;
  if (text == "end") return DecodeContext::end;
  throw ConfigError("decode_context",
                    "expected start, mid or end, got '" + std::string(text) + "'");
}

double PhaseBreakdown::time_of(KernelKind kind) const {
  auto it = per_kernel.find(kind);
  return it == per_kernel.end() ? 0.0 : it->second.time;
}

std::uint64_t PhaseBreakdown::count_of(KernelKind kind) const {
  auto it = per_kernel.find(kind);
  return it == per_kernel.end() ? 0 : it->second.count;
}

double PhaseBreakdown::communication_time() const {
  return time_of(KernelKind::all_reduce) + time_of(KernelKind::p2p);
}

void require_feasible(const Scenario& s) {
  require_valid_plan(s.plan, s.node, s.deployment.arch);
  if (s.nano_batch == 0) throw std::invalid_argument("nano_batch must be >= 1");
  const MemoryReport mem = kv_capacity(s.plan, s.node, s.deployment, s.workload);
  if (!s.enforce_kv_capacity) return;
  const double needed =
      static_cast<double>(s.nano_batch) * mem.kv_bytes_per_request_per_gpu;
  if (needed > mem.kv_budget_per_gpu) {
    throw InfeasibleError(
        "kv_capacity", needed - mem.kv_budget_per_gpu,
        fmt::format("{} at nano batch {}: KV cache needs {:.4g} GB per GPU but "
                    "{:.4g} GB is free after weights (deficit {:.4g} GB)",
                    s.plan.to_string(), s.nano_batch, needed / 1e9,
                    mem.kv_budget_per_gpu / 1e9,
                    (needed - mem.kv_budget_per_gpu) / 1e9));
  }
}

PhaseBreakdown transformer_pass_time(Phase phase, const Scenario& s) {
  require_feasible(s);
  const ModelArch& arch = s.deployment.arch;

  PhaseBreakdown out;
  out.phase = phase;
  double layer_time = 0;
  for (const LayerKernel& k : layer_kernels(phase, s)) {
    const double per_layer = k.time * static_cast<double>(k.per_layer);
    layer_time += per_layer;
    KernelShare& slot = out.per_kernel[k.kind];
    slot.time = per_layer * static_cast<double>(arch.n_layers);
    slot.count = k.per_layer * arch.n_layers;
  }

  for (const LayerRange& stage : partition_layers(arch.n_layers, s.plan.pp)) {
    out.stage_times.push_back(layer_time * static_cast<double>(stage.size()));
  }

  const std::uint64_t tokens =
      phase == Phase::prefill ? s.nano_batch * s.workload.avg_isl : s.nano_batch;
  const double hidden_state = static_cast<double>(tokens * arch.d_hidden) *
                              bytes_per_element(s.deployment.activation_precision);
  const std::uint64_t transfers = s.plan.pp - 1;
  KernelShare& p2p = out.per_kernel[KernelKind::p2p];
  p2p.count = transfers;
  p2p.time = static_cast<double>(transfers) *
             p2p_cost(hidden_state, s.node.gpu, s.calibration).total_time;

  for (const auto& [kind, share] : out.per_kernel) out.total += share.time;
  if (out.total > 0) {
    for (auto& [kind, share] : out.per_kernel) share.share = share.time / out.total;
  }
  return out;
}

PhaseBreakdown ttft(const Scenario& s) { return transformer_pass_time(Phase::prefill, s); }

PhaseBreakdown tpot(const Scenario& s) { return transformer_pass_time(Phase::decode, s); }

double throughput(double ttft_s, double tpot_s, std::uint64_t nano_batch,
                  const ParallelPlan& plan, const WorkloadSpec& workload) {
  if (!(ttft_s > 0) || !(tpot_s > 0)) {
    throw std::invalid_argument("throughput: latencies must be positive");
  }
  const double osl = static_cast<double>(workload.avg_osl);
  const double global_batch = static_cast<double>(nano_batch * plan.pp);
  const double output_tokens = global_batch * osl * static_cast<double>(plan.dp);
  return output_tokens / (ttft_s + osl * tpot_s);
}

InferenceEstimate estimate(const Scenario& s) {
  InferenceEstimate e;
  e.prefill_breakdown = ttft(s);
  e.decode_breakdown = tpot(s);
  e.ttft = e.prefill_breakdown.total;
  e.tpot = e.decode_breakdown.total;
  e.nano_batch = s.nano_batch;
  e.global_batch = s.nano_batch * s.plan.pp;
  e.n_dp = s.plan.dp;
  e.memory = kv_capacity(s.plan, s.node, s.deployment, s.workload);
  e.tps = throughput(e.ttft, e.tpot, s.nano_batch, s.plan, s.workload);
  return e;
}

}  // namespace llmsim
