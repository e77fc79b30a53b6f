#pragma once

#include <cstdint>
#include <string_view>

#include "llmsim/hardware.hpp"
#include "llmsim/precision.hpp"

namespace llmsim {

enum class Phase { prefill, decode };

std::string_view to_string(Phase phase);

// Kernels of one transformer block, in execution order, plus the
// stage-to-stage transfer introduced by pipelining.
enum class KernelKind {
  qkv_proj,
  rope,
  attention,
  out_proj,
  all_reduce,
  residual_add,
  norm,
  fc1,
  fc2,
  p2p,
};

std::string_view to_string(KernelKind kind);

struct KernelCost {
  KernelKind kind = KernelKind::qkv_proj;
  double compute_time = 0;
  double memory_time = 0;
  double total_time = 0;
  double flops = 0;
  double bytes_moved = 0;
};

enum class CommKind { all_reduce, p2p };

struct CommCost {
  CommKind kind = CommKind::all_reduce;
  std::uint64_t steps = 0;
  double bytes_per_gpu = 0;
  double total_time = 0;
};

// Roofline cost of C = A·B with A (M×K) holding weights and B (K×N)
// activations. Compute runs at the weight precision's peak.
KernelCost gemm_cost(std::uint64_t m, std::uint64_t n, std::uint64_t k,
                     Precision weight_prec, Precision act_prec,
                     const GpuSpec& gpu, const Calibration& calib,
                     KernelKind kind = KernelKind::fc1);

struct AttentionShape {
  std::uint64_t batch = 1;
  // Prefill: prompt length. Decode: current context length (may be an
  // average, hence fractional).
  double seq_len = 1;
  std::uint64_t n_q_heads = 1;
  std::uint64_t n_kv_heads = 1;
  std::uint64_t d_head = 1;
};

// Bytes of K and V read for one layer: batch × seq_len × 2 × kv_heads × d_head.
double kv_cache_read_bytes(const AttentionShape& shape, Precision kv_prec);

// Fused attention (scores, softmax, weighted sum). Traffic covers the KV
// cache read, writes of new KV entries, and the Q read / output write. The
// compute leg runs at the KV precision's peak scaled by attention_efficiency.
KernelCost attention_cost(Phase phase, const AttentionShape& shape,
                          Precision kv_prec, Precision act_prec,
                          const GpuSpec& gpu, const Calibration& calib);

// Memory-bound elementwise kernel (rope, residual_add, norm).
KernelCost elementwise_cost(KernelKind kind, double bytes_touched,
                            const GpuSpec& gpu, const Calibration& calib);

// Ring all-reduce over `p` ranks: reduce-scatter then all-gather, 2(p-1)
// steps, each rank transmitting 2(p-1)/p of the payload.
CommCost ring_allreduce_cost(double payload_bytes, std::uint64_t p,
                             const GpuSpec& gpu, const Calibration& calib);

// One stage-to-stage activation transfer over a direct link.
CommCost p2p_cost(double payload_bytes, const GpuSpec& gpu,
                  const Calibration& calib);

}  // namespace llmsim
