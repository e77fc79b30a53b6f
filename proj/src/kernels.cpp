#include "llmsim/kernels.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace llmsim {
namespace {

double as_double(std::uint64_t v) { return static_cast<double>(v); }

double memory_seconds(double bytes, const GpuSpec& gpu, const Calibration& calib) {
  return bytes / (gpu.hbm_bandwidth * calib.memory_efficiency);
}

KernelCost roofline(KernelKind kind, double flops, double bytes,
                    double compute_rate, const GpuSpec& gpu,
                    const Calibration& calib) {
  KernelCost c;
  c.kind = kind;
  c.flops = flops;
  c.bytes_moved = bytes;
  c.compute_time = flops / compute_rate;
  c.memory_time = memory_seconds(bytes, gpu, calib);
  c.total_time = std::max(c.compute_time, c.memory_time);
  return c;
}

}  // namespace

std::string_view to_string(Phase phase) {
  return phase == Phase::prefill ? "prefill" : "decode";
}

std::string_view to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::qkv_proj: return "qkv_proj";
    case KernelKind::rope: return "rope";
    case KernelKind::attention: return "attention";
    case KernelKind::out_proj: return "out_proj";
    case KernelKind::all_reduce: return "all_reduce";
    case KernelKind::residual_add: return "residual_add";
    case KernelKind::norm: return "norm";
    case KernelKind::fc1: return "fc1";
    case KernelKind::fc2: return "fc2";
    case KernelKind::p2p: return "p2p";
  }
  return "unknown";
}

KernelCost gemm_cost(std::uint64_t m, std::uint64_t n, std::uint64_t k,
                     Precision weight_prec, Precision act_prec,
                     const GpuSpec& gpu, const Calibration& calib,
                     KernelKind kind) {
  if (m == 0 || n == 0 || k == 0) {
    throw std::invalid_argument("gemm_cost: M, N, K must be >= 1");
  }
  const double peak = gpu.peak(weight_prec);
  gpu.peak(act_prec);  // activations must be representable too

  const double M = as_double(m), N = as_double(n), K = as_double(k);
  const double flops = 2.0 * M * N * K;
  const double bytes = M * K * bytes_per_element(weight_prec) +
                       (K * N + M * N) * bytes_per_element(act_prec);
  return roofline(kind, flops, bytes, peak * calib.gemm_efficiency, gpu, calib);
}

double kv_cache_read_bytes(const AttentionShape& s, Precision kv_prec) {
  return as_double(s.batch) * s.seq_len * 2.0 *
         as_double(s.n_kv_heads * s.d_head) * bytes_per_element(kv_prec);
}

KernelCost attention_cost(Phase phase, const AttentionShape& s,
                          Precision kv_prec, Precision act_prec,
                          const GpuSpec& gpu, const Calibration& calib) {
  if (!(s.seq_len >= 1)) throw std::invalid_argument("attention_cost: seq_len must be >= 1");
  if (s.batch == 0 || s.d_head == 0 || s.n_q_heads == 0 || s.n_kv_heads == 0) {
    throw std::invalid_argument("attention_cost: batch, heads and d_head must be >= 1");
  }
  if (s.n_q_heads % s.n_kv_heads != 0) {
    throw std::invalid_argument("attention_cost: n_kv_heads must divide n_q_heads");
  }
  const double peak = gpu.peak(kv_prec);
  gpu.peak(act_prec);

  const double batch = as_double(s.batch);
  const double qh = as_double(s.n_q_heads);
  const double dh = as_double(s.d_head);
  const double kv_entry = 2.0 * as_double(s.n_kv_heads) * dh * bytes_per_element(kv_prec);
  const double act = bytes_per_element(act_prec);

  // QK^T and PV: two matmuls of 2·d_head FLOPs per (query, key) pair.
  double flops = 0;
  double new_tokens = 0;
  if (phase == Phase::prefill) {
    flops = 2.0 * 2.0 * batch * qh * s.seq_len * s.seq_len * dh * calib.causal_factor;
    new_tokens = s.seq_len;
  } else {
    flops = 2.0 * 2.0 * batch * qh * s.seq_len * dh;
    new_tokens = 1.0;
  }
  const double kv_read = kv_cache_read_bytes(s, kv_prec);
  const double kv_write = batch * new_tokens * kv_entry;
  const double q_and_out = 2.0 * batch * new_tokens * qh * dh * act;

  return roofline(KernelKind::attention, flops, kv_read + kv_write + q_and_out,
                  peak * calib.attention_efficiency, gpu, calib);
}

KernelCost elementwise_cost(KernelKind kind, double bytes_touched,
                            const GpuSpec& gpu, const Calibration& calib) {
  if (!(bytes_touched >= 0)) {
    throw std::invalid_argument("elementwise_cost: bytes_touched must be >= 0");
  }
  KernelCost c;
  c.kind = kind;
  c.bytes_moved = bytes_touched;
  c.memory_time = memory_seconds(bytes_touched, gpu, calib);
  c.total_time = c.memory_time;
  return c;
}

CommCost ring_allreduce_cost(double payload_bytes, std::uint64_t p,
                             const GpuSpec& gpu, const Calibration& calib) {
  if (p == 0) throw std::invalid_argument("ring_allreduce_cost: p must be >= 1");
  if (!(payload_bytes >= 0)) {
    throw std::invalid_argument("ring_allreduce_cost: payload must be >= 0");
  }
  CommCost c;
  c.kind = CommKind::all_reduce;
  if (p == 1) return c;

  const double ranks = as_double(p);
  c.steps = 2 * (p - 1);
  c.bytes_per_gpu = 2.0 * (ranks - 1.0) / ranks * payload_bytes;
  c.total_time = c.bytes_per_gpu / aggregate_link_bandwidth(gpu, p, calib) +
                 as_double(c.steps) * calib.allreduce_step_latency;
  return c;
}

CommCost p2p_cost(double payload_bytes, const GpuSpec& gpu,
                  const Calibration& calib) {
  if (!(payload_bytes >= 0)) throw std::invalid_argument("p2p_cost: payload must be >= 0");
  CommCost c;
  c.kind = CommKind::p2p;
  c.steps = 1;
  c.bytes_per_gpu = payload_bytes;
  c.total_time = (1.0 - calib.p2p_overlap_fraction) * payload_bytes /
                 gpu.link_bandwidth_bidir;
  return c;
}

}  // namespace llmsim
