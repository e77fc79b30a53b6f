#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmsim/precision.hpp"

namespace llmsim {

/// Dense decoder-only transformer hyperparameters.
///
/// `declared_param_count` carries the vendor's rounded total (70e9, 405e9);
/// capacity arithmetic prefers it over the count derived from the dims.
struct ModelArch {
  std::string name;
  std::uint64_t n_layers = 0;
  std::uint64_t d_hidden = 0;
  std::uint64_t d_intermediate = 0;
  std::uint64_t n_q_heads = 0;
  std::uint64_t n_kv_heads = 0;
  std::uint64_t d_head = 0;
  std::uint64_t vocab_size = 0;
  std::optional<double> declared_param_count;

  bool operator==(const ModelArch&) const = default;
};

// Throws ConfigError naming the first violated invariant.
void validate(const ModelArch& arch);

struct ModelDeployment {
  ModelArch arch;
  Precision weight_precision = Precision::fp8;
  Precision kv_precision = Precision::fp8;
  Precision activation_precision = Precision::fp16;

  bool operator==(const ModelDeployment&) const = default;
};

// GEMM weight shape: M output rows by K reduction columns. N (tokens) is
// supplied per phase when the GEMM is costed.
struct GemmShape {
  std::uint64_t m = 0;
  std::uint64_t k = 0;

  std::uint64_t weight_elements() const { return m * k; }
  bool operator==(const GemmShape&) const = default;
};

struct GemmShapeSet {
  GemmShape qkv;
  GemmShape out_proj;
  GemmShape fc1;  // gate and up projections fused
  GemmShape fc2;

  std::uint64_t weight_elements() const {
    return qkv.weight_elements() + out_proj.weight_elements() +
           fc1.weight_elements() + fc2.weight_elements();
  }
  bool operator==(const GemmShapeSet&) const = default;
};

ModelArch make_model_preset(std::string_view name);
std::vector<std::string> model_preset_names();

std::uint64_t param_count(const ModelArch& arch);

// Bytes of resident weights, embeddings and LM head included.
double weight_bytes(const ModelDeployment& dep);

// K and V bytes for one token across every layer.
double kv_bytes_per_token(const ModelDeployment& dep);

GemmShapeSet layer_gemm_shapes(const ModelArch& arch);

// Per-GPU shapes under tensor parallelism: QKV and FC-1 are split row-wise
// (M / tp), output projection and FC-2 column-wise (K / tp).
GemmShapeSet sharded_gemm_shapes(const ModelArch& arch, std::uint64_t tp);

}  // namespace llmsim
