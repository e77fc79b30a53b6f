#include "llmsim/model.hpp"

#include <stdexcept>
#include <string>

#include "llmsim/errors.hpp"

namespace llmsim {
namespace {

constexpr std::uint64_t kLlama31Vocab = 128256;

void require_positive(std::uint64_t value, const char* field) {
  if (value == 0) throw ConfigError(field, "must be strictly positive");
}

}  // namespace

void validate(const ModelArch& arch) {
  require_positive(arch.n_layers, "n_layers");
  require_positive(arch.d_hidden, "d_hidden");
  require_positive(arch.d_intermediate, "d_intermediate");
  require_positive(arch.n_q_heads, "n_q_heads");
  require_positive(arch.n_kv_heads, "n_kv_heads");
  require_positive(arch.d_head, "d_head");
  if (arch.n_q_heads * arch.d_head != arch.d_hidden) {
    throw ConfigError("d_hidden", "n_q_heads * d_head must equal d_hidden");
  }
  if (arch.n_q_heads % arch.n_kv_heads != 0) {
    throw ConfigError("n_kv_heads", "must divide n_q_heads");
  }
  if (arch.declared_param_count && !(*arch.declared_param_count > 0)) {
    throw ConfigError("declared_param_count", "must be positive when set");
  }
}

ModelArch make_model_preset(std::string_view name) {
  if (name == "llama31_70b") {
    return ModelArch{.name = "llama31_70b",
                     .n_layers = 80,
                     .d_hidden = 8192,
                     .d_intermediate = 28672,
                     .n_q_heads = 64,
                     .n_kv_heads = 8,
                     .d_head = 128,
                     .vocab_size = kLlama31Vocab,
                     .declared_param_count = 70e9};
  }
  if (name == "llama31_405b") {
    return ModelArch{.name = "llama31_405b",
                     .n_layers = 126,
                     .d_hidden = 16384,
                     .d_intermediate = 53248,
                     .n_q_heads = 128,
                     .n_kv_heads = 8,
                     .d_head = 128,
                     .vocab_size = kLlama31Vocab,
                     .declared_param_count = 405e9};
  }
  throw ConfigError("model", "unknown model preset '" + std::string(name) + "'");
}

std::vector<std::string> model_preset_names() {
  return {"llama31_70b", "llama31_405b"};
}

std::uint64_t param_count(const ModelArch& arch) {
  const GemmShapeSet shapes = layer_gemm_shapes(arch);
  // Untied input embedding and LM head.
  return arch.n_layers * shapes.weight_elements() +
         2 * arch.vocab_size * arch.d_hidden;
}

double weight_bytes(const ModelDeployment& dep) {
  const double params = dep.arch.declared_param_count.value_or(
      static_cast<double>(param_count(dep.arch)));
  return params * bytes_per_element(dep.weight_precision);
}

double kv_bytes_per_token(const ModelDeployment& dep) {
  const ModelArch& a = dep.arch;
  return 2.0 * static_cast<double>(a.n_layers * a.n_kv_heads * a.d_head) *
         bytes_per_element(dep.kv_precision);
}

GemmShapeSet layer_gemm_shapes(const ModelArch& arch) {
  const std::uint64_t d = arch.d_hidden;
  return GemmShapeSet{
      .qkv = {d + 2 * arch.n_kv_heads * arch.d_head, d},
      .out_proj = {d, d},
      .fc1 = {2 * arch.d_intermediate, d},
      .fc2 = {d, arch.d_intermediate},
  };
}

GemmShapeSet sharded_gemm_shapes(const ModelArch& arch, std::uint64_t tp) {
  if (tp == 0) throw std::invalid_argument("tp must be >= 1");
  GemmShapeSet s = layer_gemm_shapes(arch);
  s.qkv.m /= tp;
  s.fc1.m /= tp;
  s.out_proj.k /= tp;
  s.fc2.k /= tp;
  return s;
}

}  // namespace llmsim
