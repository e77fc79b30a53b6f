#include <gtest/gtest.h>

#include "llmsim/config.hpp"
#include "llmsim/errors.hpp"
#include "llmsim/hardware.hpp"
#include "llmsim/model.hpp"
#include "llmsim/workload.hpp"

#include "helpers.hpp"

namespace llmsim {
namespace {

TEST(Precision, BytesPerElement) {
  EXPECT_EQ(bytes_per_element(Precision::fp32), 4.0);
  EXPECT_EQ(bytes_per_element(Precision::fp16), 2.0);
  EXPECT_EQ(bytes_per_element(Precision::fp8), 1.0);
  EXPECT_EQ(bytes_per_element(Precision::fp4), 0.5);
}

TEST(Precision, ParseRoundTrip) {
  for (Precision p : kAllPrecisions) EXPECT_EQ(parse_precision(to_string(p)), p);
  EXPECT_THROW(parse_precision("bf16"), ConfigError);
}

TEST(ModelRegistry, Llama70bShape) {
  const ModelArch a = make_model_preset("llama31_70b");
  EXPECT_EQ(a.n_layers, 80u);
  EXPECT_EQ(a.d_hidden, 8192u);
  EXPECT_EQ(a.n_q_heads, 64u);
  EXPECT_EQ(a.n_kv_heads, 8u);
  EXPECT_NO_THROW(validate(a));
}

TEST(ModelRegistry, UnknownPreset) {
  EXPECT_THROW(make_model_preset("llama2_7b"), ConfigError);
}

TEST(ModelRegistry, ParamCountsNearNominal) {
  // Independent count: per layer q/k/v/o + gate/up/down, plus untied embeddings.
  auto oracle = [](const ModelArch& a) {
    const double d = a.d_hidden, f = a.d_intermediate;
    const double kv = static_cast<double>(a.n_kv_heads * a.d_head);
    const double layer = d * d * 2 + 2 * d * kv + 3 * d * f;
    return a.n_layers * layer + 2.0 * a.vocab_size * d;
  };
  for (const char* name : {"llama31_70b", "llama31_405b"}) {
    const ModelArch a = make_model_preset(name);
    EXPECT_DOUBLE_EQ(static_cast<double>(param_count(a)), oracle(a)) << name;
  }
  EXPECT_NEAR(param_count(make_model_preset("llama31_70b")) / 1e9, 70.55, 0.01);
  EXPECT_NEAR(param_count(make_model_preset("llama31_405b")) / 1e9, 405.85, 0.01);
}

TEST(ModelRegistry, ParamCountWithoutEmbeddings) {
  ModelArch a{.name = "toy", .n_layers = 2, .d_hidden = 4, .d_intermediate = 8,
              .n_q_heads = 2, .n_kv_heads = 1, .d_head = 2, .vocab_size = 0};
  // qkv (4+4)x4 + o 4x4 + fc1 16x4 + fc2 4x8 = 32+16+64+32 = 144 per layer
  EXPECT_EQ(param_count(a), 288u);
}

TEST(ModelRegistry, WeightBytesUseDeclaredCount) {
  EXPECT_DOUBLE_EQ(weight_bytes(test::deployment("llama31_405b")), 405e9);
  EXPECT_DOUBLE_EQ(weight_bytes(test::deployment("llama31_405b", Precision::fp4)), 202.5e9);
  EXPECT_DOUBLE_EQ(weight_bytes(test::deployment("llama31_70b", Precision::fp16)), 140e9);
}

TEST(ModelRegistry, KvBytesPerToken) {
  // 2 (K,V) x layers x kv_heads x d_head x bytes
  EXPECT_DOUBLE_EQ(kv_bytes_per_token(test::deployment("llama31_405b")), 2.0 * 126 * 8 * 128);
  EXPECT_DOUBLE_EQ(kv_bytes_per_token(test::deployment("llama31_70b")), 163840.0);
  auto fp16 = test::deployment("llama31_70b", Precision::fp8, Precision::fp16);
  EXPECT_DOUBLE_EQ(kv_bytes_per_token(fp16), 2 * 163840.0);
}

TEST(ModelRegistry, GemmShapes) {
  const GemmShapeSet s70 = layer_gemm_shapes(make_model_preset("llama31_70b"));
  EXPECT_EQ(s70.qkv, (GemmShape{10240, 8192}));
  EXPECT_EQ(s70.out_proj, (GemmShape{8192, 8192}));
  EXPECT_EQ(s70.fc1, (GemmShape{57344, 8192}));
  EXPECT_EQ(s70.fc2, (GemmShape{8192, 28672}));
  const GemmShapeSet s405 = layer_gemm_shapes(make_model_preset("llama31_405b"));
  EXPECT_EQ(s405.fc2, (GemmShape{16384, 53248}));
}

TEST(ModelRegistry, ShardedShapes) {
  const GemmShapeSet s = sharded_gemm_shapes(make_model_preset("llama31_70b"), 8);
  EXPECT_EQ(s.fc1.m, 7168u);
  EXPECT_EQ(s.qkv.m, 1280u);
  EXPECT_EQ(s.out_proj, (GemmShape{8192, 1024}));
  EXPECT_EQ(s.fc2, (GemmShape{8192, 3584}));
}

TEST(ModelRegistry, ValidateRejectsBadArch) {
  ModelArch a = make_model_preset("llama31_70b");
  a.n_kv_heads = 7;
  EXPECT_THROW(validate(a), ConfigError);
  a = make_model_preset("llama31_70b");
  a.n_layers = 0;
  EXPECT_THROW(validate(a), ConfigError);
  a = make_model_preset("llama31_70b");
  a.declared_param_count = -1;
  EXPECT_THROW(validate(a), ConfigError);
}

TEST(ModelRegistry, IniRoundTrip) {
  for (const auto& name : model_preset_names()) {
    ModelDeployment d = test::deployment(name, Precision::fp4, Precision::fp16);
    EXPECT_EQ(parse_model_ini(dump_model_ini(d)), d) << name;
  }
}

TEST(Hardware, Presets) {
  const GpuSpec a = make_gpu_preset("mi325x");
  EXPECT_EQ(a.hbm_capacity, 256e9);
  EXPECT_EQ(a.link_bandwidth_bidir, 128e9);
  EXPECT_FALSE(a.supports(Precision::fp4));
  const GpuSpec b = make_gpu_preset("mi355x");
  EXPECT_EQ(b.hbm_capacity, 288e9);
  EXPECT_EQ(b.link_bandwidth_bidir, 153.6e9);
  EXPECT_TRUE(b.supports(Precision::fp4));
  EXPECT_THROW(make_gpu_preset("h100"), ConfigError);
  EXPECT_THROW(a.peak(Precision::fp4), UnsupportedPrecisionError);
}

TEST(Hardware, PresetsRoundTripThroughIni) {
  for (const auto& name : gpu_preset_names()) {
    const GpuSpec g = make_gpu_preset(name);
    EXPECT_EQ(parse_gpu_ini(dump_gpu_ini(g)), g) << name;
  }
}

TEST(Hardware, IniOverridesPreset) {
  const GpuSpec g = parse_gpu_ini("[hardware]\ngpu = mi325x\nhbm_bandwidth = 5e12\n");
  EXPECT_EQ(g.hbm_bandwidth, 5e12);
  EXPECT_EQ(g.hbm_capacity, 256e9);
}

TEST(Hardware, AggregateLinkBandwidth) {
  const GpuSpec g = make_gpu_preset("mi325x");
  Calibration c;
  EXPECT_DOUBLE_EQ(aggregate_link_bandwidth(g, 8, c), 896e9);
  EXPECT_DOUBLE_EQ(aggregate_link_bandwidth(g, 2, c), g.link_bandwidth_bidir);
  c.aggregate_link_override = 256e9;
  EXPECT_DOUBLE_EQ(aggregate_link_bandwidth(g, 8, c), 256e9);
  EXPECT_THROW(aggregate_link_bandwidth(g, 1, c), std::invalid_argument);
}

TEST(Hardware, AggregateMonotoneInGroupSize) {
  const GpuSpec g = make_gpu_preset("mi355x");
  for (std::uint64_t p = 2; p < 64; ++p) {
    EXPECT_LE(aggregate_link_bandwidth(g, p, {}), aggregate_link_bandwidth(g, p + 1, {}));
  }
}

TEST(Hardware, ValidationErrorsNameTheField) {
  GpuSpec g = make_gpu_preset("mi325x");
  g.hbm_capacity = 0;
  try {
    validate(g);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "hbm_capacity");
  }
  Calibration c;
  c.p2p_overlap_fraction = 1.0;
  EXPECT_THROW(validate(c), ConfigError);
  c = {};
  c.gemm_efficiency = 0;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(Calibration, ShippedFileMatchesBuiltInDefaults) {
  const auto path = shipped_calibration_path();
  ASSERT_TRUE(path.has_value());
  EXPECT_EQ(load_calibration(*path), Calibration{});
}

TEST(Calibration, IniRoundTrip) {
  Calibration c;
  c.gemm_efficiency = 0.731;
  c.aggregate_link_override = 256e9;
  EXPECT_EQ(parse_calibration_ini(dump_calibration_ini(c)), c);
  EXPECT_EQ(parse_calibration_ini(dump_calibration_ini(Calibration{})), Calibration{});
}

TEST(Calibration, UnknownKeyIsConfigError) {
  try {
    parse_calibration_ini("[calibration]\ngemm_eff = 0.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "calibration.gemm_eff");
  }
}

TEST(Workload, Presets) {
  EXPECT_EQ(make_workload_preset("longalpaca_70b").avg_isl, 9092u);
  const WorkloadSpec m = make_workload_preset("mlperf_405b");
  EXPECT_EQ(m.avg_osl, 684u);
  EXPECT_EQ(m.total(), 10112u);
  EXPECT_EQ(make_workload_preset("combined_short_405b"), (WorkloadSpec{"combined_short_405b", 89, 20}));
  EXPECT_EQ(make_workload_preset("combined_short_70b"), (WorkloadSpec{"combined_short_70b", 106, 26}));
  EXPECT_THROW(make_workload_preset("sharegpt"), ConfigError);
}

TEST(Workload, TotalIsSum) {
  for (const auto& n : workload_preset_names()) {
    const WorkloadSpec w = make_workload_preset(n);
    EXPECT_EQ(w.total(), w.avg_isl + w.avg_osl);
  }
}

TEST(Workload, CustomFromIni) {
  const WorkloadSpec w = parse_workload_ini("[workload]\nname = chat\navg_isl = 512\navg_osl = 128\n");
  EXPECT_EQ(w, (WorkloadSpec{"chat", 512, 128}));
  EXPECT_THROW(parse_workload_ini("[workload]\nname = bad\navg_isl = 0\navg_osl = 1\n"), ConfigError);
}

}  // namespace
}  // namespace llmsim
