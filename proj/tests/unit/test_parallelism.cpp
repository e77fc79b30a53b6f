#include <gtest/gtest.h>

#include <cmath>

#include "llmsim/errors.hpp"
#include "llmsim/parallelism.hpp"

#include "helpers.hpp"

namespace llmsim {
namespace {

using test::deployment;
using test::node;

TEST(Plan, ParseAndFormat) {
  const ParallelPlan p = ParallelPlan::parse("dp1.tp4.pp2");
  EXPECT_EQ(p, (ParallelPlan{1, 4, 2}));
  EXPECT_EQ(p.to_string(), "dp1.tp4.pp2");
  EXPECT_EQ(p.gpus(), 8u);
  for (const char* bad : {"tp4", "dp1.tp4", "dp1.tp4.pp2x", "dp-1.tp1.pp1", ""}) {
    EXPECT_THROW(ParallelPlan::parse(bad), ConfigError) << bad;
  }
}

TEST(Plan, Validation) {
  const ModelArch a70 = make_model_preset("llama31_70b");
  EXPECT_TRUE(validate_plan({1, 4, 2}, node("mi325x"), a70).empty());
  EXPECT_EQ(shard_layout({1, 4, 2}, node("mi325x"), deployment("llama31_70b")).q_heads_per_gpu,
            16u);

  auto v = validate_plan({1, 3, 1}, node("mi325x", 3), a70);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().kind, ViolationKind::q_heads_divisibility);

  v = validate_plan({1, 16, 1}, node("mi325x"), make_model_preset("llama31_405b"));
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v.front().kind, ViolationKind::occupancy);

  ModelArch tiny = a70;
  tiny.n_layers = 4;
  v = validate_plan({1, 1, 8}, node("mi325x"), tiny);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.front().kind, ViolationKind::pipeline_depth);

  EXPECT_THROW(require_valid_plan({1, 3, 1}, node("mi325x"), a70), InvalidPlanError);
}

TEST(Plan, KvHeadDivisibility) {
  const auto v = validate_plan({1, 16, 1}, node("mi325x", 16), make_model_preset("llama31_70b"));
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v.front().kind, ViolationKind::kv_heads_divisibility);
}

TEST(Plan, EnumerateEightGpuNode) {
  const auto plans = enumerate_valid_plans(node("mi325x"), make_model_preset("llama31_70b"));
  // Ordered factorisations of 8 into three factors.
  EXPECT_EQ(plans.size(), 10u);
  EXPECT_TRUE(std::is_sorted(plans.begin(), plans.end()));
  const auto single = enumerate_valid_plans(node("mi325x", 1), make_model_preset("llama31_70b"));
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single.front(), (ParallelPlan{1, 1, 1}));
}

TEST(Partition, BalancedWithRemainderFirst) {
  const auto r = partition_layers(126, 4);
  ASSERT_EQ(r.size(), 4u);
  EXPECT_EQ(r[0].size(), 32u);
  EXPECT_EQ(r[1].size(), 32u);
  EXPECT_EQ(r[2].size(), 31u);
  EXPECT_EQ(r[3].size(), 31u);
  EXPECT_EQ(r[0].begin, 0u);
  EXPECT_EQ(r[3].end, 126u);
  EXPECT_THROW(partition_layers(4, 5), std::invalid_argument);
}

TEST(Shard, WeightsPerGpu) {
  const auto dep = deployment("llama31_405b");
  EXPECT_DOUBLE_EQ(shard_layout({4, 1, 2}, node("mi325x"), dep).weight_bytes_per_gpu, 202.5e9);
  const ShardLayout pp4 = shard_layout({2, 1, 4}, node("mi325x"), dep);
  EXPECT_DOUBLE_EQ(pp4.weight_bytes_per_gpu, 101.25e9);
  EXPECT_DOUBLE_EQ(pp4.kv_fraction_per_gpu, 32.0 / 126.0);
  const ShardLayout tp8 = shard_layout({1, 8, 1}, node("mi325x"), deployment("llama31_70b"));
  EXPECT_EQ(tp8.gemm_shapes_per_gpu.fc1.m, 7168u);
  EXPECT_DOUBLE_EQ(tp8.kv_fraction_per_gpu, 1.0 / 8);
}

TEST(Capacity, ReferenceArithmetic) {
  const auto dep = deployment("llama31_405b");
  const MemoryReport tp4 = kv_capacity({1, 4, 1}, node("mi325x", 4), dep);
  EXPECT_DOUBLE_EQ(tp4.system_kv_budget, 619e9);
  const MemoryReport dp2 = kv_capacity({2, 2, 1}, node("mi325x", 4), dep);
  EXPECT_DOUBLE_EQ(dp2.system_kv_budget, 214e9);
  EXPECT_DOUBLE_EQ(kv_capacity({4, 1, 2}, node("mi325x"), dep).kv_budget_per_gpu, 53.5e9);
  EXPECT_DOUBLE_EQ(kv_capacity({2, 1, 4}, node("mi325x"), dep).kv_budget_per_gpu, 154.75e9);
}

TEST(Capacity, WeightsDoNotFit) {
  try {
    kv_capacity({8, 1, 1}, node("mi325x"), deployment("llama31_405b"));
    FAIL();
  } catch (const InfeasibleError& e) {
    EXPECT_EQ(e.constraint(), "weights_capacity");
    EXPECT_DOUBLE_EQ(e.deficit_bytes(), 405e9 - 256e9);
  }
}

TEST(Capacity, ActivationReserveReducesBudget) {
  NodeSpec n = node("mi325x");
  n.activation_reserve = 10e9;
  EXPECT_DOUBLE_EQ(kv_capacity({1, 8, 1}, n, deployment("llama31_70b")).kv_budget_per_gpu,
                   256e9 - 70e9 / 8 - 10e9);
}

TEST(MaxBatch, ReferenceValues405b) {
  const auto dep = deployment("llama31_405b", Precision::fp4);
  const auto w = make_workload_preset("mlperf_405b");
  const NodeSpec n = node("mi355x");
  EXPECT_EQ(max_nano_batch({8, 1, 1}, n, dep, w, BatchPolicy::power_of_two), 32u);
  EXPECT_EQ(max_nano_batch({2, 1, 4}, n, dep, w, BatchPolicy::power_of_two), 256u);
  EXPECT_EQ(max_nano_batch({1, 1, 8}, n, dep, w, BatchPolicy::power_of_two), 512u);
}

TEST(MaxBatch, LongAlpaca70b) {
  const auto dep = deployment("llama31_70b");
  const auto w = make_workload_preset("longalpaca_70b");
  const NodeSpec n = node("mi325x");
  // Oracle: floor((256e9 - 70e9) / (163840 * 9300)) = 122.
  const double oracle = std::floor((256e9 - 70e9) / (163840.0 * (9092 + 208)));
  EXPECT_EQ(max_nano_batch({8, 1, 1}, n, dep, w, BatchPolicy::exact),
            static_cast<std::uint64_t>(oracle));
  EXPECT_EQ(max_nano_batch({8, 1, 1}, n, dep, w, BatchPolicy::exact), 122u);
  EXPECT_LT(max_nano_batch({8, 1, 1}, n, dep, w, BatchPolicy::exact), 256u);
  EXPECT_GE(max_nano_batch({4, 2, 1}, n, dep, w, BatchPolicy::power_of_two), 256u);
}

TEST(MaxBatch, ZeroWhenNothingFits) {
  ModelDeployment dep = deployment("llama31_70b");
  NodeSpec n = node("mi325x");
  n.activation_reserve = 256e9 - 70e9;
  EXPECT_EQ(max_nano_batch({8, 1, 1}, n, dep, make_workload_preset("longalpaca_70b"),
                           BatchPolicy::power_of_two),
            0u);
}

}  // namespace
}  // namespace llmsim
