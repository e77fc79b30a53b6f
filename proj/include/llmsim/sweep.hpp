#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmsim/engine.hpp"
#include "llmsim/hardware.hpp"
#include "llmsim/model.hpp"
#include "llmsim/parallelism.hpp"
#include "llmsim/workload.hpp"

namespace llmsim {

enum class BatchSelection { powers_of_two_up_to_max, explicit_list };

struct SweepConfig {
  ModelDeployment deployment;
  NodeSpec node;
  std::vector<WorkloadSpec> workloads;
  // Ignored when all_valid_plans is set.
  std::vector<ParallelPlan> plans;
  bool all_valid_plans = false;
  BatchSelection batch_selection = BatchSelection::powers_of_two_up_to_max;
  std::vector<std::uint64_t> batches;
  // Upper end of the power-of-two grid. Unset: the largest max_nano_batch
  // among the swept plans.
  std::optional<std::uint64_t> max_batch;
  // Unset: the non-parallel plan dp<n>.tp1.pp1.
  std::optional<ParallelPlan> baseline_plan;
  std::uint64_t baseline_batch = 1;
  Calibration calibration;
  DecodeContext decode_context = DecodeContext::mid;

  bool operator==(const SweepConfig&) const = default;
};

// Throws ConfigError naming the offending field.
void validate(const SweepConfig& cfg);

std::vector<ParallelPlan> resolve_plans(const SweepConfig& cfg);
ParallelPlan resolve_baseline(const SweepConfig& cfg);

SweepConfig load_sweep_config(const std::filesystem::path& path);
SweepConfig parse_sweep_config(std::string_view text,
                               const std::filesystem::path& base_dir = {});

struct RowMetrics {
  double ttft = 0;
  double tpot = 0;
  double tps = 0;
  double norm_ttft = 0;
  double norm_tpot = 0;
  double norm_tps = 0;
  // Kernel with the largest share of one request's time
  // (ttft + OSL × tpot).
  std::string top_kernel;
  double top_kernel_share = 0;

  bool operator==(const RowMetrics&) const = default;
};

struct SweepRow {
  std::string workload;
  ParallelPlan plan;
  std::uint64_t nano_batch = 0;
  std::uint64_t global_batch = 0;
  // Set on feasible rows only.
  std::optional<RowMetrics> metrics;
  // Set on infeasible rows only.
  std::string binding_constraint;

  bool feasible() const { return metrics.has_value(); }
  bool operator==(const SweepRow&) const = default;
};

enum class SweepStatus { all_feasible, some_infeasible, none_feasible };

struct SweepResult {
  SweepConfig config;
  std::vector<SweepRow> rows;

  SweepStatus status() const;
  bool operator==(const SweepResult&) const = default;
};

// Rows ordered by workload (config order), plan (dp, tp, pp), then batch.
// `threads` = 0 uses the hardware concurrency.
SweepResult run_sweep(const SweepConfig& cfg, unsigned threads = 0);

enum class ReportFormat { csv, json };

ReportFormat parse_report_format(std::string_view text);

// Header: plan,tp,pp,dp,nano_batch,global_batch,feasible,ttft_s,tpot_s,tps,
//         norm_ttft,norm_tpot,norm_tps,top_kernel,top_kernel_share
std::string to_csv(const SweepResult& result, std::string_view workload = {});
std::string to_json_text(const SweepResult& result);
SweepResult sweep_result_from_json(std::string_view text);

// Writes atomically (temp file + rename). A multi-workload CSV is split into
// one file per workload, suffixed "-<workload>". Returns the written paths.
std::vector<std::filesystem::path> emit_report(
    const SweepResult& result, ReportFormat format,
    const std::filesystem::path& path);

struct FeasibilityRow {
  ParallelPlan plan;
  // Power-of-two policy; 0 when weights do not fit.
  std::uint64_t max_nano_batch = 0;
  bool weights_fit = true;
};

std::vector<FeasibilityRow> feasibility_matrix(const ModelDeployment& dep,
                                               const NodeSpec& node,
                                               const WorkloadSpec& workload);

}  // namespace llmsim
