#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "llmsim/engine.hpp"
#include "llmsim/hardware.hpp"
#include "llmsim/model.hpp"
#include "llmsim/workload.hpp"

// INI-style configuration. Sections:
//
//   [model]        preset=llama31_70b plus any ModelArch field override,
//                  weight_precision / kv_precision / activation_precision
//   [hardware]     gpu=mi325x plus GpuSpec overrides (hbm_capacity,
//                  hbm_bandwidth, link_bandwidth_bidir, peak_fp16, ...,
//                  precisions=fp16,fp8), node_size, activation_reserve
//   [workload]     presets=a,b  or  name / avg_isl / avg_osl
//   [plans]        plans=all-valid | dp1.tp8.pp1,dp8.tp1.pp1,...
//                  batches=pow2 | 1,2,4   max_batch, baseline,
//                  baseline_batch, decode_context
//   [calibration]  file=<path relative to the config> and/or inline keys
//
// Numbers accept plain or scientific notation ("256e9").

namespace llmsim {

inline constexpr std::string_view kCalibrationEnvVar = "LLMSIM_CALIBRATION";

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
double parse_number(std::string_view text, const std::string& field);

Calibration parse_calibration_ini(std::string_view text);
std::string dump_calibration_ini(const Calibration& calib);
Calibration load_calibration(const std::filesystem::path& path);

// The calibration file committed with the sources, if it is present.
std::optional<std::filesystem::path> shipped_calibration_path();

// Explicit path, else $LLMSIM_CALIBRATION, else the shipped file, else the
// built-in defaults.
Calibration resolve_calibration(
    const std::optional<std::filesystem::path>& explicit_path = {});

GpuSpec parse_gpu_ini(std::string_view text);
std::string dump_gpu_ini(const GpuSpec& gpu);

ModelDeployment parse_model_ini(std::string_view text);
std::string dump_model_ini(const ModelDeployment& dep);

WorkloadSpec parse_workload_ini(std::string_view text);

}  // namespace llmsim
