// llmsim command line: presets, single estimates, sweeps, feasibility tables.
//
// Exit codes: 0 success (including sweeps with some infeasible rows),
// 2 configuration error, 3 nothing feasible.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "llmsim/config.hpp"
#include "llmsim/engine.hpp"
#include "llmsim/errors.hpp"
#include "llmsim/sweep.hpp"

namespace {

using namespace llmsim;

constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;

struct CommonOptions {
  std::string model = "llama31_70b";
  std::string gpu = "mi325x";
  std::uint64_t node_size = 8;
  std::string weight_precision = "fp8";
  std::string kv_precision = "fp8";
  std::string activation_precision = "fp16";
  std::optional<std::string> calibration;
  std::string decode_context = "mid";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--model", o.model, "Model preset");
  cmd->add_option("--gpu", o.gpu, "GPU preset");
  cmd->add_option("--node-size", o.node_size, "GPUs in the node");
  cmd->add_option("--weight-precision", o.weight_precision);
  cmd->add_option("--kv-precision", o.kv_precision);
  cmd->add_option("--activation-precision", o.activation_precision);
  cmd->add_option("--calibration", o.calibration, "Calibration INI file");
  cmd->add_option("--decode-context", o.decode_context, "start, mid or end");
}

ModelDeployment deployment_of(const CommonOptions& o) {
  ModelDeployment d;
  d.arch = make_model_preset(o.model);
  d.weight_precision = parse_precision(o.weight_precision);
  d.kv_precision = parse_precision(o.kv_precision);
  d.activation_precision = parse_precision(o.activation_precision);
  return d;
}

NodeSpec node_of(const CommonOptions& o) {
  NodeSpec n;
  n.gpu = make_gpu_preset(o.gpu);
  n.n_gpus = o.node_size;
  validate(n);
  return n;
}

Calibration calibration_of(const CommonOptions& o) {
  if (o.calibration) return resolve_calibration(std::filesystem::path(*o.calibration));
  return resolve_calibration();
}

int cmd_presets() {
  fmt::print("models:\n");
  for (const auto& n : model_preset_names()) {
    const ModelArch a = make_model_preset(n);
    fmt::print("  {:<22} layers={} d={} heads={}/{}\n", n, a.n_layers, a.d_hidden,
               a.n_q_heads, a.n_kv_heads);
  }
  fmt::print("gpus:\n");
  for (const auto& n : gpu_preset_names()) {
    const GpuSpec g = make_gpu_preset(n);
    fmt::print("  {:<22} hbm={} GB bw={} TB/s\n", n, g.hbm_capacity / 1e9,
               g.hbm_bandwidth / 1e12);
  }
  fmt::print("workloads:\n");
  for (const auto& n : workload_preset_names()) {
    const WorkloadSpec w = make_workload_preset(n);
    fmt::print("  {:<22} isl={} osl={}\n", n, w.avg_isl, w.avg_osl);
  }
  return 0;
}

int cmd_estimate(const CommonOptions& o, const std::string& workload,
                 const std::string& plan, std::uint64_t batch) {
  Scenario s{.plan = ParallelPlan::parse(plan),
             .deployment = deployment_of(o),
             .workload = make_workload_preset(workload),
             .nano_batch = batch,
             .node = node_of(o),
             .calibration = calibration_of(o),
             .decode_context = parse_decode_context(o.decode_context)};
  const InferenceEstimate e = estimate(s);
  fmt::print("plan {}  nano batch {}  global batch {}\n", s.plan.to_string(), e.nano_batch,
             e.global_batch);
  fmt::print("ttft {:.6g} s   tpot {:.6g} s   tps {:.6g}\n", e.ttft, e.tpot, e.tps);
  fmt::print("kv budget per gpu {:.4g} GB\n", e.memory.kv_budget_per_gpu / 1e9);
  fmt::print("{:<14}{:>14}{:>9}{:>14}{:>9}\n", "kernel", "prefill s", "share",
             "decode s", "share");
  for (const auto& [kind, p] : e.prefill_breakdown.per_kernel) {
    const KernelShare& d = e.decode_breakdown.per_kernel.at(kind);
    fmt::print("{:<14}{:>14.6g}{:>8.2f}%{:>14.6g}{:>8.2f}%\n", to_string(kind), p.time,
               100 * p.share, d.time, 100 * d.share);
  }
  return 0;
}

int finish_sweep(const SweepResult& result, const std::string& format,
                 const std::optional<std::string>& out) {
  const ReportFormat f = parse_report_format(format);
  if (out) {
    for (const auto& p : emit_report(result, f, *out)) std::cerr << "wrote " << p << "\n";
  } else if (f == ReportFormat::json) {
    std::cout << to_json_text(result);
  } else if (result.config.workloads.size() == 1) {
    std::cout << to_csv(result);
  } else {
    // One CSV block per workload; --out writes them to separate files.
    for (const WorkloadSpec& w : result.config.workloads) {
      std::cout << "# workload " << w.name << "\n" << to_csv(result, w.name) << "\n";
    }
  }
  return result.status() == SweepStatus::none_feasible ? kExitInfeasible : 0;
}

int cmd_feasibility(const CommonOptions& o, const std::string& workload) {
  const WorkloadSpec w = make_workload_preset(workload);
  fmt::print("plan,weights_fit,max_nano_batch\n");
  bool any = false;
  for (const FeasibilityRow& r : feasibility_matrix(deployment_of(o), node_of(o), w)) {
    fmt::print("{},{},{}\n", r.plan.to_string(), r.weights_fit, r.max_nano_batch);
    any = any || r.max_nano_batch > 0;
  }
  return any ? 0 : kExitInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytical LLM inference simulator"};
  app.require_subcommand(1);

  auto* presets = app.add_subcommand("presets", "Show built-in presets");
  presets->add_subcommand("list", "List model, GPU and workload presets");

  CommonOptions est_opts;
  std::string est_workload = "longalpaca_70b";
  std::string est_plan = "dp8.tp1.pp1";
  std::uint64_t est_batch = 1;
  auto* est = app.add_subcommand("estimate", "Estimate one scenario");
  add_common(est, est_opts);
  est->add_option("--workload", est_workload, "Workload preset");
  est->add_option("--plan", est_plan, "dpA.tpB.ppC");
  est->add_option("--batch", est_batch, "Nano batch");

  CommonOptions sw_opts;
  std::optional<std::string> sw_config;
  std::vector<std::string> sw_workloads;
  std::vector<std::string> sw_plans;
  std::vector<std::uint64_t> sw_batches;
  std::optional<std::uint64_t> sw_max_batch;
  std::optional<std::string> sw_baseline;
  std::string sw_format = "csv";
  std::optional<std::string> sw_out;
  unsigned sw_threads = 0;
  auto* sw = app.add_subcommand("sweep", "Sweep plans and batch sizes");
  add_common(sw, sw_opts);
  sw->add_option("--config", sw_config, "Sweep INI file (other model flags ignored)");
  sw->add_option("--workload", sw_workloads, "Workload preset(s)")->delimiter(',');
  sw->add_option("--plan", sw_plans, "Plans, or 'all-valid'")->delimiter(',');
  sw->add_option("--batch", sw_batches, "Explicit nano batches")->delimiter(',');
  sw->add_option("--max-batch", sw_max_batch, "Upper end of the power-of-two grid");
  sw->add_option("--baseline", sw_baseline, "Normalisation plan");
  sw->add_option("--format", sw_format, "csv or json");
  sw->add_option("--out", sw_out, "Report path (stdout when omitted)");
  sw->add_option("--threads", sw_threads, "Worker threads, 0 = all cores");

  CommonOptions fe_opts;
  std::string fe_workload = "longalpaca_70b";
  auto* fe = app.add_subcommand("feasibility", "Max nano batch for every valid plan");
  add_common(fe, fe_opts);
  fe->add_option("--workload", fe_workload, "Workload preset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (presets->parsed()) return cmd_presets();
    if (est->parsed()) return cmd_estimate(est_opts, est_workload, est_plan, est_batch);
    if (fe->parsed()) return cmd_feasibility(fe_opts, fe_workload);
    if (sw->parsed()) {
      SweepConfig cfg;
      if (sw_config) {
        cfg = load_sweep_config(*sw_config);
      } else {
        cfg.deployment = deployment_of(sw_opts);
        cfg.node = node_of(sw_opts);
        cfg.calibration = calibration_of(sw_opts);
        cfg.decode_context = parse_decode_context(sw_opts.decode_context);
        if (sw_workloads.empty()) sw_workloads.push_back("longalpaca_70b");
        for (const auto& w : sw_workloads) cfg.workloads.push_back(make_workload_preset(w));
        if (sw_plans.empty() || (sw_plans.size() == 1 && sw_plans[0] == "all-valid")) {
          cfg.all_valid_plans = true;
        } else {
          for (const auto& p : sw_plans) cfg.plans.push_back(ParallelPlan::parse(p));
        }
        if (!sw_batches.empty()) {
          cfg.batch_selection = BatchSelection::explicit_list;
          cfg.batches = sw_batches;
        }
        cfg.max_batch = sw_max_batch;
        if (sw_baseline) cfg.baseline_plan = ParallelPlan::parse(*sw_baseline);
      }
      return finish_sweep(run_sweep(cfg, sw_threads), sw_format, sw_out);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const UnsupportedPrecisionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidPlanError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible [" << e.constraint() << "]: " << e.what() << "\n";
    return kExitInfeasible;
  }
  return 0;
}
