#include "llmsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "llmsim/config.hpp"
#include "llmsim/errors.hpp"

namespace llmsim {
namespace {

using nlohmann::json;

struct Task {
  std::size_t workload;
  ParallelPlan plan;
  std::uint64_t batch;
};

struct Outcome {
  std::optional<InferenceEstimate> estimate;
  std::string constraint;
};

Scenario make_scenario(const SweepConfig& cfg, const WorkloadSpec& w,
                       const ParallelPlan& plan, std::uint64_t batch) {
  return Scenario{.plan = plan,
                  .deployment = cfg.deployment,
                  .workload = w,
                  .nano_batch = batch,
                  .node = cfg.node,
                  .calibration = cfg.calibration,
                  .decode_context = cfg.decode_context};
}

Outcome evaluate(const Scenario& s) {
  try {
    return {estimate(s), {}};
  } catch (const InfeasibleError& e) {
    return {std::nullopt, e.constraint()};
  }
}

std::uint64_t plan_max_batch(const SweepConfig& cfg, const ParallelPlan& plan,
                             const WorkloadSpec& w) {
  try {
    return max_nano_batch(plan, cfg.node, cfg.deployment, w, BatchPolicy::power_of_two);
  } catch (const InfeasibleError&) {
    return 0;
  }
}

std::vector<std::uint64_t> batch_grid(const SweepConfig& cfg,
                                      const std::vector<ParallelPlan>& plans,
                                      const WorkloadSpec& w) {
  if (cfg.batch_selection == BatchSelection::explicit_list) {
    std::vector<std::uint64_t> b = cfg.batches;
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
  std::uint64_t cap = 1;
  if (cfg.max_batch) {
    cap = *cfg.max_batch;
  } else {
    for (const ParallelPlan& p : plans) cap = std::max(cap, plan_max_batch(cfg, p, w));
  }
  std::vector<std::uint64_t> grid;
  for (std::uint64_t b = 1; b <= cap; b *= 2) grid.push_back(b);
  return grid;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t i = next++; i < count; i = next++) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
          next = count;
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("out", "cannot write " + path.string());
    out << content;
    out.flush();
    if (!out) throw ConfigError("out", "failed writing " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ConfigError("out", "cannot move report into place at " + path.string());
  }
}

// JSON mapping. Doubles survive a dump/parse cycle exactly.

json calibration_json(const Calibration& c) {
  return {{"gemm_efficiency", c.gemm_efficiency},
          {"attention_efficiency", c.attention_efficiency},
          {"memory_efficiency", c.memory_efficiency},
          {"allreduce_step_latency", c.allreduce_step_latency},
          {"p2p_overlap_fraction", c.p2p_overlap_fraction},
          {"aggregate_link_override",
           c.aggregate_link_override ? json(*c.aggregate_link_override) : json(nullptr)},
          {"causal_factor", c.causal_factor}};
}

Calibration calibration_from(const json& j) {
  Calibration c;
  c.gemm_efficiency = j.at("gemm_efficiency").get<double>();
  c.attention_efficiency = j.at("attention_efficiency").get<double>();
  c.memory_efficiency = j.at("memory_efficiency").get<double>();
  c.allreduce_step_latency = j.at("allreduce_step_latency").get<double>();
  c.p2p_overlap_fraction = j.at("p2p_overlap_fraction").get<double>();
  if (!j.at("aggregate_link_override").is_null()) {
    c.aggregate_link_override = j.at("aggregate_link_override").get<double>();
  }
  c.causal_factor = j.at("causal_factor").get<double>();
  return c;
}

json deployment_json(const ModelDeployment& d) {
  const ModelArch& a = d.arch;
  return {{"name", a.name},
          {"n_layers", a.n_layers},
          {"d_hidden", a.d_hidden},
          {"d_intermediate", a.d_intermediate},
          {"n_q_heads", a.n_q_heads},
          {"n_kv_heads", a.n_kv_heads},
          {"d_head", a.d_head},
          {"vocab_size", a.vocab_size},
          {"declared_param_count",
           a.declared_param_count ? json(*a.declared_param_count) : json(nullptr)},
          {"weight_precision", to_string(d.weight_precision)},
          {"kv_precision", to_string(d.kv_precision)},
          {"activation_precision", to_string(d.activation_precision)}};
}

ModelDeployment deployment_from(const json& j) {
  ModelDeployment d;
  ModelArch& a = d.arch;
  a.name = j.at("name").get<std::string>();
  a.n_layers = j.at("n_layers").get<std::uint64_t>();
  a.d_hidden = j.at("d_hidden").get<std::uint64_t>();
  a.d_intermediate = j.at("d_intermediate").get<std::uint64_t>();
  a.n_q_heads = j.at("n_q_heads").get<std::uint64_t>();
  a.n_kv_heads = j.at("n_kv_heads").get<std::uint64_t>();
  a.d_head = j.at("d_head").get<std::uint64_t>();
  a.vocab_size = j.at("vocab_size").get<std::uint64_t>();
  if (!j.at("declared_param_count").is_null()) {
    a.declared_param_count = j.at("declared_param_count").get<double>();
  }
  d.weight_precision = parse_precision(j.at("weight_precision").get<std::string>());
  d.kv_precision = parse_precision(j.at("kv_precision").get<std::string>());
  d.activation_precision = parse_precision(j.at("activation_precision").get<std::string>());
  return d;
}

json node_json(const NodeSpec& n) {
  json peaks = json::object();
  for (const auto& [p, rate] : n.gpu.peak_compute) peaks[std::string(to_string(p))] = rate;
  json precisions = json::array();
  for (Precision p : n.gpu.supported_precisions) precisions.push_back(to_string(p));
  return {{"gpu",
           {{"name", n.gpu.name},
            {"hbm_capacity", n.gpu.hbm_capacity},
            {"hbm_bandwidth", n.gpu.hbm_bandwidth},
            {"link_bandwidth_bidir", n.gpu.link_bandwidth_bidir},
            {"peak_compute", peaks},
            {"supported_precisions", precisions}}},
          {"n_gpus", n.n_gpus},
          {"topology", "all_to_all"},
          {"activation_reserve", n.activation_reserve}};
}

NodeSpec node_from(const json& j) {
  NodeSpec n;
  const json& g = j.at("gpu");
  n.gpu.name = g.at("name").get<std::string>();
  n.gpu.hbm_capacity = g.at("hbm_capacity").get<double>();
  n.gpu.hbm_bandwidth = g.at("hbm_bandwidth").get<double>();
  n.gpu.link_bandwidth_bidir = g.at("link_bandwidth_bidir").get<double>();
  for (const auto& [name, rate] : g.at("peak_compute").items()) {
    n.gpu.peak_compute[parse_precision(name)] = rate.get<double>();
  }
  for (const auto& p : g.at("supported_precisions")) {
    n.gpu.supported_precisions.insert(parse_precision(p.get<std::string>()));
  }
  n.n_gpus = j.at("n_gpus").get<std::uint64_t>();
  n.activation_reserve = j.at("activation_reserve").get<double>();
  return n;
}

json config_json(const SweepConfig& c) {
  json workloads = json::array();
  for (const WorkloadSpec& w : c.workloads) {
    workloads.push_back({{"name", w.name}, {"avg_isl", w.avg_isl}, {"avg_osl", w.avg_osl}});
  }
  json plans = json::array();
  for (const ParallelPlan& p : c.plans) plans.push_back(p.to_string());
  return {{"model", deployment_json(c.deployment)},
          {"node", node_json(c.node)},
          {"workloads", workloads},
          {"plans", plans},
          {"all_valid_plans", c.all_valid_plans},
          {"batch_selection", c.batch_selection == BatchSelection::explicit_list
                                  ? "explicit_list"
                                  : "powers_of_two_up_to_max"},
          {"batches", c.batches},
          {"max_batch", c.max_batch ? json(*c.max_batch) : json(nullptr)},
          {"baseline_plan",
           c.baseline_plan ? json(c.baseline_plan->to_string()) : json(nullptr)},
          {"baseline_batch", c.baseline_batch},
          {"calibration", calibration_json(c.calibration)},
          {"decode_context", to_string(c.decode_context)}};
}

SweepConfig config_from(const json& j) {
  SweepConfig c;
  c.deployment = deployment_from(j.at("model"));
  c.node = node_from(j.at("node"));
  for (const json& w : j.at("workloads")) {
    c.workloads.push_back({w.at("name").get<std::string>(),
                           w.at("avg_isl").get<std::uint64_t>(),
                           w.at("avg_osl").get<std::uint64_t>()});
  }
  for (const json& p : j.at("plans")) c.plans.push_back(ParallelPlan::parse(p.get<std::string>()));
  c.all_valid_plans = j.at("all_valid_plans").get<bool>();
  c.batch_selection = j.at("batch_selection").get<std::string>() == "explicit_list"
                          ? BatchSelection::explicit_list
                          : BatchSelection::powers_of_two_up_to_max;
  c.batches = j.at("batches").get<std::vector<std::uint64_t>>();
  if (!j.at("max_batch").is_null()) c.max_batch = j.at("max_batch").get<std::uint64_t>();
  if (!j.at("baseline_plan").is_null()) {
    c.baseline_plan = ParallelPlan::parse(j.at("baseline_plan").get<std::string>());
  }
  c.baseline_batch = j.at("baseline_batch").get<std::uint64_t>();
  c.calibration = calibration_from(j.at("calibration"));
  c.decode_context = parse_decode_context(j.at("decode_context").get<std::string>());
  return c;
}

}  // namespace

void validate(const SweepConfig& cfg) {
  validate(cfg.deployment.arch);
  validate(cfg.node);
  validate(cfg.calibration);
  if (cfg.workloads.empty()) throw ConfigError("workload", "at least one workload required");
  for (const WorkloadSpec& w : cfg.workloads) validate(w);
  if (!cfg.all_valid_plans && cfg.plans.empty()) {
    throw ConfigError("plans.plans", "at least one plan (or all-valid) required");
  }
  for (const ParallelPlan& p : cfg.plans) {
    auto violations = validate_plan(p, cfg.node, cfg.deployment.arch);
    if (!violations.empty()) {
      throw ConfigError("plans.plans", violations.front().message);
    }
  }
  if (cfg.batch_selection == BatchSelection::explicit_list) {
    if (cfg.batches.empty()) throw ConfigError("plans.batches", "empty batch list");
    if (std::ranges::find(cfg.batches, 0u) != cfg.batches.end()) {
      throw ConfigError("plans.batches", "batch sizes must be >= 1");
    }
  }
  if (cfg.max_batch && *cfg.max_batch == 0) {
    throw ConfigError("plans.max_batch", "must be >= 1");
  }
  if (cfg.baseline_batch == 0) throw ConfigError("plans.baseline_batch", "must be >= 1");
  if (cfg.baseline_plan) {
    auto violations = validate_plan(*cfg.baseline_plan, cfg.node, cfg.deployment.arch);
    if (!violations.empty()) {
      throw ConfigError("plans.baseline", violations.front().message);
    }
  }
  for (Precision p : {cfg.deployment.weight_precision, cfg.deployment.kv_precision,
                      cfg.deployment.activation_precision}) {
    if (!cfg.node.gpu.supports(p)) {
      throw ConfigError("model", fmt::format("{} does not support {}", cfg.node.gpu.name,
                                             to_string(p)));
    }
  }
}

std::vector<ParallelPlan> resolve_plans(const SweepConfig& cfg) {
  if (cfg.all_valid_plans) return enumerate_valid_plans(cfg.node, cfg.deployment.arch);
  std::vector<ParallelPlan> plans = cfg.plans;
  std::sort(plans.begin(), plans.end());
  plans.erase(std::unique(plans.begin(), plans.end()), plans.end());
  return plans;
}

ParallelPlan resolve_baseline(const SweepConfig& cfg) {
  return cfg.baseline_plan.value_or(ParallelPlan{cfg.node.n_gpus, 1, 1});
}

SweepStatus SweepResult::status() const {
  const auto feasible = std::ranges::count_if(rows, [](const SweepRow& r) { return r.feasible(); });
  if (feasible == static_cast<std::ptrdiff_t>(rows.size())) return SweepStatus::all_feasible;
  if (feasible == 0) return SweepStatus::none_feasible;
  return SweepStatus::some_infeasible;
}

SweepResult run_sweep(const SweepConfig& cfg, unsigned threads) {
  validate(cfg);
  const std::vector<ParallelPlan> plans = resolve_plans(cfg);
  const ParallelPlan baseline_plan = resolve_baseline(cfg);

  std::vector<Task> tasks;
  for (std::size_t wi = 0; wi < cfg.workloads.size(); ++wi) {
    const auto batches = batch_grid(cfg, plans, cfg.workloads[wi]);
    for (const ParallelPlan& plan : plans) {
      for (std::uint64_t b : batches) tasks.push_back({wi, plan, b});
    }
  }

  std::vector<InferenceEstimate> baselines(cfg.workloads.size());
  for (std::size_t wi = 0; wi < cfg.workloads.size(); ++wi) {
    const Outcome base = evaluate(
        make_scenario(cfg, cfg.workloads[wi], baseline_plan, cfg.baseline_batch));
    if (!base.estimate) {
      throw ConfigError("plans.baseline",
                        fmt::format("baseline {} at batch {} is infeasible ({})",
                                    baseline_plan.to_string(), cfg.baseline_batch,
                                    base.constraint));
    }
    baselines[wi] = *base.estimate;
  }

  std::vector<Outcome> outcomes(tasks.size());
  parallel_for(tasks.size(), threads, [&](std::size_t i) {
    const Task& t = tasks[i];
    outcomes[i] = evaluate(make_scenario(cfg, cfg.workloads[t.workload], t.plan, t.batch));
  });

  SweepResult result;
  result.config = cfg;
  result.rows.reserve(tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Task& t = tasks[i];
    const WorkloadSpec& w = cfg.workloads[t.workload];
    SweepRow row;
    row.workload = w.name;
    row.plan = t.plan;
    row.nano_batch = t.batch;
    row.global_batch = t.batch * t.plan.pp;
    if (const auto& e = outcomes[i].estimate) {
      const InferenceEstimate& base = baselines[t.workload];
      RowMetrics m;
      m.ttft = e->ttft;
      m.tpot = e->tpot;
      m.tps = e->tps;
      m.norm_ttft = e->ttft / base.ttft;
      m.norm_tpot = e->tpot / base.tpot;
      m.norm_tps = e->tps / base.tps;
      const double osl = static_cast<double>(w.avg_osl);
      const double request = e->ttft + osl * e->tpot;
      for (const auto& [kind, share] : e->prefill_breakdown.per_kernel) {
        const double t_kind = share.time + osl * e->decode_breakdown.time_of(kind);
        const double s = t_kind / request;
        if (m.top_kernel.empty() || s > m.top_kernel_share) {
          m.top_kernel = std::string(to_string(kind));
          m.top_kernel_share = s;
        }
      }
      row.metrics = m;
    } else {
      row.binding_constraint = outcomes[i].constraint;
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::csv;
  if (text == "json") return ReportFormat::json;
  throw ConfigError("format", "expected csv or json, got '" + std::string(text) + "'");
}

std::string to_csv(const SweepResult& result, std::string_view workload) {
  std::string out =
      "plan,tp,pp,dp,nano_batch,global_batch,feasible,ttft_s,tpot_s,tps,"
      "norm_ttft,norm_tpot,norm_tps,top_kernel,top_kernel_share\n";
  for (const SweepRow& r : result.rows) {
    if (!workload.empty() && r.workload != workload) continue;
    out += fmt::format("{},{},{},{},{},{},{},", r.plan.to_string(), r.plan.tp, r.plan.pp,
                       r.plan.dp, r.nano_batch, r.global_batch,
                       r.feasible() ? "true" : "false");
    if (const auto& m = r.metrics) {
      out += fmt::format("{},{},{},{},{},{},{},{}\n", format_number(m->ttft),
                         format_number(m->tpot), format_number(m->tps),
                         format_number(m->norm_ttft), format_number(m->norm_tpot),
                         format_number(m->norm_tps), m->top_kernel,
                         format_number(m->top_kernel_share));
    } else {
      out += fmt::format(",,,,,,infeasible:{},\n", r.binding_constraint);
    }
  }
  return out;
}

std::string to_json_text(const SweepResult& result) {
  json rows = json::array();
  for (const SweepRow& r : result.rows) {
    json row = {{"workload", r.workload},
                {"plan", r.plan.to_string()},
                {"tp", r.plan.tp},
                {"pp", r.plan.pp},
                {"dp", r.plan.dp},
                {"nano_batch", r.nano_batch},
                {"global_batch", r.global_batch},
                {"feasible", r.feasible()}};
    if (const auto& m = r.metrics) {
      row["ttft_s"] = m->ttft;
      row["tpot_s"] = m->tpot;
      row["tps"] = m->tps;
      row["norm_ttft"] = m->norm_ttft;
      row["norm_tpot"] = m->norm_tpot;
      row["norm_tps"] = m->norm_tps;
      row["top_kernel"] = m->top_kernel;
      row["top_kernel_share"] = m->top_kernel_share;
    } else {
      row["binding_constraint"] = r.binding_constraint;
    }
    rows.push_back(std::move(row));
  }
  const json doc = {{"config", config_json(result.config)}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

SweepResult sweep_result_from_json(std::string_view text) {
  const json doc = json::parse(text);
  SweepResult result;
  result.config = config_from(doc.at("config"));
  for (const json& j : doc.at("rows")) {
    SweepRow r;
    r.workload = j.at("workload").get<std::string>();
    r.plan = ParallelPlan::parse(j.at("plan").get<std::string>());
    r.nano_batch = j.at("nano_batch").get<std::uint64_t>();
    r.global_batch = j.at("global_batch").get<std::uint64_t>();
    if (j.at("feasible").get<bool>()) {
      RowMetrics m;
      m.ttft = j.at("ttft_s").get<double>();
      m.tpot = j.at("tpot_s").get<double>();
      m.tps = j.at("tps").get<double>();
      m.norm_ttft = j.at("norm_ttft").get<double>();
      m.norm_tpot = j.at("norm_tpot").get<double>();
      m.norm_tps = j.at("norm_tps").get<double>();
      m.top_kernel = j.at("top_kernel").get<std::string>();
      m.top_kernel_share = j.at("top_kernel_share").get<double>();
      r.metrics = m;
    } else {
      r.binding_constraint = j.at("binding_constraint").get<std::string>();
    }
    result.rows.push_back(std::move(r));
  }
  return result;
}

std::vector<std::filesystem::path> emit_report(const SweepResult& result,
                                               ReportFormat format,
                                               const std::filesystem::path& path) {
  if (result.rows.empty()) throw ConfigError("rows", "nothing to report");
  if (format == ReportFormat::json) {
    write_atomically(path, to_json_text(result));
    return {path};
  }
  std::vector<std::string> workloads;
  for (const SweepRow& r : result.rows) {
    if (std::ranges::find(workloads, r.workload) == workloads.end()) {
      workloads.push_back(r.workload);
    }
  }
  if (workloads.size() == 1) {
    write_atomically(path, to_csv(result));
    return {path};
  }
  std::vector<std::filesystem::path> written;
  for (const std::string& w : workloads) {
    std::filesystem::path p = path.parent_path() /
                              (path.stem().string() + "-" + w + path.extension().string());
    write_atomically(p, to_csv(result, w));
    written.push_back(p);
  }
  return written;
}

std::vector<FeasibilityRow> feasibility_matrix(const ModelDeployment& dep,
                                               const NodeSpec& node,
                                               const WorkloadSpec& workload) {
  std::vector<FeasibilityRow> rows;
  for (const ParallelPlan& plan : enumerate_valid_plans(node, dep.arch)) {
    FeasibilityRow row{plan, 0, true};
    try {
      row.max_nano_batch =
          max_nano_batch(plan, node, dep, workload, BatchPolicy::power_of_two);
    } catch (const InfeasibleError&) {
      row.weights_fit = false;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace llmsim
