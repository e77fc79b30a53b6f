#include "llmsim/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "llmsim/errors.hpp"
#include "llmsim/sweep.hpp"

namespace llmsim {

namespace pt = boost::property_tree;

std::string format_number(double value) { return fmt::format("{}", value); }

double parse_number(std::string_view text, const std::string& field) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ConfigError(field, "expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

namespace detail {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    std::string item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

pt::ptree read_ini_text(std::string_view text) {
  // boost's INI reader only knows ';' comments.
  std::string cleaned;
  std::istringstream lines{std::string(text)};
  for (std::string line; std::getline(lines, line);) {
    const std::string t = trim(line);
    if (!t.empty() && t.front() == '#') continue;
    cleaned += line;
    cleaned += '\n';
  }
  std::istringstream in(cleaned);
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", fmt::format("malformed INI (line {}): {}", e.line(), e.message()));
  }
  return tree;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_keys(const pt::ptree& section, const std::string& name,
                const std::set<std::string>& allowed) {
  for (const auto& [key, value] : section) {
    if (!allowed.contains(key)) {
      if (name.empty()) throw ConfigError(key, "unknown section");
      throw ConfigError(name + "." + key, "unknown key");
    }
  }
}

std::uint64_t parse_count(std::string_view text, const std::string& field) {
  const double v = parse_number(text, field);
  if (v < 0 || v != std::floor(v) || v > 9.0e18) {
    throw ConfigError(field, "expected a non-negative integer, got '" +
                                 std::string(text) + "'");
  }
  return static_cast<std::uint64_t>(v);
}

Calibration apply_calibration(const pt::ptree& section, Calibration c,
                              const std::set<std::string>& extra_keys) {
  std::set<std::string> allowed = {"gemm_efficiency", "attention_efficiency",
                                   "memory_efficiency", "allreduce_step_latency",
                                   "p2p_overlap_fraction", "aggregate_link_override",
                                   "causal_factor"};
  allowed.insert(extra_keys.begin(), extra_keys.end());
  check_keys(section, "calibration", allowed);
  auto num = [&](const char* key, double& slot) {
    if (auto v = section.get_optional<std::string>(key)) {
      slot = parse_number(*v, std::string("calibration.") + key);
    }
  };
  num("gemm_efficiency", c.gemm_efficiency);
  num("attention_efficiency", c.attention_efficiency);
  num("memory_efficiency", c.memory_efficiency);
  num("allreduce_step_latency", c.allreduce_step_latency);
  num("p2p_overlap_fraction", c.p2p_overlap_fraction);
  num("causal_factor", c.causal_factor);
  if (auto v = section.get_optional<std::string>("aggregate_link_override")) {
    const std::string t = trim(*v);
    if (t.empty() || t == "none") {
      c.aggregate_link_override.reset();
    } else {
      c.aggregate_link_override = parse_number(t, "calibration.aggregate_link_override");
    }
  }
  validate(c);
  return c;
}

GpuSpec apply_gpu(const pt::ptree& section, std::set<std::string> extra_keys) {
  std::set<std::string> allowed = {"gpu", "name", "hbm_capacity", "hbm_bandwidth",
                                   "link_bandwidth_bidir", "precisions"};
  for (Precision p : kAllPrecisions) allowed.insert("peak_" + std::string(to_string(p)));
  allowed.merge(extra_keys);
  check_keys(section, "hardware", allowed);

  GpuSpec gpu;
  if (auto preset = section.get_optional<std::string>("gpu")) {
    gpu = make_gpu_preset(trim(*preset));
  }
  if (auto v = section.get_optional<std::string>("name")) gpu.name = trim(*v);
  auto num = [&](const char* key, double& slot) {
    if (auto v = section.get_optional<std::string>(key)) {
      slot = parse_number(*v, std::string("hardware.") + key);
    }
  };
  num("hbm_capacity", gpu.hbm_capacity);
  num("hbm_bandwidth", gpu.hbm_bandwidth);
  num("link_bandwidth_bidir", gpu.link_bandwidth_bidir);
  for (Precision p : kAllPrecisions) {
    const std::string key = "peak_" + std::string(to_string(p));
    if (auto v = section.get_optional<std::string>(key)) {
      gpu.peak_compute[p] = parse_number(*v, "hardware." + key);
    }
  }
  if (auto v = section.get_optional<std::string>("precisions")) {
    gpu.supported_precisions.clear();
    for (const std::string& item : split_list(*v)) {
      gpu.supported_precisions.insert(parse_precision(item));
    }
  }
  validate(gpu);
  return gpu;
}

ModelDeployment apply_model(const pt::ptree& section) {
  check_keys(section, "model",
             {"preset", "name", "n_layers", "d_hidden", "d_intermediate",
              "n_q_heads", "n_kv_heads", "d_head", "vocab_size",
              "declared_param_count", "weight_precision", "kv_precision",
              "activation_precision"});
  ModelDeployment dep;
  if (auto preset = section.get_optional<std::string>("preset")) {
    dep.arch = make_model_preset(trim(*preset));
  }
  if (auto v = section.get_optional<std::string>("name")) dep.arch.name = trim(*v);
  auto count = [&](const char* key, std::uint64_t& slot) {
    if (auto v = section.get_optional<std::string>(key)) {
      slot = parse_count(*v, std::string("model.") + key);
    }
  };
  count("n_layers", dep.arch.n_layers);
  count("d_hidden", dep.arch.d_hidden);
  count("d_intermediate", dep.arch.d_intermediate);
  count("n_q_heads", dep.arch.n_q_heads);
  count("n_kv_heads", dep.arch.n_kv_heads);
  count("d_head", dep.arch.d_head);
  count("vocab_size", dep.arch.vocab_size);
  if (auto v = section.get_optional<std::string>("declared_param_count")) {
    const std::string t = trim(*v);
    if (t.empty() || t == "none") {
      dep.arch.declared_param_count.reset();
    } else {
      dep.arch.declared_param_count = parse_number(t, "model.declared_param_count");
    }
  }
  auto prec = [&](const char* key, Precision& slot) {
    if (auto v = section.get_optional<std::string>(key)) {
      try {
        slot = parse_precision(trim(*v));
      } catch (const ConfigError& e) {
        throw ConfigError(std::string("model.") + key, e.what());
      }
    }
  };
  prec("weight_precision", dep.weight_precision);
  prec("kv_precision", dep.kv_precision);
  prec("activation_precision", dep.activation_precision);
  validate(dep.arch);
  return dep;
}

std::vector<WorkloadSpec> apply_workloads(const pt::ptree& section) {
  check_keys(section, "workload", {"presets", "preset", "name", "avg_isl", "avg_osl"});
  std::vector<WorkloadSpec> out;
  for (const char* key : {"preset", "presets"}) {
    if (auto v = section.get_optional<std::string>(key)) {
      for (const std::string& item : split_list(*v)) {
        out.push_back(make_workload_preset(item));
      }
    }
  }
  const bool has_custom = section.get_optional<std::string>("avg_isl") ||
                          section.get_optional<std::string>("avg_osl");
  if (has_custom) {
    WorkloadSpec w;
    w.name = detail::trim(section.get<std::string>("name", "custom"));
    w.avg_isl = parse_count(section.get<std::string>("avg_isl", "0"), "workload.avg_isl");
    w.avg_osl = parse_count(section.get<std::string>("avg_osl", "0"), "workload.avg_osl");
    validate(w);
    out.push_back(w);
  }
  return out;
}

}  // namespace detail

Calibration parse_calibration_ini(std::string_view text) {
  const pt::ptree tree = detail::read_ini_text(text);
  detail::check_keys(tree, "", {"calibration"});
  return detail::apply_calibration(tree.get_child("calibration", {}), Calibration{}, {});
}

std::string dump_calibration_ini(const Calibration& c) {
  std::string out = "[calibration]\n";
  out += "gemm_efficiency = " + format_number(c.gemm_efficiency) + "\n";
  out += "attention_efficiency = " + format_number(c.attention_efficiency) + "\n";
  out += "memory_efficiency = " + format_number(c.memory_efficiency) + "\n";
  out += "allreduce_step_latency = " + format_number(c.allreduce_step_latency) + "\n";
  out += "p2p_overlap_fraction = " + format_number(c.p2p_overlap_fraction) + "\n";
  out += "aggregate_link_override = " +
         (c.aggregate_link_override ? format_number(*c.aggregate_link_override)
                                    : std::string("none")) +
         "\n";
  out += "causal_factor = " + format_number(c.causal_factor) + "\n";
  return out;
}

Calibration load_calibration(const std::filesystem::path& path) {
  return parse_calibration_ini(detail::read_file(path));
}

std::optional<std::filesystem::path> shipped_calibration_path() {
#ifdef LLMSIM_SHIPPED_CALIBRATION
  std::filesystem::path p(LLMSIM_SHIPPED_CALIBRATION);
  std::error_code ec;
  if (std::filesystem::is_regular_file(p, ec)) return p;
#endif
  return std::nullopt;
}

Calibration resolve_calibration(const std::optional<std::filesystem::path>& explicit_path) {
  if (explicit_path) return load_calibration(*explicit_path);
  if (const char* env = std::getenv(kCalibrationEnvVar.data()); env && *env) {
    return load_calibration(env);
  }
  if (auto shipped = shipped_calibration_path()) return load_calibration(*shipped);
  return Calibration{};
}

GpuSpec parse_gpu_ini(std::string_view text) {
  const pt::ptree tree = detail::read_ini_text(text);
  return detail::apply_gpu(tree.get_child("hardware", {}), {});
}

std::string dump_gpu_ini(const GpuSpec& gpu) {
  std::string out = "[hardware]\n";
  out += "name = " + gpu.name + "\n";
  out += "hbm_capacity = " + format_number(gpu.hbm_capacity) + "\n";
  out += "hbm_bandwidth = " + format_number(gpu.hbm_bandwidth) + "\n";
  out += "link_bandwidth_bidir = " + format_number(gpu.link_bandwidth_bidir) + "\n";
  std::vector<std::string> names;
  for (Precision p : gpu.supported_precisions) names.emplace_back(to_string(p));
  out += "precisions = " + fmt::format("{}", fmt::join(names, ",")) + "\n";
  for (const auto& [p, rate] : gpu.peak_compute) {
    out += "peak_" + std::string(to_string(p)) + " = " + format_number(rate) + "\n";
  }
  return out;
}

ModelDeployment parse_model_ini(std::string_view text) {
  const pt::ptree tree = detail::read_ini_text(text);
  return detail::apply_model(tree.get_child("model", {}));
}

std::string dump_model_ini(const ModelDeployment& dep) {
  const ModelArch& a = dep.arch;
  std::string out = "[model]\n";
  out += "name = " + a.name + "\n";
  out += fmt::format("n_layers = {}\nd_hidden = {}\nd_intermediate = {}\n",
                     a.n_layers, a.d_hidden, a.d_intermediate);
  out += fmt::format("n_q_heads = {}\nn_kv_heads = {}\nd_head = {}\nvocab_size = {}\n",
                     a.n_q_heads, a.n_kv_heads, a.d_head, a.vocab_size);
  out += "declared_param_count = " +
         (a.declared_param_count ? format_number(*a.declared_param_count)
                                 : std::string("none")) +
         "\n";
  out += fmt::format("weight_precision = {}\nkv_precision = {}\nactivation_precision = {}\n",
                     to_string(dep.weight_precision), to_string(dep.kv_precision),
                     to_string(dep.activation_precision));
  return out;
}

WorkloadSpec parse_workload_ini(std::string_view text) {
  const pt::ptree tree = detail::read_ini_text(text);
  auto all = detail::apply_workloads(tree.get_child("workload", {}));
  if (all.size() != 1) throw ConfigError("workload", "expected exactly one workload");
  return all.front();
}

SweepConfig parse_sweep_config(std::string_view text,
                               const std::filesystem::path& base_dir) {
  const pt::ptree tree = detail::read_ini_text(text);
  detail::check_keys(tree, "",
                     {"model", "hardware", "workload", "plans", "calibration"});
  SweepConfig cfg;

  if (!tree.get_child_optional("model")) throw ConfigError("model", "section missing");
  cfg.deployment = detail::apply_model(tree.get_child("model"));

  if (!tree.get_child_optional("hardware")) {
    throw ConfigError("hardware", "section missing");
  }
  const pt::ptree& hw = tree.get_child("hardware");
  cfg.node.gpu = detail::apply_gpu(hw, {"node_size", "activation_reserve"});
  if (auto v = hw.get_optional<std::string>("node_size")) {
    cfg.node.n_gpus = detail::parse_count(*v, "hardware.node_size");
  }
  if (auto v = hw.get_optional<std::string>("activation_reserve")) {
    cfg.node.activation_reserve = parse_number(*v, "hardware.activation_reserve");
  }
  validate(cfg.node);

  cfg.workloads = detail::apply_workloads(tree.get_child("workload", {}));

  const pt::ptree& plans = tree.get_child("plans", {});
  detail::check_keys(plans, "plans",
                     {"plans", "batches", "max_batch", "baseline", "baseline_batch",
                      "decode_context"});
  const std::string plan_text = plans.get<std::string>("plans", "");
  if (detail::trim(plan_text) == "all-valid") {
    cfg.all_valid_plans = true;
  } else {
    for (const std::string& item : detail::split_list(plan_text)) {
      cfg.plans.push_back(ParallelPlan::parse(item));
    }
  }
  const std::string batches = detail::trim(plans.get<std::string>("batches", "pow2"));
  if (batches == "pow2") {
    cfg.batch_selection = BatchSelection::powers_of_two_up_to_max;
  } else {
    cfg.batch_selection = BatchSelection::explicit_list;
    for (const std::string& item : detail::split_list(batches)) {
      cfg.batches.push_back(detail::parse_count(item, "plans.batches"));
    }
  }
  if (auto v = plans.get_optional<std::string>("max_batch")) {
    cfg.max_batch = detail::parse_count(*v, "plans.max_batch");
  }
  if (auto v = plans.get_optional<std::string>("baseline")) {
    cfg.baseline_plan = ParallelPlan::parse(detail::trim(*v));
  }
  if (auto v = plans.get_optional<std::string>("baseline_batch")) {
    cfg.baseline_batch = detail::parse_count(*v, "plans.baseline_batch");
  }
  if (auto v = plans.get_optional<std::string>("decode_context")) {
    cfg.decode_context = parse_decode_context(detail::trim(*v));
  }

  if (auto cal = tree.get_child_optional("calibration")) {
    Calibration base;
    if (auto file = cal->get_optional<std::string>("file")) {
      std::filesystem::path p = detail::trim(*file);
      if (p.is_relative()) p = base_dir / p;
      base = load_calibration(p);
    } else {
      base = resolve_calibration();
    }
    cfg.calibration = detail::apply_calibration(*cal, base, {"file"});
  } else {
    cfg.calibration = resolve_calibration();
  }

  validate(cfg);
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  return parse_sweep_config(detail::read_file(path), path.parent_path());
}

}  // namespace llmsim
