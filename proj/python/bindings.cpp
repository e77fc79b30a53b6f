#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "llmsim/config.hpp"
#include "llmsim/errors.hpp"
#include "llmsim/sweep.hpp"

namespace py = pybind11;
using namespace llmsim;

namespace {

py::dict breakdown_dict(const PhaseBreakdown& b) {
  py::dict kernels;
  for (const auto& [kind, k] : b.per_kernel) {
    py::dict entry;
    entry["time"] = k.time;
    entry["count"] = k.count;
    entry["share"] = k.share;
    kernels[py::str(std::string(to_string(kind)))] = entry;
  }
  py::dict out;
  out["total"] = b.total;
  out["kernels"] = kernels;
  out["stage_times"] = b.stage_times;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Analytical LLM inference cost model";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<UnsupportedPrecisionError>(m, "UnsupportedPrecisionError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<InvalidPlanError>(m, "InvalidPlanError", base.ptr());

  py::enum_<Precision>(m, "Precision")
      .value("fp32", Precision::fp32)
      .value("fp16", Precision::fp16)
      .value("fp8", Precision::fp8)
      .value("fp4", Precision::fp4);
  m.def("parse_precision", &parse_precision);
  m.def("bytes_per_element", &bytes_per_element);

  py::enum_<DecodeContext>(m, "DecodeContext")
      .value("start", DecodeContext::start)
      .value("mid", DecodeContext::mid)
      .value("end", DecodeContext::end);

  py::class_<ModelArch>(m, "ModelArch")
      .def(py::init<>())
      .def_readwrite("name", &ModelArch::name)
      .def_readwrite("n_layers", &ModelArch::n_layers)
      .def_readwrite("d_hidden", &ModelArch::d_hidden)
      .def_readwrite("d_intermediate", &ModelArch::d_intermediate)
      .def_readwrite("n_q_heads", &ModelArch::n_q_heads)
      .def_readwrite("n_kv_heads", &ModelArch::n_kv_heads)
      .def_readwrite("d_head", &ModelArch::d_head)
      .def_readwrite("vocab_size", &ModelArch::vocab_size)
      .def_readwrite("declared_param_count", &ModelArch::declared_param_count)
      .def("__eq__", [](const ModelArch& a, const ModelArch& b) { return a == b; });

  py::class_<ModelDeployment>(m, "ModelDeployment")
      .def(py::init<>())
      .def(py::init([](const std::string& preset, Precision w, Precision kv, Precision act) {
             return ModelDeployment{make_model_preset(preset), w, kv, act};
           }),
           py::arg("preset"), py::arg("weight_precision") = Precision::fp8,
           py::arg("kv_precision") = Precision::fp8,
           py::arg("activation_precision") = Precision::fp16)
      .def_readwrite("arch", &ModelDeployment::arch)
      .def_readwrite("weight_precision", &ModelDeployment::weight_precision)
      .def_readwrite("kv_precision", &ModelDeployment::kv_precision)
      .def_readwrite("activation_precision", &ModelDeployment::activation_precision);

  m.def("make_model_preset", &make_model_preset);
  m.def("model_preset_names", &model_preset_names);
  m.def("param_count", &param_count);
  m.def("weight_bytes", &weight_bytes);
  m.def("kv_bytes_per_token", &kv_bytes_per_token);

  py::class_<GpuSpec>(m, "GpuSpec")
      .def(py::init<>())
      .def_readwrite("name", &GpuSpec::name)
      .def_readwrite("hbm_capacity", &GpuSpec::hbm_capacity)
      .def_readwrite("hbm_bandwidth", &GpuSpec::hbm_bandwidth)
      .def_readwrite("peak_compute", &GpuSpec::peak_compute)
      .def_readwrite("link_bandwidth_bidir", &GpuSpec::link_bandwidth_bidir)
      .def_readwrite("supported_precisions", &GpuSpec::supported_precisions)
      .def("__eq__", [](const GpuSpec& a, const GpuSpec& b) { return a == b; });
  m.def("make_gpu_preset", &make_gpu_preset);
  m.def("gpu_preset_names", &gpu_preset_names);

  py::class_<NodeSpec>(m, "NodeSpec")
      .def(py::init([](const GpuSpec& gpu, std::uint64_t n, double reserve) {
             return NodeSpec{.gpu = gpu, .n_gpus = n, .activation_reserve = reserve};
           }),
           py::arg("gpu"), py::arg("n_gpus") = 8, py::arg("activation_reserve") = 0.0)
      .def_readwrite("gpu", &NodeSpec::gpu)
      .def_readwrite("n_gpus", &NodeSpec::n_gpus)
      .def_readwrite("activation_reserve", &NodeSpec::activation_reserve);

  py::class_<Calibration>(m, "Calibration")
      .def(py::init<>())
      .def_readwrite("gemm_efficiency", &Calibration::gemm_efficiency)
      .def_readwrite("attention_efficiency", &Calibration::attention_efficiency)
      .def_readwrite("memory_efficiency", &Calibration::memory_efficiency)
      .def_readwrite("allreduce_step_latency", &Calibration::allreduce_step_latency)
      .def_readwrite("p2p_overlap_fraction", &Calibration::p2p_overlap_fraction)
      .def_readwrite("aggregate_link_override", &Calibration::aggregate_link_override)
      .def_readwrite("causal_factor", &Calibration::causal_factor)
      .def("__eq__", [](const Calibration& a, const Calibration& b) { return a == b; });
  m.def("load_calibration", &load_calibration);
  m.def("resolve_calibration", &resolve_calibration, py::arg("path") = py::none());

  py::class_<WorkloadSpec>(m, "WorkloadSpec")
      .def(py::init<std::string, std::uint64_t, std::uint64_t>(), py::arg("name"),
           py::arg("avg_isl"), py::arg("avg_osl"))
      .def_readwrite("name", &WorkloadSpec::name)
      .def_readwrite("avg_isl", &WorkloadSpec::avg_isl)
      .def_readwrite("avg_osl", &WorkloadSpec::avg_osl)
      .def_property_readonly("total", &WorkloadSpec::total);
  m.def("make_workload_preset", &make_workload_preset);
  m.def("workload_preset_names", &workload_preset_names);

  py::class_<ParallelPlan>(m, "ParallelPlan")
      .def(py::init<std::uint64_t, std::uint64_t, std::uint64_t>(), py::arg("dp"),
           py::arg("tp"), py::arg("pp"))
      .def_static("parse", &ParallelPlan::parse)
      .def_readwrite("dp", &ParallelPlan::dp)
      .def_readwrite("tp", &ParallelPlan::tp)
      .def_readwrite("pp", &ParallelPlan::pp)
      .def("__str__", &ParallelPlan::to_string)
      .def("__repr__", [](const ParallelPlan& p) { return "ParallelPlan('" + p.to_string() + "')"; })
      .def("__eq__", [](const ParallelPlan& a, const ParallelPlan& b) { return a == b; });
  m.def("enumerate_valid_plans", &enumerate_valid_plans);

  py::class_<MemoryReport>(m, "MemoryReport")
      .def_readonly("per_gpu_capacity", &MemoryReport::per_gpu_capacity)
      .def_readonly("weights_per_gpu", &MemoryReport::weights_per_gpu)
      .def_readonly("kv_budget_per_gpu", &MemoryReport::kv_budget_per_gpu)
      .def_readonly("kv_bytes_per_request_per_gpu", &MemoryReport::kv_bytes_per_request_per_gpu)
      .def_readonly("system_kv_budget", &MemoryReport::system_kv_budget);
  m.def("kv_capacity", &kv_capacity, py::arg("plan"), py::arg("node"), py::arg("deployment"),
        py::arg("workload") = py::none());
  m.def(
      "max_nano_batch",
      [](const ParallelPlan& plan, const NodeSpec& node, const ModelDeployment& dep,
         const WorkloadSpec& w, bool power_of_two) {
        return max_nano_batch(plan, node, dep, w,
                              power_of_two ? BatchPolicy::power_of_two : BatchPolicy::exact);
      },
      py::arg("plan"), py::arg("node"), py::arg("deployment"), py::arg("workload"),
      py::arg("power_of_two") = true);

  py::class_<InferenceEstimate>(m, "InferenceEstimate")
      .def_readonly("ttft", &InferenceEstimate::ttft)
      .def_readonly("tpot", &InferenceEstimate::tpot)
      .def_readonly("tps", &InferenceEstimate::tps)
      .def_readonly("global_batch", &InferenceEstimate::global_batch)
      .def_readonly("nano_batch", &InferenceEstimate::nano_batch)
      .def_readonly("n_dp", &InferenceEstimate::n_dp)
      .def_readonly("memory", &InferenceEstimate::memory)
      .def_property_readonly("prefill", [](const InferenceEstimate& e) {
        return breakdown_dict(e.prefill_breakdown);
      })
      .def_property_readonly("decode", [](const InferenceEstimate& e) {
        return breakdown_dict(e.decode_breakdown);
      });

  m.def(
      "estimate",
      [](const ParallelPlan& plan, const ModelDeployment& dep, const WorkloadSpec& w,
         std::uint64_t nano_batch, const NodeSpec& node, std::optional<Calibration> calib,
         DecodeContext ctx) {
        return estimate(Scenario{.plan = plan,
                                 .deployment = dep,
                                 .workload = w,
                                 .nano_batch = nano_batch,
                                 .node = node,
                                 .calibration = calib.value_or(resolve_calibration()),
                                 .decode_context = ctx});
      },
      py::arg("plan"), py::arg("deployment"), py::arg("workload"), py::arg("nano_batch"),
      py::arg("node"), py::arg("calibration") = py::none(),
      py::arg("decode_context") = DecodeContext::mid);
  m.def("throughput", &throughput, py::arg("ttft"), py::arg("tpot"), py::arg("nano_batch"),
        py::arg("plan"), py::arg("workload"));

  py::class_<SweepConfig>(m, "SweepConfig")
      .def_readwrite("workloads", &SweepConfig::workloads)
      .def_readwrite("plans", &SweepConfig::plans)
      .def_readwrite("calibration", &SweepConfig::calibration);
  m.def("load_sweep_config", &load_sweep_config);
  m.def("parse_sweep_config", &parse_sweep_config, py::arg("text"),
        py::arg("base_dir") = std::filesystem::path{});

  py::class_<SweepResult>(m, "SweepResult")
      .def_readonly("config", &SweepResult::config)
      .def_property_readonly("status",
                             [](const SweepResult& r) {
                               switch (r.status()) {
                                 case SweepStatus::all_feasible: return "all_feasible";
                                 case SweepStatus::some_infeasible: return "some_infeasible";
                                 case SweepStatus::none_feasible: return "none_feasible";
                               }
                               return "unknown";
                             })
      .def("__len__", [](const SweepResult& r) { return r.rows.size(); })
      .def("to_csv", [](const SweepResult& r, const std::string& w) { return to_csv(r, w); },
           py::arg("workload") = "")
      .def("to_json", &to_json_text)
      .def("emit", [](const SweepResult& r, const std::string& format,
                      const std::filesystem::path& path) {
        return emit_report(r, parse_report_format(format), path);
      });
  m.def("sweep_result_from_json", &sweep_result_from_json);
  m.def("run_sweep", &run_sweep, py::arg("config"), py::arg("threads") = 0,
        py::call_guard<py::gil_scoped_release>());

  m.def("feasibility_matrix", [](const ModelDeployment& dep, const NodeSpec& node,
                                 const WorkloadSpec& w) {
    py::list out;
    for (const FeasibilityRow& r : feasibility_matrix(dep, node, w)) {
      out.append(py::make_tuple(r.plan.to_string(), r.weights_fit, r.max_nano_batch));
    }
    return out;
  });
}
