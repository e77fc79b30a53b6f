#pragma once

#include <string>

#include "llmsim/engine.hpp"
#include "llmsim/model.hpp"
#include "llmsim/workload.hpp"

namespace llmsim::test {

inline ModelDeployment deployment(const std::string& model, Precision w = Precision::fp8,
                                  Precision kv = Precision::fp8) {
  ModelDeployment d;
  d.arch = make_model_preset(model);
  d.weight_precision = w;
  d.kv_precision = kv;
  return d;
}

inline NodeSpec node(const std::string& gpu, std::uint64_t n = 8) {
  NodeSpec nd;
  nd.gpu = make_gpu_preset(gpu);
  nd.n_gpus = n;
  return nd;
}

inline Scenario scenario(const std::string& model, const std::string& gpu,
                         const std::string& workload, const std::string& plan,
                         std::uint64_t batch, Precision w = Precision::fp8) {
  return Scenario{.plan = ParallelPlan::parse(plan),
                  .deployment = deployment(model, w),
                  .workload = make_workload_preset(workload),
                  .nano_batch = batch,
                  .node = node(gpu),
                  .calibration = Calibration{},
                  .decode_context = DecodeContext::mid};
}

}  // namespace llmsim::test
