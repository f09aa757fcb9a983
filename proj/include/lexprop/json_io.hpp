#pragma once

// JSON/CSV views of the library's records. Key order is fixed so that the
// serialized text is reproducible.

#include <json.hpp>

#include <span>
#include <string>

#include "lexprop/evaluation.hpp"
#include "lexprop/hyperopt.hpp"
#include "lexprop/propagation_graph.hpp"
#include "lexprop/propagation_solver.hpp"

namespace lexprop {

using Json = nlohmann::ordered_json;

Json to_json(const PropagationParams& p);
// Missing keys keep their defaults; unknown keys are rejected.
PropagationParams params_from_json(const Json& j);

Json to_json(const SolveReport& r);
Json to_json(const OptimizerConfig& c);
OptimizerConfig optimizer_config_from_json(const Json& j);
Json to_json(const EvalReport& r);
Json to_json(const CorpusStats& s, const EmotionSet& emotions);

// epoch,batch,entropy,mean_entropy,grad_norm,alpha,bias,epsilon
std::string trace_to_csv(const OptTrace& trace);

Json read_json_file(const std::string& path);

}  // namespace lexprop
