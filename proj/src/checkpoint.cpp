#include "pdfm/checkpoint.hpp"

#include <stdexcept>

#include "pdfm/report.hpp"

namespace pdfm {

namespace {
constexpr const char* kFormat = "pdfm-checkpoint-1";
}

nlohmann::ordered_json arch_to_json(const NetworkArch& arch) {
  nlohmann::ordered_json j;
  j["input_dim"] = arch.input_dim;
  j["hidden_dims"] = arch.hidden_dims;
  j["bias"] = arch.bias;
  return j;
}

NetworkArch arch_from_json(const nlohmann::json& j) {
  NetworkArch a;
  a.input_dim = j.at("input_dim").get<int>();
  a.hidden_dims = j.at("hidden_dims").get<std::vector<int>>();
  a.bias = j.at("bias").get<bool>();
  a.validate();
  return a;
}

nlohmann::ordered_json checkpoint_to_json(const MetaState& state,
                                          const nlohmann::ordered_json& meta) {
  nlohmann::ordered_json j;
  j["format"] = kFormat;
  j["arch"] = arch_to_json(state.theta.arch());
  j["theta"] = std::vector<double>(state.theta.values().begin(), state.theta.values().end());
  j["mu"] = std::vector<double>(state.mu.values().begin(), state.mu.values().end());
  j["adam"] = {{"m", state.adam.m}, {"v", state.adam.v}, {"t", state.adam.t}};
  j["iteration"] = state.iteration;
  j["meta"] = meta.is_null() ? nlohmann::ordered_json::object() : meta;
  return j;
}

MetaState checkpoint_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kFormat) {
    throw std::runtime_error("checkpoint: unrecognized format");
  }
  MetaState st;
  st.theta = ParamVector(arch_from_json(j.at("arch")), j.at("theta").get<std::vector<double>>());
  st.mu = DualVector(j.at("mu").get<std::vector<double>>());
  st.adam.m = j.at("adam").at("m").get<std::vector<double>>();
  st.adam.v = j.at("adam").at("v").get<std::vector<double>>();
  st.adam.t = j.at("adam").at("t").get<std::int64_t>();
  st.iteration = j.at("iteration").get<std::int64_t>();
  if (st.adam.m.size() != st.theta.size() || st.adam.v.size() != st.theta.size()) {
    throw std::runtime_error("checkpoint: moment vectors do not match theta");
  }
  return st;
}

void save_checkpoint(const std::filesystem::path& path, const MetaState& state,
                     const nlohmann::ordered_json& meta) {
  write_text_atomic(path, checkpoint_to_json(state, meta).dump(1) + "\n");
}

MetaState load_checkpoint(const std::filesystem::path& path, nlohmann::json* meta) {
  const nlohmann::json j = nlohmann::json::parse(read_text(path));
  if (meta != nullptr) *meta = j.value("meta", nlohmann::json::object());
  return checkpoint_from_json(j);
}

}  // namespace pdfm
