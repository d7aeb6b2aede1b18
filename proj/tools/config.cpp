#include "config.hpp"

#include <cmath>
#include <fstream>

namespace torusforge::cli {

namespace {

json newton_defaults() {
  return {{"max_iters", 30},         {"residual_tol", 1e-11}, {"divergence_guard", 10.0},
          {"tail_tol", 1e-10},       {"eps0", 0.1},           {"pin_translation", false},
          {"active", json::array()}, {"s", 0.5},              {"sigma", 0.25}};
}

void merge(json& into, const json& from, const std::string& path) {
  if (!from.is_object()) throw UsageError("'" + path + "' must be an object");
  for (const auto& [key, value] : from.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!into.contains(key)) throw UsageError("unknown configuration key '" + here + "'");
    json& slot = into[key];
    if (slot.is_object() && !slot.empty()) {
      merge(slot, value, here);
    } else if (slot.is_null() || value.is_null() || slot.is_array() ||
               (slot.is_number() && value.is_number()) || slot.type() == value.type()) {
      slot = value;
    } else {
      throw UsageError("configuration key '" + here + "' has the wrong type");
    }
  }
}

}  // namespace

json default_config() {
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  return {
      {"command", nullptr},
      {"jobs", 1},
      {"seed", 1},
      {"trace", false},
      {"emit_torus", false},
      {"check_dio",
       {{"alpha", json::array({golden})}, {"gamma", 1e-2}, {"tau", 2.0}, {"A", nullptr}, {"kmax", 200},
        {"output", nullptr}}},
      {"solve",
       {{"variant", "moser"},
        {"flavor", nullptr},
        {"v", nullptr},
        {"u0", nullptr},
        {"newton", newton_defaults()},
        {"twist", {{"eliminate", false}, {"b_tol", 1e-10}, {"max_outer", 20}}},
        {"output", nullptr}}},
      {"spin_orbit",
       {{"alpha", golden},
        {"eta", 0.1},
        {"epsilon", 1e-3},
        {"order", 32},
        {"potential", nullptr},
        {"eta_grid", nullptr},
        {"epsilon_grid", nullptr},
        {"format", "csv"},
        {"newton", newton_defaults()},
        {"output", nullptr}}},
      {"verify",
       {{"input", nullptr},
        {"v", nullptr},
        {"samples", 200},
        {"r_max", 0.05},
        {"tolerance", 1e-8},
        {"drift_tol", 1e-12},
        {"ode",
         {{"enabled", true},
          {"T", 60000.0},
          {"dt", 1e-2},
          {"rotation_tol", 1e-6},
          {"floquet_rel_tol", 0.1},
          {"offset", 1e-3},
          {"max_rows", 4}}},
        {"output", nullptr}}},
  };
}

json resolve_config(const json& user) {
  json cfg = default_config();
  if (!user.is_null()) merge(cfg, user, "");
  return cfg;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("'" + path + "' is not valid JSON: " + e.what());
  }
}

json inline_or_file(const json& value, const std::string& what) {
  if (value.is_null()) throw UsageError("missing required input '" + what + "'");
  if (value.is_string()) return load_json_file(value.get<std::string>());
  return value;
}

}  // namespace torusforge::cli
