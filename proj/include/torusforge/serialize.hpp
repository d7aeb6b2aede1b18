#pragma once

#include <string>

#include "json.hpp"
#include "torusforge/cohomology.hpp"
#include "torusforge/fourier.hpp"
#include "torusforge/geometry.hpp"
#include "torusforge/jets.hpp"
#include "torusforge/newton.hpp"

namespace torusforge {

using json = nlohmann::json;

// Series: {"dim", "order", "coeffs": [[k_1, ..., k_n, re, im], ...]}, nonzero canonical modes only.
json to_json(const FourierSeries& f);
FourierSeries series_from_json(const json& j);

json to_json(const RJet& jet);
RJet jet_from_json(const json& j);

json to_json(const VectorFieldJet& v);
VectorFieldJet field_from_json(const json& j);

json to_json(const Eigen::MatrixXd& A);
Eigen::MatrixXd matrix_from_json(const json& j);

json to_json(const Conjugacy& g);
Conjugacy conjugacy_from_json(const json& j);

json to_json(const CounterTerm& lambda);
CounterTerm counter_term_from_json(const json& j);

json to_json(const NewtonState& x);
NewtonState state_from_json(const json& j);

json to_json(const NewtonResult& r);
NewtonResult result_from_json(const json& j);

json to_json(const DiophantineReport& r);

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(Flavor f);
Flavor flavor_from_string(const std::string& s);

}  // namespace torusforge
