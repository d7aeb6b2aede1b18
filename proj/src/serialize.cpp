#include "torusforge/serialize.hpp"

#include <algorithm>
#include <stdexcept>

namespace torusforge {

namespace {

template <class T, class F>
json array_of(const std::vector<T>& xs, F&& f) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(f(x));
  return out;
}

template <class T, class F>
std::vector<T> vector_from(const json& j, F&& f) {
  std::vector<T> out;
  for (const auto& e : j) out.push_back(f(e));
  return out;
}

}  // namespace

json to_json(const FourierSeries& f) {
  json coeffs = json::array();
  const auto c = f.coeffs();
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == cplx{}) continue;
    json row = json::array();
    for (int k : f.modes().mode(i)) row.push_back(k);
    row.push_back(c[i].real());
    row.push_back(c[i].imag());
    coeffs.push_back(std::move(row));
  }
  return {{"dim", f.dim()}, {"order", f.order()}, {"coeffs", std::move(coeffs)}};
}

FourierSeries series_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  const int order = j.at("order").get<int>();
  FourierSeries f(dim, order);
  for (const auto& row : j.at("coeffs")) {
    if (row.size() != static_cast<std::size_t>(dim) + 2)
      throw std::invalid_argument("series coefficient row must hold dim + 2 numbers");
    std::vector<int> k(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) k[i] = row[i].get<int>();
    const cplx value{row[dim].get<double>(), row[dim + 1].get<double>()};
    if (std::all_of(k.begin(), k.end(), [](int x) { return x == 0; }) && value.imag() != 0.0)
      throw std::invalid_argument("the average of a real series must be real");
    f.set_coeff(k, value);
  }
  return f;
}

json to_json(const RJet& jet) {
  json coeffs = json::array();
  for (std::size_t i = 0; i < jet.size(); ++i) coeffs.push_back(to_json(jet[i]));
  return {{"dim", jet.dim()}, {"order", jet.order()}, {"m", jet.m()}, {"coeffs", std::move(coeffs)}};
}

RJet jet_from_json(const json& j) {
  const int dim = j.at("dim").get<int>(), order = j.at("order").get<int>(), m = j.at("m").get<int>();
  RJet jet(dim, order, m);
  const auto& coeffs = j.at("coeffs");
  if (coeffs.size() != jet.size()) throw std::invalid_argument("jet needs one series per monomial");
  for (std::size_t i = 0; i < jet.size(); ++i) {
    FourierSeries f = series_from_json(coeffs[i]);
    if (f.dim() != dim) throw std::invalid_argument("jet coefficient dimension mismatch");
    jet[i] = f.order() == order ? std::move(f) : f.with_order(order);
  }
  return jet;
}

json to_json(const Eigen::MatrixXd& A) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < A.cols(); ++k) row.push_back(A(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Eigen::Index k = 0; k < cols; ++k) A(i, k) = j[i][k].get<double>();
  }
  return A;
}

json to_json(const VectorFieldJet& v) {
  json out{{"n", v.n},
           {"m", v.m},
           {"tangent", array_of(v.tangent, [](const RJet& c) { return to_json(c); })},
           {"normal", array_of(v.normal, [](const RJet& c) { return to_json(c); })}};
  if (!v.alpha.empty()) out["alpha"] = v.alpha;
  if (v.A.size() > 0) out["A"] = to_json(v.A);
  return out;
}

VectorFieldJet field_from_json(const json& j) {
  VectorFieldJet v;
  v.n = j.at("n").get<int>();
  v.m = j.at("m").get<int>();
  v.tangent = vector_from<RJet>(j.at("tangent"), jet_from_json);
  v.normal = vector_from<RJet>(j.at("normal"), jet_from_json);
  if (static_cast<int>(v.tangent.size()) != v.n || static_cast<int>(v.normal.size()) != v.m)
    throw std::invalid_argument("field needs n tangent and m normal components");
  if (j.contains("alpha")) v.alpha = j["alpha"].get<std::vector<double>>();
  if (j.contains("A")) v.A = matrix_from_json(j["A"]);
  return v;
}

json to_json(const Conjugacy& g) {
  json R1 = json::array();
  for (const auto& e : g.R1.entries()) R1.push_back(to_json(e));
  json out{{"flavor", to_string(g.flavor)},
           {"n", g.n},
           {"m", g.m},
           {"phi_minus_id", array_of(g.phi_minus_id, [](const FourierSeries& f) { return to_json(f); })},
           {"R0", array_of(g.R0, [](const FourierSeries& f) { return to_json(f); })},
           {"R1", std::move(R1)}};
  if (g.S.valid()) out["S"] = to_json(g.S);
  if (!g.xi.empty()) out["xi"] = g.xi;
  return out;
}

Conjugacy conjugacy_from_json(const json& j) {
  Conjugacy g;
  g.flavor = flavor_from_string(j.at("flavor").get<std::string>());
  g.n = j.at("n").get<int>();
  g.m = j.at("m").get<int>();
  g.phi_minus_id = vector_from<FourierSeries>(j.at("phi_minus_id"), series_from_json);
  g.R0 = vector_from<FourierSeries>(j.at("R0"), series_from_json);
  const auto& R1 = j.at("R1");
  if (static_cast<int>(R1.size()) != g.m * g.m || g.phi_minus_id.size() != static_cast<std::size_t>(g.n) ||
      g.R0.size() != static_cast<std::size_t>(g.m))
    throw std::invalid_argument("conjugacy component counts do not match (n, m)");
  const int order = g.phi_minus_id.empty() ? series_from_json(R1[0]).order() : g.phi_minus_id[0].order();
  g.R1 = SeriesMatrix(g.m, g.m, g.n, order);
  for (std::size_t i = 0; i < R1.size(); ++i) g.R1.entries()[i] = series_from_json(R1[i]);
  if (j.contains("S")) g.S = series_from_json(j["S"]);
  if (j.contains("xi")) g.xi = j["xi"].get<std::vector<double>>();
  return g;
}

json to_json(const CounterTerm& lambda) {
  return {{"beta", lambda.beta}, {"b", lambda.b}, {"B", to_json(lambda.B)}};
}

CounterTerm counter_term_from_json(const json& j) {
  CounterTerm c;
  c.beta = j.at("beta").get<std::vector<double>>();
  c.b = j.at("b").get<std::vector<double>>();
  c.B = matrix_from_json(j.at("B"));
  if (c.B.size() == 0) c.B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c.b.size()), static_cast<Eigen::Index>(c.b.size()));
  return c;
}

json to_json(const NewtonState& x) {
  return {{"g", to_json(x.g)}, {"u", to_json(x.u)}, {"lambda", to_json(x.lambda)}};
}

NewtonState state_from_json(const json& j) {
  return {conjugacy_from_json(j.at("g")), field_from_json(j.at("u")), counter_term_from_json(j.at("lambda"))};
}

json to_json(const NewtonResult& r) {
  json out{{"state", to_json(r.x)},
           {"iterations", r.iterations},
           {"residuals", r.residuals},
           {"tail_norms", r.tail_norms}};
  if (r.certificate)
    out["certificate"] = {{"exponent", r.certificate->exponent},
                          {"constant", r.certificate->constant},
                          {"pairs", r.certificate->pairs}};
  else
    out["certificate"] = nullptr;
  if (!r.trace.empty()) {
    json trace = json::array();
    for (const auto& rec : r.trace)
      trace.push_back({{"iteration", rec.iteration},
                       {"residual", rec.residual},
                       {"tail", rec.tail},
                       {"mixed_defect", rec.mixed_defect},
                       {"bound_ratio", rec.bound_ratio},
                       {"lambda", to_json(rec.lambda)}});
    out["trace"] = std::move(trace);
  }
  return out;
}

NewtonResult result_from_json(const json& j) {
  NewtonResult r;
  r.x = state_from_json(j.at("state"));
  r.iterations = j.at("iterations").get<int>();
  r.residuals = j.at("residuals").get<std::vector<double>>();
  r.tail_norms = j.value("tail_norms", std::vector<double>{});
  if (j.contains("certificate") && !j["certificate"].is_null()) {
    const auto& c = j["certificate"];
    r.certificate = Certificate{c.at("exponent").get<double>(), c.at("constant").get<double>(),
                                c.at("pairs").get<int>()};
  }
  if (j.contains("trace"))
    for (const auto& t : j["trace"])
      r.trace.push_back({t.at("iteration").get<int>(), t.at("residual").get<double>(), t.at("tail").get<double>(),
                         t.at("mixed_defect").get<double>(), t.at("bound_ratio").get<double>(),
                         counter_term_from_json(t.at("lambda"))});
  return r;
}

json to_json(const DiophantineReport& r) {
  auto cond = [](const ConditionReport& c) {
    return json{{"checked", c.checked},       {"ok", c.ok}, {"worst_divisor", c.worst_divisor},
                {"worst_margin", c.worst_margin}, {"k", c.k}, {"l", c.l},
                {"checked_up_to", c.checked_up_to}};
  };
  return {{"ok", r.ok()}, {"dio1", cond(r.dio1)}, {"dio2", cond(r.dio2)}, {"dio3", cond(r.dio3)}};
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::moser: return "moser";
    case Variant::herman_dissipative: return "herman_dissipative";
    case Variant::russmann: return "russmann";
  }
  return "moser";
}

Variant variant_from_string(const std::string& s) {
  if (s == "moser") return Variant::moser;
  if (s == "herman_dissipative" || s == "herman") return Variant::herman_dissipative;
  if (s == "russmann") return Variant::russmann;
  throw std::invalid_argument("unknown variant '" + s + "'");
}

std::string to_string(Flavor f) {
  switch (f) {
    case Flavor::general: return "general";
    case Flavor::exact_symplectic: return "exact_symplectic";
    case Flavor::symplectic: return "symplectic";
  }
  return "general";
}

Flavor flavor_from_string(const std::string& s) {
  if (s == "general") return Flavor::general;
  if (s == "exact_symplectic") return Flavor::exact_symplectic;
  if (s == "symplectic") return Flavor::symplectic;
  throw std::invalid_argument("unknown flavor '" + s + "'");
}

}  // namespace torusforge
