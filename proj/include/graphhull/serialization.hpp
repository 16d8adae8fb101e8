#ifndef GRAPHHULL_SERIALIZATION_HPP
#define GRAPHHULL_SERIALIZATION_HPP

#include "graphhull/diagnostics.hpp"
#include "graphhull/evaluation.hpp"
#include "graphhull/graph.hpp"
#include "graphhull/inference.hpp"
#include "graphhull/objective.hpp"
#include "graphhull/parameterization.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace graphhull {

using json = nlohmann::json;

inline constexpr const char* kModelSchema = "graphhull.model/1";
inline constexpr const char* kManifestSchema = "graphhull.manifest/1";

// Non-finite doubles become null (JSON has no inf/nan).
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(number(m(i, j)));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline json to_json(const Vector& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

namespace detail {
[[noreturn]] inline void schema_error(const std::string& what) { throw Error("model schema: " + what); }

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double as_double(const json& j, const char* what) {
  if (!j.is_number()) schema_error(std::string(what) + " is not a number");
  return j.get<double>();
}
}  // namespace detail

inline Matrix matrix_from_json(const json& j, const char* what) {
  using detail::schema_error;
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
    schema_error(std::string(what) + " is not a {rows, cols, data} matrix");
  const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
    schema_error(std::string(what) + " has inconsistent shape");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = detail::as_double(data[static_cast<std::size_t>(i * cols + c)], what);
  return m;
}

inline Vector vector_from_json(const json& j, const char* what) {
  if (!j.is_array()) detail::schema_error(std::string(what) + " is not an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = detail::as_double(j[i], what);
  return v;
}

inline json to_json(const Hyperparams& hp) {
  return {{"K", hp.K},
          {"D", hp.D},
          {"epsilon", hp.epsilon},
          {"sigma_min", hp.sigma_min},
          {"sigma_max", hp.sigma_max},
          {"alpha_omega", hp.alpha_omega},
          {"alpha_q", hp.alpha_q},
          {"beta_a", hp.beta_a},
          {"beta_b", hp.beta_b},
          {"tau_g", hp.tau_g},
          {"tau_s", hp.tau_s},
          {"kappa", hp.kappa},
          {"use_dpp", hp.use_dpp},
          {"gs_temp_start", hp.gs_temp_start},
          {"gs_temp_end", hp.gs_temp_end},
          {"alpha_pi", hp.alpha_pi}};
}

inline Hyperparams hyperparams_from_json(const json& j) {
  using detail::as_double;
  using detail::field;
  Hyperparams hp;
  try {
    hp.K = field(j, "K").get<int>();
    hp.D = field(j, "D").get<int>();
    hp.epsilon = as_double(field(j, "epsilon"), "epsilon");
    hp.sigma_min = as_double(field(j, "sigma_min"), "sigma_min");
    hp.sigma_max = as_double(field(j, "sigma_max"), "sigma_max");
    hp.alpha_omega = as_double(field(j, "alpha_omega"), "alpha_omega");
    hp.alpha_q = as_double(field(j, "alpha_q"), "alpha_q");
    hp.beta_a = as_double(field(j, "beta_a"), "beta_a");
    hp.beta_b = as_double(field(j, "beta_b"), "beta_b");
    hp.tau_g = as_double(field(j, "tau_g"), "tau_g");
    hp.tau_s = as_double(field(j, "tau_s"), "tau_s");
    hp.kappa = as_double(field(j, "kappa"), "kappa");
    hp.use_dpp = field(j, "use_dpp").get<bool>();
    hp.gs_temp_start = as_double(field(j, "gs_temp_start"), "gs_temp_start");
    hp.gs_temp_end = as_double(field(j, "gs_temp_end"), "gs_temp_end");
    hp.alpha_pi = as_double(field(j, "alpha_pi"), "alpha_pi");
  } catch (const json::exception& e) {
    detail::schema_error(std::string("hyperparams: ") + e.what());
  }
  try {
    hp.validate();
  } catch (const Error& e) {
    detail::schema_error(e.what());
  }
  return hp;
}

/// A self-contained model document: everything needed to rebuild the state.
struct ModelDocument {
  Hyperparams hp;
  std::uint64_t seed = 0;
  ModelState state;
  Matrix m_logits;
  std::vector<std::string> node_labels;
};

inline json model_to_json(const ModelDocument& doc) {
  json W = json::array();
  for (const auto& w : doc.state.W_tilde) W.push_back(to_json(w));
  json out = {{"schema", kModelSchema},
              {"version", kVersion},
              {"hyperparams", to_json(doc.hp)},
              {"seed", doc.seed},
              {"n_nodes", doc.state.n_nodes()},
              {"A", to_json(doc.state.A)},
              {"W_tilde", std::move(W)},
              {"Omega", to_json(doc.state.Omega)},
              {"m_logits", to_json(doc.m_logits)},
              {"g", to_json(doc.state.g)},
              {"s", doc.state.s}};
  if (!doc.node_labels.empty()) out["node_labels"] = doc.node_labels;
  return out;
}

/// Parses and validates a model document, rebuilding B, assignments and Z.
inline ModelDocument model_from_json(const json& j) {
  using detail::field;
  using detail::schema_error;
  if (!j.is_object()) schema_error("document is not a JSON object");
  if (!j.contains("schema") || j.at("schema") != kModelSchema) schema_error("missing or unknown schema tag");
  ModelDocument doc;
  doc.hp = hyperparams_from_json(field(j, "hyperparams"));
  const int K = doc.hp.K, D = doc.hp.D;
  try {
    doc.seed = field(j, "seed").get<std::uint64_t>();
  } catch (const json::exception&) {
    schema_error("seed is not an unsigned integer");
  }
  ModelState& st = doc.state;
  st.A = matrix_from_json(field(j, "A"), "A");
  if (st.A.rows() != K || st.A.cols() != D) schema_error("A must be K x D");
  const auto& W = field(j, "W_tilde");
  if (!W.is_array() || static_cast<int>(W.size()) != K) schema_error("W_tilde must hold K matrices");
  for (const auto& w : W) {
    Matrix m = matrix_from_json(w, "W_tilde");
    if (m.rows() != K || m.cols() != K) schema_error("each W_tilde block must be K x K");
    st.B.push_back(m * st.A);
    st.W_tilde.push_back(std::move(m));
  }
  st.Omega = matrix_from_json(field(j, "Omega"), "Omega");
  doc.m_logits = matrix_from_json(field(j, "m_logits"), "m_logits");
  st.g = vector_from_json(field(j, "g"), "g");
  st.s = detail::as_double(field(j, "s"), "s");
  const auto N = st.Omega.rows();
  if (st.Omega.cols() != K || doc.m_logits.rows() != N || doc.m_logits.cols() != K || st.g.size() != N)
    schema_error("Omega, m_logits and g disagree on node count or K");
  if (!(st.s > 0)) schema_error("s must be positive");
  try {
    for (const auto& w : st.W_tilde) check_row_simplex(w, 1e-8, "W_tilde");
    check_row_simplex(st.Omega, 1e-8, "Omega");
  } catch (const Error& e) {
    schema_error(e.what());
  }
  if (j.contains("node_labels")) {
    doc.node_labels = j.at("node_labels").get<std::vector<std::string>>();
    if (static_cast<Eigen::Index>(doc.node_labels.size()) != N) schema_error("node_labels length differs from n_nodes");
  }
  st.assignments = harden(doc.m_logits);
  st.M_soft = one_hot(st.assignments, K);
  st.Z = node_embeddings(st.M_soft, st.Omega, st.B);
  st.sigma = Eigen::JacobiSVD<Matrix>(st.A).singularValues();
  return doc;
}

inline json to_json(const ObjectiveBreakdown& b) {
  return {{"edge_loglik", number(b.edge_loglik)}, {"dirichlet_omega", number(b.dirichlet_omega)},
          {"dirichlet_q", number(b.dirichlet_q)}, {"beta_t", number(b.beta_t)},
          {"dpp_local", number(b.dpp_local)},     {"dpp_global", number(b.dpp_global)},
          {"gauss_g", number(b.gauss_g)},         {"halfnormal_s", number(b.halfnormal_s)},
          {"total", number(b.total)}};
}

inline json to_json(const GeometryReport& r) {
  json hulls = json::array();
  for (const auto& h : r.per_hull)
    hulls.push_back({{"singular_values", to_json(h.singular_values)},
                     {"effective_log_volume", h.effective_log_volume},
                     {"effective_rank", h.effective_rank}});
  json out = {{"pairwise_margin", to_json(r.pairwise_margin)},
              {"min_margin", number(r.min_margin)},
              {"per_hull", std::move(hulls)}};
  out["lipschitz_bound"] = r.lipschitz_bound ? json(*r.lipschitz_bound) : json(nullptr);
  return out;
}

inline json to_json(const MetricsReport& m) {
  json out = {{"auc_roc", m.auc_roc}, {"auc_pr", m.auc_pr}, {"n_test_pairs", m.n_test_pairs}};
  if (m.nmi) out["nmi"] = *m.nmi;
  if (m.ari) out["ari"] = *m.ari;
  return out;
}

inline json to_json(const FitReport& r) {
  json trace = json::array();
  for (double v : r.objective_trace) trace.push_back(number(v));
  return {{"seed", r.seed},
          {"epochs_run", r.epochs_run},
          {"converged", r.converged},
          {"status", r.status},
          {"objective_trace", std::move(trace)},
          {"final_objective", to_json(r.final_objective)},
          {"assignments", r.final_state.assignments},
          {"diagnostics", to_json(r.diagnostics)}};
}

/// Tab-separated matrix with an optional header row and leading id column.
inline std::string matrix_tsv(const Matrix& m, const std::vector<std::string>& header = {},
                              const std::vector<std::string>& row_ids = {}) {
  std::ostringstream out;
  out.precision(17);
  if (!header.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "\t" : "") << header[c];
    out << '\n';
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    bool first = true;
    if (!row_ids.empty()) {
      out << row_ids.at(static_cast<std::size_t>(i));
      first = false;
    }
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out << (first ? "" : "\t") << m(i, j);
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace graphhull

#endif  // GRAPHHULL_SERIALIZATION_HPP
