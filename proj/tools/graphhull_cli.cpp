// graphhull: split, fit, sample, evaluate and diagnose archetypal graph models.

#include "graphhull/graphhull.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace graphhull;

namespace {

/// Invalid flag combinations; reported like CLI parse errors (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

struct Manifest {
  std::string subcommand;
  json flags = json::object();
  json inputs = json::object();
  json outputs = json::object();
  json warnings = json::array();
  std::uint64_t seed = 0;
};

void write_manifest(const fs::path& dir, const Manifest& m, double wall_seconds) {
  const json doc = {{"schema", kManifestSchema},
                    {"subcommand", m.subcommand},
                    {"version", kVersion},
                    {"seed", m.seed},
                    {"flags", m.flags},
                    {"inputs", m.inputs},
                    {"outputs", m.outputs},
                    {"warnings", m.warnings},
                    {"wall_time_seconds", wall_seconds}};
  write_file((dir / (m.subcommand + ".manifest.json")).string(), doc.dump(2) + "\n");
}

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

Graph read_graph(const std::string& path) {
  if (!fs::exists(path)) throw Error("graph file '" + path + "' does not exist");
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path + "'");
  try {
    return load_edge_list(in);
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

ModelDocument read_model(const std::string& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("model schema: '" + path + "' is not valid JSON (" + e.what() + ")");
  }
  return model_from_json(j);
}

std::vector<Edge> read_pairs(const std::string& path, const ModelDocument& doc) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pair file '" + path + "'");
  try {
    return load_pairs(in, doc.node_labels, doc.state.n_nodes());
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string node_label(const ModelDocument& doc, int i) {
  return doc.node_labels.empty() ? std::to_string(i) : doc.node_labels[static_cast<std::size_t>(i)];
}

/// Truth labels file: "<node id> <label>" per line; labels may be any token.
std::vector<int> read_truth(const std::string& path, const ModelDocument& doc, std::vector<int>& nodes) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open truth-label file '" + path + "'");
  std::map<std::string, int> node_index;
  for (int i = 0; i < doc.state.n_nodes(); ++i) node_index.emplace(node_label(doc, i), i);
  std::map<std::string, int> classes;
  std::vector<int> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string id, label;
    if (!(fields >> id >> label)) throw Error(path + ": line " + std::to_string(lineno) + ": expected '<node> <label>'");
    auto it = node_index.find(id);
    if (it == node_index.end()) throw Error(path + ": line " + std::to_string(lineno) + ": node '" + id + "' not in model");
    nodes.push_back(it->second);
    out.push_back(classes.try_emplace(label, static_cast<int>(classes.size())).first->second);
  }
  return out;
}

std::vector<std::string> column_names(const std::string& prefix, Eigen::Index n) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string graph, out_dir;
  double holdout = 0.5;
  std::uint64_t seed = 0;
};

void cmd_split(const SplitArgs& a, Manifest& m) {
  const Graph g = read_graph(a.graph);
  const SplitResult split = split_links(g, a.holdout, a.seed);
  const fs::path dir = prepare_out_dir(a.out_dir);
  write_file((dir / "residual.edgelist").string(), serialize_edge_list(split.residual));
  write_file((dir / "test_positives.edgelist").string(), serialize_pairs(g, split.test_positives));
  write_file((dir / "test_negatives.edgelist").string(), serialize_pairs(g, split.test_negatives));
  const json info = {{"seed", split.seed},
                     {"holdout_fraction", split.holdout_fraction},
                     {"requested", split.requested},
                     {"removed", split.test_positives.size()},
                     {"shortfall", split.shortfall}};
  write_file((dir / "split.json").string(), info.dump(2) + "\n");
  if (split.shortfall > 0) {
    const std::string msg = "only " + std::to_string(split.test_positives.size()) + " of " +
                            std::to_string(split.requested) +
                            " edges could be removed without disconnecting the residual (shortfall " +
                            std::to_string(split.shortfall) + ")";
    m.warnings.push_back(msg);
    std::cerr << "warning: " << msg << "\n";
  }
  m.inputs = {{"graph", a.graph}};
  m.outputs = {{"residual", "residual.edgelist"},
               {"positives", "test_positives.edgelist"},
               {"negatives", "test_negatives.edgelist"},
               {"split", "split.json"}};
  m.flags = {{"holdout", a.holdout}, {"out_dir", a.out_dir}};
  m.seed = a.seed;
}

struct FitArgs {
  std::string graph, out_dir;
  int dim = 8;
  int hulls = 0;  // 0: same as dim
  double epsilon = 0.45, sigma_min = 0.3, sigma_max = 1.5;
  double lr = 0.02;
  int epochs = 500;
  std::size_t neg_samples = 0;
  double kappa = 1.0;
  double gs_start = 1.0, gs_end = 0.1;
  std::uint64_t seed = 0;
};

Hyperparams fit_hyperparams(const FitArgs& a) {
  Hyperparams hp;
  hp.D = a.dim;
  hp.K = a.hulls > 0 ? a.hulls : a.dim;
  hp.epsilon = a.epsilon;
  hp.sigma_min = a.sigma_min;
  hp.sigma_max = a.sigma_max;
  hp.kappa = a.kappa;
  hp.gs_temp_start = a.gs_start;
  hp.gs_temp_end = a.gs_end;
  try {
    hp.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return hp;
}

void cmd_fit(const FitArgs& a, Manifest& m) {
  const Hyperparams hp = fit_hyperparams(a);
  const Graph g = read_graph(a.graph);
  FitConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.epochs = a.epochs;
  cfg.neg_samples = a.neg_samples;
  cfg.seed = a.seed;
  const FitReport rep = fit(g, hp, cfg);

  ModelDocument doc{hp, a.seed, rep.final_state, rep.final_params.m_logits, g.labels()};
  const fs::path dir = prepare_out_dir(a.out_dir);
  write_file((dir / "model.json").string(), model_to_json(doc).dump(2) + "\n");
  std::vector<std::string> ids;
  for (int i = 0; i < g.n_nodes(); ++i) ids.push_back(g.label(i));
  std::vector<std::string> header{"node"};
  for (const auto& c : column_names("z", hp.D)) header.push_back(c);
  write_file((dir / "embeddings.tsv").string(), matrix_tsv(rep.final_state.Z, header, ids));
  write_file((dir / "fit_report.json").string(), to_json(rep).dump(2) + "\n");
  if (rep.status != "ok") {
    m.warnings.push_back(rep.status);
    std::cerr << "warning: " << rep.status << "\n";
  }
  m.inputs = {{"graph", a.graph}};
  m.outputs = {{"model", "model.json"}, {"embeddings", "embeddings.tsv"}, {"report", "fit_report.json"}};
  m.flags = {{"dim", hp.D},           {"hulls", hp.K},           {"epsilon", hp.epsilon},
             {"sigma_min", hp.sigma_min}, {"sigma_max", hp.sigma_max}, {"lr", a.lr},
             {"epochs", a.epochs},    {"neg_samples", a.neg_samples}, {"kappa", a.kappa},
             {"gs_start", a.gs_start}, {"gs_end", a.gs_end},     {"out_dir", a.out_dir}};
  m.seed = a.seed;
}

struct SampleArgs {
  std::string out_dir;
  int nodes = 200, dim = 3, hulls = 0;
  double epsilon = 0.45;
  std::uint64_t seed = 0;
};

void cmd_sample(const SampleArgs& a, Manifest& m) {
  Hyperparams hp;
  hp.D = a.dim;
  hp.K = a.hulls > 0 ? a.hulls : a.dim;
  hp.epsilon = a.epsilon;
  try {
    hp.validate();
    if (a.nodes < 1) throw Error("--nodes must be positive");
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const GenerativeDraw draw = sample_model(hp, a.nodes, a.seed);
  const GeometryReport geo = geometry_report(draw.state, hp, degrees(draw.graph).deg_max);

  const fs::path dir = prepare_out_dir(a.out_dir);
  write_file((dir / "graph.edgelist").string(), serialize_edge_list(draw.graph));
  const ModelDocument doc{hp, a.seed, draw.state, one_hot(draw.state.assignments, hp.K), {}};
  write_file((dir / "model.json").string(), model_to_json(doc).dump(2) + "\n");
  const json truth = {{"seed", a.seed},
                      {"pi", to_json(draw.pi)},
                      {"c", draw.state.assignments},
                      {"t", to_json(draw.state.t)},
                      {"sigma", to_json(draw.state.sigma)},
                      {"state", model_to_json(doc)},
                      {"diagnostics", to_json(geo)}};
  write_file((dir / "truth.json").string(), truth.dump(2) + "\n");
  std::ostringstream labels;
  for (int i = 0; i < a.nodes; ++i) labels << i << ' ' << draw.state.assignments[i] << '\n';
  write_file((dir / "truth_labels.txt").string(), labels.str());

  m.outputs = {{"graph", "graph.edgelist"},
               {"model", "model.json"},
               {"truth", "truth.json"},
               {"truth_labels", "truth_labels.txt"}};
  m.flags = {{"nodes", a.nodes}, {"dim", hp.D}, {"hulls", hp.K}, {"epsilon", hp.epsilon}, {"out_dir", a.out_dir}};
  m.seed = a.seed;
}

struct EvaluateArgs {
  std::string model, positives, negatives, truth_labels, out_dir;
};

void cmd_evaluate(const EvaluateArgs& a, Manifest& m) {
  const ModelDocument doc = read_model(a.model);
  const auto pos = read_pairs(a.positives, doc);
  const auto neg = read_pairs(a.negatives, doc);
  std::vector<Edge> pairs = pos;
  pairs.insert(pairs.end(), neg.begin(), neg.end());
  std::vector<int> labels(pos.size(), 1);
  labels.resize(pairs.size(), 0);
  const auto scores = link_scores(doc.state, pairs);

  MetricsReport rep;
  rep.auc_roc = auc_roc(scores, labels);
  rep.auc_pr = auc_pr(scores, labels);
  rep.n_test_pairs = pairs.size();
  if (!a.truth_labels.empty()) {
    std::vector<int> nodes;
    const auto truth = read_truth(a.truth_labels, doc, nodes);
    std::vector<int> pred;
    for (int i : nodes) pred.push_back(doc.state.assignments[static_cast<std::size_t>(i)]);
    rep.nmi = nmi(pred, truth);
    rep.ari = ari(pred, truth);
    m.inputs["truth_labels"] = a.truth_labels;
  }
  const std::string out_dir = a.out_dir.empty() ? fs::path(a.model).parent_path().string() : a.out_dir;
  const fs::path dir = prepare_out_dir(out_dir.empty() ? "." : out_dir);
  const std::string text = to_json(rep).dump(2) + "\n";
  write_file((dir / "metrics.json").string(), text);
  std::cout << text;
  m.inputs["model"] = a.model;
  m.inputs["positives"] = a.positives;
  m.inputs["negatives"] = a.negatives;
  m.outputs = {{"metrics", "metrics.json"}};
  m.flags = {{"out_dir", dir.string()}};
  m.seed = doc.seed;
}

struct DiagnoseArgs {
  std::string model, graph, out_dir;
};

void cmd_diagnose(const DiagnoseArgs& a, Manifest& m) {
  const ModelDocument doc = read_model(a.model);
  const ModelState& st = doc.state;
  std::optional<Graph> graph;
  std::optional<int> deg_max;
  if (!a.graph.empty()) {
    graph = read_graph(a.graph);
    if (graph->n_nodes() != st.n_nodes())
      throw Error("graph has " + std::to_string(graph->n_nodes()) + " nodes, model has " + std::to_string(st.n_nodes()));
    deg_max = degrees(*graph).deg_max;
    m.inputs["graph"] = a.graph;
  }
  const GeometryReport geo = geometry_report(st, doc.hp, deg_max);
  const std::string out_dir = a.out_dir.empty() ? fs::path(a.model).parent_path().string() : a.out_dir;
  const fs::path dir = prepare_out_dir(out_dir.empty() ? "." : out_dir);
  write_file((dir / "geometry.json").string(), to_json(geo).dump(2) + "\n");

  const int K = st.K();
  Matrix spectra(K, K);
  for (int k = 0; k < K; ++k) spectra.col(k) = geo.per_hull[k].singular_values;
  write_file((dir / "spectra.tsv").string(), matrix_tsv(spectra, column_names("hull", K)));

  std::vector<std::string> ids;
  for (int i = 0; i < st.n_nodes(); ++i) ids.push_back(node_label(doc, i));

  // Joint PCA of node embeddings and all local-hull vertices.
  Matrix points(st.n_nodes() + K * K, st.D());
  points.topRows(st.n_nodes()) = st.Z;
  for (int k = 0; k < K; ++k) points.middleRows(st.n_nodes() + k * K, K) = st.B[k];
  if (points.rows() >= 2) {
    const PcaProjection pca = pca_project(points, 2);
    Matrix nodes(st.n_nodes(), 3);
    for (int i = 0; i < st.n_nodes(); ++i) nodes.row(i) << st.assignments[i], pca.coords(i, 0), pca.coords(i, 1);
    write_file((dir / "pca_nodes.tsv").string(), matrix_tsv(nodes, {"node", "hull", "pc1", "pc2"}, ids));
    Matrix verts(K * K, 4);
    for (int k = 0; k < K; ++k)
      for (int r = 0; r < K; ++r) {
        const auto row = st.n_nodes() + k * K + r;
        verts.row(k * K + r) << k, r, pca.coords(row, 0), pca.coords(row, 1);
      }
    write_file((dir / "pca_vertices.tsv").string(), matrix_tsv(verts, {"hull", "vertex", "pc1", "pc2"}));
    write_file((dir / "pca_variance.tsv").string(), matrix_tsv(pca.explained_variance, {"explained_variance"}));
  }

  const CircularLayout layout = circular_membership_layout(st.Omega, st.assignments);
  Matrix circ(st.n_nodes(), 3);
  for (int i = 0; i < st.n_nodes(); ++i) circ.row(i) << st.assignments[i], layout.positions(i, 0), layout.positions(i, 1);
  write_file((dir / "circular.tsv").string(), matrix_tsv(circ, {"node", "hull", "x", "y"}, ids));
  write_file((dir / "circular_anchors.tsv").string(), matrix_tsv(layout.anchors, {"x", "y"}));
  m.outputs = {{"geometry", "geometry.json"},
               {"spectra", "spectra.tsv"},
               {"pca_nodes", "pca_nodes.tsv"},
               {"pca_vertices", "pca_vertices.tsv"},
               {"circular", "circular.tsv"}};

  if (graph) {
    const auto perm = reorder_adjacency(*graph, st);
    std::ostringstream out;
    out << "position\tnode\thull\n";
    for (std::size_t p = 0; p < perm.size(); ++p) out << p << '\t' << ids[perm[p]] << '\t' << st.assignments[perm[p]] << '\n';
    write_file((dir / "reorder.tsv").string(), out.str());
    m.outputs["reorder"] = "reorder.tsv";
  }
  std::cout << "min_margin " << geo.min_margin << "\n";
  m.inputs["model"] = a.model;
  m.flags = {{"out_dir", dir.string()}};
  m.seed = doc.seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"graphhull: archetypal convex-hull graph models"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Connectivity-preserving link-prediction holdout");
  s->add_option("--graph", split.graph, "Edge list")->required();
  s->add_option("--holdout", split.holdout, "Fraction of edges to hold out")->capture_default_str();
  s->add_option("--seed", split.seed)->capture_default_str();
  s->add_option("--out-dir", split.out_dir)->required();

  FitArgs fa;
  auto* f = app.add_subcommand("fit", "MAP fit of the model to a graph");
  f->add_option("--graph", fa.graph, "Edge list")->required();
  f->add_option("--dim", fa.dim, "Latent dimension D")->capture_default_str();
  f->add_option("--hulls", fa.hulls, "Number of hulls K (default: D)");
  f->add_option("--epsilon", fa.epsilon, "Anchor mass bound")->capture_default_str();
  f->add_option("--sigma-min", fa.sigma_min)->capture_default_str();
  f->add_option("--sigma-max", fa.sigma_max)->capture_default_str();
  f->add_option("--lr", fa.lr, "Adam learning rate")->capture_default_str();
  f->add_option("--epochs", fa.epochs)->capture_default_str();
  f->add_option("--neg-samples", fa.neg_samples, "Non-edge samples per epoch (0: |E|)")->capture_default_str();
  f->add_option("--kappa", fa.kappa, "DPP kernel weight")->capture_default_str();
  f->add_option("--gs-start", fa.gs_start, "Initial Gumbel-softmax temperature")->capture_default_str();
  f->add_option("--gs-end", fa.gs_end, "Final Gumbel-softmax temperature")->capture_default_str();
  f->add_option("--seed", fa.seed)->capture_default_str();
  f->add_option("--out-dir", fa.out_dir)->required();

  SampleArgs sa;
  auto* g = app.add_subcommand("sample", "Draw a synthetic graph from the generative process");
  g->add_option("--nodes", sa.nodes)->capture_default_str();
  g->add_option("--dim", sa.dim)->capture_default_str();
  g->add_option("--hulls", sa.hulls, "Number of hulls K (default: D)");
  g->add_option("--epsilon", sa.epsilon)->capture_default_str();
  g->add_option("--seed", sa.seed)->capture_default_str();
  g->add_option("--out-dir", sa.out_dir)->required();

  EvaluateArgs ea;
  auto* e = app.add_subcommand("evaluate", "Link-prediction and community metrics");
  e->add_option("--model", ea.model)->required();
  e->add_option("--positives", ea.positives)->required();
  e->add_option("--negatives", ea.negatives)->required();
  e->add_option("--truth-labels", ea.truth_labels, "Lines of '<node> <label>'");
  e->add_option("--out-dir", ea.out_dir, "Output directory (default: the model's directory)");

  DiagnoseArgs da;
  auto* d = app.add_subcommand("diagnose", "Geometry report and figure data");
  d->add_option("--model", da.model)->required();
  d->add_option("--graph", da.graph, "Edge list the model was fitted on");
  d->add_option("--out-dir", da.out_dir, "Output directory (default: the model's directory)");

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  Manifest manifest;
  std::string out_dir;
  try {
    if (*s) {
      manifest.subcommand = "split";
      cmd_split(split, manifest);
      out_dir = split.out_dir;
    } else if (*f) {
      manifest.subcommand = "fit";
      cmd_fit(fa, manifest);
      out_dir = fa.out_dir;
    } else if (*g) {
      manifest.subcommand = "sample";
      cmd_sample(sa, manifest);
      out_dir = sa.out_dir;
    } else if (*e) {
      manifest.subcommand = "evaluate";
      cmd_evaluate(ea, manifest);
      out_dir = manifest.flags["out_dir"];
    } else if (*d) {
      manifest.subcommand = "diagnose";
      cmd_diagnose(da, manifest);
      out_dir = manifest.flags["out_dir"];
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out_dir, manifest, wall);
  } catch (const UsageError& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
