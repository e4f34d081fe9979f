#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "qmra/errors.hpp"
#include "qmra/graph.hpp"

namespace qmra {

namespace detail {

inline nlohmann::json matrix_to_json(const Eigen::Matrix3d& m) {
  nlohmann::json a = nlohmann::json::array();
  // column-major, matching the library-wide vec() convention
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) a.push_back(m(r, c));
  }
  return a;
}

inline Eigen::Matrix3d matrix_from_json(const nlohmann::json& a,
                                        const std::string& context) {
  if (!a.is_array() || a.size() != 9) {
    throw ParseError("graph file: field '" + context +
                     "' must be an array of 9 numbers");
  }
  Eigen::Matrix3d m;
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < 3; ++r) {
      const auto& v = a[3 * c + r];
      if (!v.is_number()) {
        throw ParseError("graph file: non-numeric entry in '" + context + "'");
      }
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

}  // namespace detail

inline nlohmann::json graph_to_json(const CameraGraph& g) {
  nlohmann::json doc;
  doc["n"] = g.n;
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    doc["edges"].push_back(
        {{"i", e.i}, {"j", e.j}, {"r", detail::matrix_to_json(e.rel)}});
  }
  if (g.has_ground_truth()) {
    nlohmann::json gt = nlohmann::json::array();
    for (const auto& r : g.ground_truth) gt.push_back(detail::matrix_to_json(r));
    doc["ground_truth"] = gt;
  }
  return doc;
}

inline CameraGraph graph_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("graph file: root must be an object");
  if (!doc.contains("n") || !doc["n"].is_number_integer()) {
    throw ParseError("graph file: missing integer field 'n'");
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw ParseError("graph file: missing array field 'edges'");
  }
  CameraGraph g;
  g.n = doc["n"].get<int>();
  int index = 0;
  for (const auto& je : doc["edges"]) {
    const std::string ctx = "edges[" + std::to_string(index++) + "]";
    if (!je.is_object() || !je.contains("i") || !je.contains("j") ||
        !je.contains("r")) {
      throw ParseError("graph file: " + ctx + " needs fields i, j, r");
    }
    Edge e;
    e.i = je["i"].get<int>();
    e.j = je["j"].get<int>();
    e.rel = detail::matrix_from_json(je["r"], ctx + ".r");
    g.edges.push_back(e);
  }
  if (doc.contains("ground_truth")) {
    if (!doc["ground_truth"].is_array()) {
      throw ParseError("graph file: 'ground_truth' must be an array");
    }
    int k = 0;
    for (const auto& jr : doc["ground_truth"]) {
      g.ground_truth.push_back(detail::matrix_from_json(
          jr, "ground_truth[" + std::to_string(k++) + "]"));
    }
  }
  g.validate();
  return g;
}

inline void save_graph(const CameraGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("save_graph: cannot open " + path);
  out << graph_to_json(g).dump(2) << "\n";
  if (!out) throw IoError("save_graph: write failed for " + path);
}

inline CameraGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_graph: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& err) {
    throw ParseError("load_graph: " + path + ": " + err.what());
  }
  return graph_from_json(doc);
}

}  // namespace qmra
