#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "graph.hpp"

namespace matchlab {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline long parse_long_field(const std::string& field, const std::filesystem::path& file, std::size_t line_no) {
  const std::string t = trim(field);
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (t.empty() || used != t.size()) {
    throw DatasetError("malformed dataset: " + file.filename().string() + " line " + std::to_string(line_no) +
                       ": expected an integer, got '" + t + "'");
  }
  return v;
}

inline std::filesystem::path find_with_suffix(const std::filesystem::path& dir, const std::string& suffix) {
  if (!std::filesystem::is_directory(dir)) throw IngestError("TUDataset directory not found: " + dir.string());
  // Prefer <basename>_<suffix>, otherwise any *_<suffix>.
  const auto preferred = dir / (dir.filename().string() + "_" + suffix);
  if (std::filesystem::exists(preferred)) return preferred;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() + 1 && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0 &&
        name[name.size() - suffix.size() - 1] == '_') {
      return entry.path();
    }
  }
  throw IngestError("missing TUDataset file: " + preferred.string());
}

}  // namespace detail

// Reads <DS>_graph_indicator.txt and <DS>_A.txt (1-indexed, comma-separated)
// into one Graph per graph id. Self-loops and duplicate edges are dropped.
inline GraphCollection parse_tudataset(const std::filesystem::path& directory) {
  const auto indicator_path = detail::find_with_suffix(directory, "graph_indicator.txt");
  const auto edges_path = detail::find_with_suffix(directory, "A.txt");

  std::ifstream ind(indicator_path);
  if (!ind) throw IngestError("cannot open " + indicator_path.string());
  std::vector<long> graph_of;  // 0-based node -> graph id
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ind, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    graph_of.push_back(detail::parse_long_field(line, indicator_path, line_no));
  }

  // Graph ids in ascending order; nodes renumbered within each graph.
  std::map<long, int> graph_index;
  for (long g : graph_of) graph_index.emplace(g, 0);
  int next = 0;
  for (auto& [g, idx] : graph_index) idx = next++;
  std::vector<int> local_id(graph_of.size());
  std::vector<int> sizes(graph_index.size(), 0);
  for (std::size_t i = 0; i < graph_of.size(); ++i) local_id[i] = sizes[graph_index[graph_of[i]]]++;

  std::vector<std::set<Graph::Edge>> edges(graph_index.size());
  std::ifstream ef(edges_path);
  if (!ef) throw IngestError("cannot open " + edges_path.string());
  line_no = 0;
  while (std::getline(ef, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DatasetError("malformed dataset: " + edges_path.filename().string() + " line " + std::to_string(line_no) +
                         ": expected 'u, v'");
    }
    const long a = detail::parse_long_field(line.substr(0, comma), edges_path, line_no);
    const long b = detail::parse_long_field(line.substr(comma + 1), edges_path, line_no);
    const long n = static_cast<long>(graph_of.size());
    if (a < 1 || b < 1 || a > n || b > n) {
      throw DatasetError("malformed dataset: " + edges_path.filename().string() + " line " + std::to_string(line_no) +
                         ": edge endpoint references unknown node");
    }
    const long ga = graph_of[a - 1], gb = graph_of[b - 1];
    if (ga != gb) {
      throw DatasetError("malformed dataset: " + edges_path.filename().string() + " line " + std::to_string(line_no) +
                         ": edge crosses graphs");
    }
    if (a == b) continue;
    int u = local_id[a - 1], v = local_id[b - 1];
    if (u > v) std::swap(u, v);
    edges[graph_index[ga]].emplace(u, v);
  }

  GraphCollection out;
  out.reserve(graph_index.size());
  for (std::size_t g = 0; g < graph_index.size(); ++g) {
    out.emplace_back(sizes[g], std::vector<Graph::Edge>(edges[g].begin(), edges[g].end()));
  }
  return out;
}

}  // namespace matchlab
