#pragma once

#include <array>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace matchlab {

enum class RelevanceDistance { set_align, agg_hinge, agg_mlp, agg_ntn };
enum class Stage { early, late };
enum class Structure { injective, non_injective };
enum class Nonlinearity { neural, dot, hinge };
enum class Granularity { node, edge };

inline constexpr std::array<const char*, 4> kDistanceNames{"set_align", "agg_hinge", "agg_mlp", "agg_ntn"};
inline constexpr std::array<const char*, 2> kStageNames{"early", "late"};
inline constexpr std::array<const char*, 2> kStructureNames{"injective", "non_injective"};
inline constexpr std::array<const char*, 3> kNonlinearityNames{"neural", "dot", "hinge"};
inline constexpr std::array<const char*, 2> kGranularityNames{"node", "edge"};

namespace detail {

template <typename E, std::size_t N>
E parse_enum(const std::string& s, const std::array<const char*, N>& names, const char* axis) {
  for (std::size_t i = 0; i < N; ++i)
    if (s == names[i]) return static_cast<E>(i);
  std::string allowed;
  for (std::size_t i = 0; i < N; ++i) allowed += (i ? "|" : "") + std::string(names[i]);
  throw ConfigError(std::string("invalid ") + axis + " '" + s + "' (expected " + allowed + ")");
}

}  // namespace detail

inline std::string to_string(RelevanceDistance v) { return kDistanceNames[static_cast<int>(v)]; }
inline std::string to_string(Stage v) { return kStageNames[static_cast<int>(v)]; }
inline std::string to_string(Structure v) { return kStructureNames[static_cast<int>(v)]; }
inline std::string to_string(Nonlinearity v) { return kNonlinearityNames[static_cast<int>(v)]; }
inline std::string to_string(Granularity v) { return kGranularityNames[static_cast<int>(v)]; }

inline RelevanceDistance parse_distance(const std::string& s) {
  return detail::parse_enum<RelevanceDistance>(s, kDistanceNames, "distance");
}
inline Stage parse_stage(const std::string& s) { return detail::parse_enum<Stage>(s, kStageNames, "stage"); }
inline Structure parse_structure(const std::string& s) {
  // "sinkhorn" and "attention" are accepted as aliases.
  if (s == "sinkhorn") return Structure::injective;
  if (s == "attention") return Structure::non_injective;
  return detail::parse_enum<Structure>(s, kStructureNames, "structure");
}
inline Nonlinearity parse_nonlinearity(const std::string& s) {
  return detail::parse_enum<Nonlinearity>(s, kNonlinearityNames, "nonlinearity");
}
inline Granularity parse_granularity(const std::string& s) {
  return detail::parse_enum<Granularity>(s, kGranularityNames, "granularity");
}

// The five design axes plus network sizes and interaction settings. The
// defaults are the early edge-level Sinkhorn/hinge set-alignment model.
struct ModelConfig {
  RelevanceDistance distance = RelevanceDistance::set_align;
  Stage stage = Stage::early;
  Structure structure = Structure::injective;
  Nonlinearity nonlinearity = Nonlinearity::hinge;
  Granularity granularity = Granularity::edge;

  int layers = 5;
  int dim_h = 10;
  int dim_m = 20;
  int lrl_width = 16;
  int ntn_slices = 16;
  double tau = 0.1;
  int sinkhorn_steps = 20;
  double gumbel_scale = 0.0;  // Gumbel noise on Sinkhorn logits during training; 0 = off

  bool early() const { return stage == Stage::early; }
  bool aggregated() const { return distance != RelevanceDistance::set_align; }
  bool edge_level() const { return granularity == Granularity::edge; }
  // Whether structure/nonlinearity influence the model at all.
  bool uses_alignment() const { return early() || !aggregated(); }
  int width() const { return edge_level() ? dim_m : dim_h; }

  void validate() const {
    if (layers < 1) throw ConfigError("invalid configuration: layers K must be >= 1");
    if (dim_h < 1 || dim_m < 1 || lrl_width < 1 || ntn_slices < 1) {
      throw ConfigError("invalid configuration: embedding widths must be >= 1");
    }
    if (!(tau > 0.0)) throw ConfigError("invalid configuration: temperature tau must be > 0");
    if (sinkhorn_steps < 1) throw ConfigError("invalid configuration: sinkhorn_steps must be >= 1");
    if (gumbel_scale < 0.0) throw ConfigError("invalid configuration: gumbel_scale must be >= 0");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (!uses_alignment()) {
      w.push_back("structure and nonlinearity are ignored: " + to_string(distance) +
                  " with late interaction uses no alignment");
    }
    return w;
  }

  std::string axes_label() const {
    if (!uses_alignment()) return to_string(distance) + "/" + to_string(stage) + "/NA/NA/" + to_string(granularity);
    return to_string(distance) + "/" + to_string(stage) + "/" + to_string(structure) + "/" + to_string(nonlinearity) +
           "/" + to_string(granularity);
  }
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"distance", to_string(c.distance)},
                     {"stage", to_string(c.stage)},
                     {"structure", to_string(c.structure)},
                     {"nonlinearity", to_string(c.nonlinearity)},
                     {"granularity", to_string(c.granularity)},
                     {"layers", c.layers},
                     {"dim_h", c.dim_h},
                     {"dim_m", c.dim_m},
                     {"lrl_width", c.lrl_width},
                     {"ntn_slices", c.ntn_slices},
                     {"tau", c.tau},
                     {"sinkhorn_steps", c.sinkhorn_steps},
                     {"gumbel_scale", c.gumbel_scale}};
}

// Fields absent from `j` keep their current values.
inline void merge_model_config(ModelConfig& c, const nlohmann::json& j) {
  try {
    if (j.contains("distance")) c.distance = parse_distance(j.at("distance").get<std::string>());
    if (j.contains("stage")) c.stage = parse_stage(j.at("stage").get<std::string>());
    if (j.contains("structure")) c.structure = parse_structure(j.at("structure").get<std::string>());
    if (j.contains("nonlinearity")) c.nonlinearity = parse_nonlinearity(j.at("nonlinearity").get<std::string>());
    if (j.contains("granularity")) c.granularity = parse_granularity(j.at("granularity").get<std::string>());
    if (j.contains("layers")) c.layers = j.at("layers").get<int>();
    if (j.contains("dim_h")) c.dim_h = j.at("dim_h").get<int>();
    if (j.contains("dim_m")) c.dim_m = j.at("dim_m").get<int>();
    if (j.contains("lrl_width")) c.lrl_width = j.at("lrl_width").get<int>();
    if (j.contains("ntn_slices")) c.ntn_slices = j.at("ntn_slices").get<int>();
    if (j.contains("tau")) c.tau = j.at("tau").get<double>();
    if (j.contains("sinkhorn_steps")) c.sinkhorn_steps = j.at("sinkhorn_steps").get<int>();
    if (j.contains("gumbel_scale")) c.gumbel_scale = j.at("gumbel_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  merge_model_config(c, j);
}

// Every distinct configuration of the five axes. Set alignment always uses an
// alignment; aggregated heads use one only under early interaction, so their
// late variants carry no structure/nonlinearity choice.
// 24 set_align + 3 heads x (2 late + 12 early) = 66.
inline std::vector<ModelConfig> enumerate_grid(const ModelConfig& base = {}) {
  std::vector<ModelConfig> out;
  auto push = [&](RelevanceDistance d, Stage st, Structure s, Nonlinearity nl, Granularity g) {
    ModelConfig c = base;
    c.distance = d;
    c.stage = st;
    c.structure = s;
    c.nonlinearity = nl;
    c.granularity = g;
    out.push_back(c);
  };
  const Stage stages[] = {Stage::early, Stage::late};
  const Structure structures[] = {Structure::injective, Structure::non_injective};
  const Nonlinearity nls[] = {Nonlinearity::neural, Nonlinearity::dot, Nonlinearity::hinge};
  const Granularity grans[] = {Granularity::node, Granularity::edge};
  for (Stage st : stages)
    for (Structure s : structures)
      for (Nonlinearity nl : nls)
        for (Granularity g : grans) push(RelevanceDistance::set_align, st, s, nl, g);
  for (RelevanceDistance d : {RelevanceDistance::agg_hinge, RelevanceDistance::agg_mlp, RelevanceDistance::agg_ntn}) {
    for (Granularity g : grans) push(d, Stage::late, base.structure, base.nonlinearity, g);
    for (Structure s : structures)
      for (Nonlinearity nl : nls)
        for (Granularity g : grans) push(d, Stage::early, s, nl, g);
  }
  return out;
}

inline constexpr const char* kGridRule =
    "set_align x stage{early,late} x structure{injective,non_injective} x nonlinearity{neural,dot,hinge} x "
    "granularity{node,edge} = 24; agg_{hinge,mlp,ntn} x (late x granularity = 2, early x structure x nonlinearity x "
    "granularity = 12) = 42; total 66";

}  // namespace matchlab
