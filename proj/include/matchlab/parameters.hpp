#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errors.hpp"
#include "matrix.hpp"

namespace matchlab {

using GradientMap = std::map<std::string, Matrix>;

struct AdamState {
  Matrix m;
  Matrix v;
  long step = 0;
};

// Named trainable weights plus the per-parameter Adam moments. Names are
// dotted paths ("msg.w", "gru.w_hh") and iterate in lexicographic order.
class ParameterStore {
 public:
  void add(const std::string& name, Matrix value) {
    if (values_.count(name)) throw UsageError("duplicate parameter '" + name + "'");
    adam_[name] = AdamState{Matrix(value.rows(), value.cols()), Matrix(value.rows(), value.cols()), 0};
    values_.emplace(name, std::move(value));
  }

  bool contains(const std::string& name) const { return values_.count(name) != 0; }

  const Matrix& get(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) throw UsageError("missing parameter '" + name + "'");
    return it->second;
  }

  Matrix& get_mutable(const std::string& name) {
    auto it = values_.find(name);
    if (it == values_.end()) throw UsageError("missing parameter '" + name + "'");
    return it->second;
  }

  const AdamState& adam(const std::string& name) const { return adam_.at(name); }
  AdamState& adam_mutable(const std::string& name) { return adam_.at(name); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [k, _] : values_) out.push_back(k);
    return out;
  }

  std::size_t size() const { return values_.size(); }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : values_) n += v.size();
    return n;
  }

  const std::map<std::string, Matrix>& all() const { return values_; }

  friend bool operator==(const ParameterStore& a, const ParameterStore& b) { return a.values_ == b.values_; }

 private:
  std::map<std::string, Matrix> values_;
  std::map<std::string, AdamState> adam_;
};

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with the L2 term folded into the raw gradient (g + wd * w), matching
// torch.optim.Adam(weight_decay=...).
inline void adam_step(ParameterStore& store, const GradientMap& grads, const AdamConfig& cfg = {}) {
  for (const auto& [name, g] : grads) {
    if (!store.contains(name)) throw UsageError("adam_step: unknown parameter '" + name + "'");
    Matrix& w = store.get_mutable(name);
    if (!w.same_shape(g)) {
      throw DimensionError("adam_step: gradient for '" + name + "' has shape " + g.shape_string() +
                           ", parameter has " + w.shape_string());
    }
    AdamState& st = store.adam_mutable(name);
    st.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * w[i];
      st.m[i] = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * gi;
      st.v[i] = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double mhat = st.m[i] / bc1;
      const double vhat = st.v[i] / bc2;
      w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the torch.nn.Linear default.
inline Matrix uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = dist(rng);
  return m;
}

// ---- checkpoint serialization ---------------------------------------------

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return nlohmann::json{{"shape", {m.rows(), m.cols()}}, {"values", m.values()}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2) throw UsageError("checkpoint: shape must have two entries");
  return Matrix(shape[0], shape[1], j.at("values").get<std::vector<double>>());
}

inline nlohmann::json store_to_json(const ParameterStore& store) {
  nlohmann::json params = nlohmann::json::object();
  nlohmann::json adam = nlohmann::json::object();
  for (const auto& name : store.names()) {
    params[name] = matrix_to_json(store.get(name));
    const AdamState& st = store.adam(name);
    adam[name] = {{"step", st.step}, {"m", st.m.values()}, {"v", st.v.values()}};
  }
  return nlohmann::json{{"parameters", params}, {"adam", adam}};
}

inline ParameterStore store_from_json(const nlohmann::json& j) {
  ParameterStore store;
  for (const auto& [name, pj] : j.at("parameters").items()) store.add(name, matrix_from_json(pj));
  if (j.contains("adam")) {
    for (const auto& [name, aj] : j.at("adam").items()) {
      AdamState& st = store.adam_mutable(name);
      const Matrix& w = store.get(name);
      st.step = aj.at("step").get<long>();
      st.m = Matrix(w.rows(), w.cols(), aj.at("m").get<std::vector<double>>());
      st.v = Matrix(w.rows(), w.cols(), aj.at("v").get<std::vector<double>>());
    }
  }
  return store;
}

}  // namespace matchlab
