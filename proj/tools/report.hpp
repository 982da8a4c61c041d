// JSON and text renderings of CLI results. Indices in reports are 1-based.
#pragma once

#include "r1tc/r1tc.hpp"

#include <json.hpp>

#include <ostream>

namespace r1tc::report {

using Json = nlohmann::ordered_json;

inline Json vec(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

enum ExitCode : int { exit_completed = 0, exit_error = 1, exit_no_completion = 2, exit_inconclusive = 3 };

inline int exit_code(Status s) {
  switch (s) {
    case Status::completed: return exit_completed;
    case Status::no_completion: return exit_no_completion;
    case Status::inconclusive: return exit_inconclusive;
  }
  return exit_error;
}

/// Verdict wording; numerical infeasibility is evidence, not proof.
inline std::string verdict(Status s) {
  switch (s) {
    case Status::completed: return "rank-1 completion found";
    case Status::no_completion: return "certified infeasible (numerical)";
    case Status::inconclusive: return "inconclusive";
  }
  return "?";
}

inline Json completion_json(const CompletionResult& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["verdict"] = verdict(r.status);
  j["method"] = to_string(r.method);
  j["residual"] = number_or_null(r.residual);
  j["message"] = r.message;
  if (r.status == Status::completed) {
    j["factors"] = {{"a", vec(r.a)}, {"b", vec(r.b)}, {"c", vec(r.c)}};
    Json det = Json::array();
    for (bool d : r.c_determined) det.push_back(d);
    j["c_determined"] = det;
    if (r.symmetric) j["symmetric"] = {{"v", vec(r.symmetric->v)}, {"tau", r.symmetric->tau}};
  }
  return j;
}

inline Json pipeline_json(const PipelineResult& p) {
  Json j = completion_json(p.result);
  j["trail"] = p.trail;
  if (p.nuclear && p.nuclear->outcome.singular_values.size() > 0) {
    j["nuclear"] = {{"numerical_rank", p.nuclear->outcome.numerical_rank},
                    {"spectrum", vec(p.nuclear->outcome.singular_values)},
                    {"sdp_status", sdp::to_string(p.nuclear->outcome.sdp_status)}};
  }
  if (p.moment) {
    Json levels = Json::array();
    for (const auto& l : p.moment->levels)
      levels.push_back({{"formulation", to_string(l.formulation)},
                        {"level", l.level},
                        {"y_dim", l.y_dim},
                        {"moment_side", l.moment_side},
                        {"sdp_status", sdp::to_string(l.status)},
                        {"flat_t", l.flat_t ? Json(*l.flat_t) : Json(nullptr)},
                        {"verified", l.verified}});
    j["moment_levels"] = levels;
  }
  return j;
}

inline Json order4_json(const Order4Result& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["verdict"] = verdict(r.status);
  j["residual"] = number_or_null(r.residual);
  j["message"] = r.message;
  if (r.factors) {
    const auto& f = *r.factors;
    j["factors"] = {{"a", vec(f[0])}, {"b", vec(f[1])}, {"c", vec(f[2])}, {"d", vec(f[3])}};
  }
  j["cubic"] = pipeline_json(r.cubic);
  if (r.unfolding.singular_values.size() > 0) j["unfolding_singular_values"] = vec(r.unfolding.singular_values);
  return j;
}

struct CheckSummary {
  std::array<int, 3> dims{};
  bool symmetric = false;
  std::size_t omega_size = 0;
  std::vector<Pair> omega_tilde;
  std::size_t minor_rows = 0, minor_cols = 0;
  int nullspace_dim = 0;
  bool connected = false;
  StrongCheck strong = StrongCheck::dimension_not_one;
  AnchorIndex anchor;
};

inline const char* to_string(StrongCheck c) {
  switch (c) {
    case StrongCheck::strong: return "strongly rank-1 completable";
    case StrongCheck::dimension_not_one: return "not strongly completable (nullspace dimension is not 1)";
    case StrongCheck::anchor_coordinate_zero: return "not strongly completable (anchor coordinate vanishes)";
  }
  return "?";
}

inline CheckSummary check(const PartialTensor& t) {
  CheckSummary s;
  s.dims = t.dims();
  s.symmetric = t.symmetric();
  s.omega_size = t.size();
  s.omega_tilde = graph_of(t).edges;
  auto cs = build_minors(t);
  s.minor_rows = cs.rows.size();
  s.minor_cols = cs.variables.size();
  auto sd = strong_data(t);
  s.nullspace_dim = sd.nullspace_dim;
  s.strong = sd.check;
  s.connected = is_connected(graph_of(t));
  s.anchor = anchor_index(t);
  return s;
}

inline Json check_json(const CheckSummary& s) {
  Json pairs = Json::array();
  for (const auto& p : s.omega_tilde) pairs.push_back({p[0] + 1, p[1] + 1});
  return {{"dims", s.dims},
          {"symmetric", s.symmetric},
          {"omega_size", s.omega_size},
          {"omega_tilde_size", s.omega_tilde.size()},
          {"omega_tilde", pairs},
          {"minor_rows", s.minor_rows},
          {"minor_cols", s.minor_cols},
          {"nullspace_dim", s.nullspace_dim},
          {"connected", s.connected},
          {"strongly_completable", s.strong == StrongCheck::strong},
          {"verdict", to_string(s.strong)},
          {"anchor", {s.anchor.index[0] + 1, s.anchor.index[1] + 1, s.anchor.index[2] + 1}},
          {"anchor_value", s.anchor.value}};
}

/// Report without wall-clock fields is a pure function of the config.
inline Json experiment_json(const ExperimentReport& r, bool include_timing = true) {
  const auto& c = r.config;
  Json j;
  j["mode"] = to_string(c.mode);
  j["n"] = c.n;
  j["density"] = c.mode == ExperimentMode::iterative_strong ? Json(nullptr) : Json(c.density);
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["tol"] = c.tol;
  j["rank_tol"] = c.rank_tol;
  j["max_level"] = c.max_level;
  j["den"] = r.den;
  j["rho"] = r.rho;
  j["success_rate"] = r.success_rate;
  if (include_timing) j["mean_time_s"] = r.mean_seconds;
  Json trials = Json::array();
  for (const auto& t : r.trials) {
    Json e = {{"index", t.index},
              {"seed", t.seed},
              {"omega_size", t.omega_size},
              {"status", to_string(t.status)},
              {"residual", number_or_null(t.residual)},
              {"success", t.success},
              {"message", t.message}};
    if (include_timing) e["time_s"] = t.seconds;
    trials.push_back(e);
  }
  j["trials_detail"] = trials;
  return j;
}

inline void print_vector(std::ostream& os, const char* name, const Eigen::VectorXd& v) {
  os << "  " << name << " = (";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ")\n";
}

inline void print_completion(std::ostream& os, const CompletionResult& r, const std::vector<std::string>& trail) {
  os << "status: " << to_string(r.status) << " (" << verdict(r.status) << ")\n";
  os << "method: " << to_string(r.method) << '\n';
  for (const auto& line : trail) os << "  tried " << line << '\n';
  if (!r.message.empty()) os << "message: " << r.message << '\n';
  if (r.status != Status::completed) return;
  os << "residual: " << r.residual << '\n';
  print_vector(os, "a", r.a);
  print_vector(os, "b", r.b);
  print_vector(os, "c", r.c);
  if (r.symmetric) {
    print_vector(os, "v", r.symmetric->v);
    os << "  tau = " << r.symmetric->tau << '\n';
  }
}

}  // namespace r1tc::report
