// Method orchestration: iterative -> nuclear -> moment for `auto`, or a
// single requested method.
#pragma once

#include "r1tc/moment_relax.hpp"

namespace r1tc {

enum class MethodChoice { automatic, iterative, nuclear, moment };

inline const char* to_string(MethodChoice m) {
  switch (m) {
    case MethodChoice::automatic: return "auto";
    case MethodChoice::iterative: return "iterative";
    case MethodChoice::nuclear: return "nuclear";
    case MethodChoice::moment: return "moment";
  }
  return "?";
}

inline MethodChoice parse_method_choice(const std::string& s) {
  if (s == "auto") return MethodChoice::automatic;
  if (s == "iterative") return MethodChoice::iterative;
  if (s == "nuclear") return MethodChoice::nuclear;
  if (s == "moment") return MethodChoice::moment;
  throw std::invalid_argument("unknown method '" + s + "'");
}

struct PipelineOptions {
  MethodChoice method = MethodChoice::automatic;
  double tol = 1e-6;
  double rank_tol = 1e-6;
  int max_level = 4;
  std::uint64_t seed = 0;
  SymmetricSource symmetric_source = SymmetricSource::listed;
};

struct PipelineResult {
  CompletionResult result;
  std::vector<std::string> trail;  // one line per attempted method
  std::optional<StrongCompletion> strong;
  std::optional<NuclearResult> nuclear;
  std::optional<MomentResult> moment;
};

inline PipelineResult complete(const PartialTensor& t, const PipelineOptions& opt = {}) {
  PipelineResult out;
  auto unresolved = [&](Method m, std::string msg) {
    CompletionResult r;
    r.a = Eigen::VectorXd::Zero(t.dim(0));
    r.b = Eigen::VectorXd::Zero(t.dim(1));
    r.c = Eigen::VectorXd::Zero(t.dim(2));
    r.method = m;
    r.status = Status::inconclusive;
    r.message = std::move(msg);
    return r;
  };
  const bool all = opt.method == MethodChoice::automatic;

  if (all || opt.method == MethodChoice::iterative) {
    StrongOptions so;
    so.feas_tol = opt.tol;
    out.strong = complete_strong(t, so);
    if (out.strong->result) {
      out.result = *out.strong->result;
      out.trail.push_back("iterative: completed");
      return out;
    }
    std::string why = std::string("iterative: ") + to_string(out.strong->signal);
    out.trail.push_back(why);
    if (!all) {
      out.result = unresolved(Method::iterative, why);
      return out;
    }
  }

  if (all || opt.method == MethodChoice::nuclear) {
    NuclearOptions no;
    no.rank_tol = opt.rank_tol;
    no.feas_tol = opt.tol;
    no.symmetric_source = opt.symmetric_source;
    out.nuclear = t.symmetric() ? solve_nuclear_symmetric(t, no) : solve_nuclear(t, no);
    if (out.nuclear->result) {
      out.result = *out.nuclear->result;
      out.trail.push_back("nuclear: completed");
      return out;
    }
    std::string why = "nuclear: " + out.nuclear->message;
    out.trail.push_back(why);
    if (!all) {
      out.result = unresolved(Method::nuclear, out.nuclear->message);
      return out;
    }
  }

  MomentOptions mo;
  mo.seed = opt.seed;
  mo.max_level = opt.max_level;
  mo.tol = opt.tol;
  mo.rank_tol = opt.rank_tol;
  mo.symmetric_source = opt.symmetric_source;
  out.moment = solve_moment(t, mo);
  out.result = out.moment->result;
  out.trail.push_back(std::string("moment: ") + to_string(out.result.status) +
                      (out.result.message.empty() ? "" : " (" + out.result.message + ")"));
  return out;
}

}  // namespace r1tc
