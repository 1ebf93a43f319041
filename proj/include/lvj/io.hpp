#pragma once

// CSV and JSON writers for reports. Numbers use %.17g so files are
// byte-identical whenever the underlying doubles are.

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "lvj/lyapunov.hpp"
#include "lvj/model.hpp"
#include "lvj/simulate.hpp"
#include "lvj/stats.hpp"

namespace lvj::io {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_moments(std::ostream& os, const MomentCurve& c) {
  os << "t,estimate,stderr,p\n";
  for (std::size_t i = 0; i < c.times.size(); ++i)
    os << num(c.times[i]) << ',' << num(c.estimates[i]) << ',' << num(c.stderrs[i]) << ',' << num(c.p) << '\n';
}

inline void write_exponents(std::ostream& os, const EnsembleSummary& s) {
  os << "path,growth_exp,lyap_exp\n";
  for (std::size_t i = 0; i < s.n_paths; ++i)
    os << i << ',' << num(s.terminal[i].growth_exp) << ',' << num(s.terminal[i].lyap_exp) << '\n';
}

inline void write_statuses(std::ostream& os, const EnsembleSummary& s) {
  os << "path,status,time,component\n";
  for (std::size_t i = 0; i < s.n_paths; ++i) {
    const auto& e = s.ends[i];
    os << i << ',' << to_string(e.status) << ',' << num(e.time) << ',';
    if (e.status == PathStatus::HitZero) os << e.component + 1;
    os << '\n';
  }
}

inline void write_martingale_header(std::ostream& os) { os << "alpha,beta,exceed_freq,bound,pass\n"; }

inline void write_martingale_row(std::ostream& os, const MartingaleResult& r) {
  os << num(r.alpha) << ',' << num(r.beta) << ',' << num(r.exceed_freq) << ',' << num(r.bound) << ','
     << (r.pass ? "true" : "false") << '\n';
}

inline void write_conditions(std::ostream& os, const ConditionReport& rep) {
  os << "condition,holds,status,fitted_coef,fitted_exponent,residual,note\n";
  for (const auto* row : rep.rows())
    os << row->name << ',' << (row->holds() ? "true" : "false") << ',' << to_string(row->verdict) << ','
       << num(row->coef) << ',' << num(row->exponent) << ',' << num(row->residual) << ",\"" << row->note << "\"\n";
  for (const auto& [route, ok] : rep.routes())
    os << "route:" << route << ',' << (ok ? "true" : "false") << ',' << (ok ? "holds" : "fails") << ",,,,\n";
}

/// Path dump: t,x1..xn,event with event in {step, jump:k, end:status}.
inline void write_path(std::ostream& os, const Path& path) {
  const std::size_t n = path.states.empty() ? 0 : path.states.front().size();
  os << 't';
  for (std::size_t i = 0; i < n; ++i) os << ",x" << i + 1;
  os << ",event\n";
  std::size_t next_jump = 0;
  for (std::size_t r = 0; r < path.times.size(); ++r) {
    const double t = path.times[r];
    os << num(t);
    for (double v : path.states[r]) os << ',' << num(v);
    if (r + 1 == path.times.size()) {
      os << ",end:" << to_string(path.end.status) << '\n';
    } else if (next_jump < path.jumps.size() && path.jumps[next_jump].time == t) {
      os << ",jump:" << path.jumps[next_jump].mark + 1 << '\n';
      ++next_jump;
    } else {
      os << ",step\n";
    }
  }
}

inline nlohmann::json validation_json(const ValidationReport& r) {
  nlohmann::json j;
  j["h2_holds"] = r.h2_holds;
  j["h1_pointwise_ok"] = r.h1_pointwise_ok;
  j["zero_at_origin"] = r.zero_at_origin;
  j["x0_positive"] = r.x0_positive;
  j["points_probed"] = r.points_probed;
  auto viol = nlohmann::json::array();
  for (std::size_t i = 0; i < r.h1_violations.size() && i < 50; ++i) {
    const auto& v = r.h1_violations[i];
    viol.push_back({{"x", v.x}, {"mark", v.mark}, {"component", v.component}, {"value", v.value}});
  }
  j["h1_violations"] = viol;
  j["h1_violation_count"] = r.h1_violations.size();
  auto lip = nlohmann::json::array();
  for (const auto& l : r.lipschitz_probe) lip.push_back({{"radius", l.radius}, {"L", l.constant}});
  j["lipschitz_probe"] = lip;
  j["notes"] = r.notes;
  return j;
}

}  // namespace lvj::io
