#ifndef POLYMIX_REPORT_HPP
#define POLYMIX_REPORT_HPP

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "polymix/dsmc.hpp"
#include "polymix/verifier.hpp"

namespace polymix {

inline constexpr const char* version_string = "1.0.0";

// shortest round-trip text for a double; non-finite values become nan/inf/-inf
inline std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no inf/nan: they are written as strings
inline nlohmann::json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}

inline nlohmann::json to_json(const MCEstimate& e) {
  return {{"value", jnum(e.value)}, {"stderr", jnum(e.std_error)}, {"n", e.n_samples}, {"discarded", e.discarded}};
}

inline nlohmann::json to_json(const VerificationReport& r) {
  nlohmann::json j = {{"name", r.name},
                      {"label", r.label},
                      {"lhs", to_json(r.lhs)},
                      {"rhs", to_json(r.rhs)},
                      {"stderr", jnum(r.combined_se())},
                      {"margin", jnum(r.margin)},
                      {"pass", r.pass},
                      {"seed", r.seed},
                      {"digest", r.digest}};
  if (!std::isnan(r.rhs_log10)) j["rhs_log10"] = jnum(r.rhs_log10);
  if (!r.notes.empty()) j["notes"] = r.notes;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string o = "\"";
  for (char c : s) {
    if (c == '"') o += '"';
    o += c;
  }
  return o + "\"";
}

inline std::string provenance_line(const std::string& digest, std::uint64_t seed) {
  return "# polymix " + std::string(version_string) + " digest=" + digest + " seed=" + std::to_string(seed) + "\n";
}

inline const char* verify_csv_header = "name,label,lhs,lhs_stderr,rhs,rhs_stderr,rhs_log10,margin,pass,seed,error\n";

inline std::string verify_csv(const std::vector<VerificationReport>& reps, const std::string& digest, std::uint64_t seed) {
  std::string s = provenance_line(digest, seed) + verify_csv_header;
  for (const auto& r : reps)
    s += csv_quote(r.name) + "," + csv_quote(r.label) + "," + num(r.lhs.value) + "," + num(r.lhs.std_error) + "," +
         num(r.rhs.value) + "," + num(r.rhs.std_error) + "," + num(r.rhs_log10) + "," + num(r.margin) + "," +
         (r.pass ? "1" : "0") + "," + std::to_string(r.seed) + "," + csv_quote(r.error) + "\n";
  return s;
}

// Diagnostics columns: step,time, then per species s (1-based)
// mass_s,px_s,py_s,pz_s,energy_s,temperature_s,{moment_k_s,moment_se_k_s}*,
// entropy_s,entropy_se_s,lp_s, then totals px,py,pz,energy,entropy,entropy_se,
// lp_pow,common_temperature,collisions,overflows.
inline std::string diagnostics_header(std::size_t P, const SolverConfig& cfg) {
  std::string h = "step,time";
  for (std::size_t i = 1; i <= P; ++i) {
    const std::string s = "_" + std::to_string(i);
    h += ",mass" + s + ",px" + s + ",py" + s + ",pz" + s + ",energy" + s + ",temperature" + s;
    for (double k : cfg.moment_orders) h += ",moment_" + num(k) + s + ",moment_se_" + num(k) + s;
    h += ",entropy" + s + ",entropy_se" + s + ",lp" + s;
  }
  return h + ",px,py,pz,energy,entropy,entropy_se,lp_pow,common_temperature,collisions,overflows\n";
}

inline std::string diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const SolverConfig& cfg,
                                   const std::string& digest, std::uint64_t seed) {
  const std::size_t P = rows.empty() ? 0 : rows.front().species.size();
  std::string s = provenance_line(digest, seed) + diagnostics_header(P, cfg);
  for (const auto& r : rows) {
    s += std::to_string(r.step) + "," + num(r.time);
    for (const auto& d : r.species) {
      s += "," + num(d.mass) + "," + num(d.momentum.x) + "," + num(d.momentum.y) + "," + num(d.momentum.z) + "," +
           num(d.energy) + "," + num(d.temperature);
      for (std::size_t q = 0; q < d.moments.size(); ++q) s += "," + num(d.moments[q]) + "," + num(d.moment_se[q]);
      s += "," + num(d.entropy) + "," + num(d.entropy_se) + "," + num(d.lp_norm);
    }
    s += "," + num(r.momentum.x) + "," + num(r.momentum.y) + "," + num(r.momentum.z) + "," + num(r.energy) + "," +
         num(r.entropy) + "," + num(r.entropy_se) + "," + num(r.lp_pow) + "," + num(r.common_temperature) + "," +
         std::to_string(r.collisions) + "," + std::to_string(r.overflows) + "\n";
  }
  return s;
}

// species,index,vx,vy,vz,I (species 1-based)
inline std::string ensembles_csv(const SimulationState& st, const std::string& digest, std::uint64_t seed) {
  std::string s = provenance_line(digest, seed) + "species,index,weight,vx,vy,vz,I\n";
  for (const auto& e : st.ensembles)
    for (std::size_t a = 0; a < e.particles.size(); ++a) {
      const auto& p = e.particles[a];
      s += std::to_string(e.species + 1) + "," + std::to_string(a) + "," + num(e.weight) + "," + num(p.v.x) + "," +
           num(p.v.y) + "," + num(p.v.z) + "," + num(p.I) + "\n";
    }
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
  if (!out) throw Error("write failed for " + path);
}

} // namespace polymix

#endif // POLYMIX_REPORT_HPP
