#ifndef POLYMIX_CONFIG_HPP
#define POLYMIX_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "polymix/dsmc.hpp"
#include "polymix/suite.hpp"

namespace polymix {

using json = nlohmann::json;

// Read-only view of a JSON value that remembers its JSON-pointer location,
// so every schema error names the offending key.
class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return *j_; }
  std::string where() const { return path_.empty() ? "/" : path_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where() + ": " + msg); }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) fail("missing required key '" + key + "'");
    return Node((*j_)[key], path_ + "/" + key);
  }

  std::optional<Node> opt(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return Node((*j_)[key], path_ + "/" + key);
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const {
    if (!j_->is_array()) fail("expected an array");
    if (i >= j_->size()) fail("index " + std::to_string(i) + " out of range");
    return Node((*j_)[i], path_ + "/" + std::to_string(i));
  }

  double number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::uint64_t count() const {
    if (!j_->is_number_integer() || j_->get<std::int64_t>() < 0) fail("expected a nonnegative integer");
    return j_->get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_->is_boolean()) fail("expected true or false");
    return j_->get<bool>();
  }

  std::string string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].number());
    return out;
  }

  Vec3 vec3() const {
    if (size() != 3) fail("expected an array of 3 numbers");
    return {(*this)[0].number(), (*this)[1].number(), (*this)[2].number()};
  }

  double number_or(const std::string& key, double d) const { return has(key) ? at(key).number() : d; }
  std::uint64_t count_or(const std::string& key, std::uint64_t d) const { return has(key) ? at(key).count() : d; }

  void only(std::initializer_list<const char*> keys) const {
    if (!j_->is_object()) fail("expected an object");
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      bool ok = false;
      for (const char* k : keys) ok = ok || it.key() == k;
      if (!ok) throw ConfigError(path_ + "/" + it.key() + ": unknown key");
    }
  }

 private:
  const json* j_;
  std::string path_;
};

namespace detail {

// Runs `fn`, attaching the node location to library errors.
template <class F>
auto located(const Node& n, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    n.fail(e.what());
  }
}

} // namespace detail

// species indices are 1-based in files
inline std::size_t parse_species_index(const Node& n, std::size_t P) {
  const std::uint64_t i = n.count();
  if (i < 1 || i > P) n.fail("species index must lie in 1.." + std::to_string(P));
  return static_cast<std::size_t>(i - 1);
}

inline MixtureParams parse_mixture(const Node& n) {
  n.only({"species", "gamma"});
  const Node sp = n.at("species");
  std::vector<SpeciesParams> species;
  for (std::size_t i = 0; i < sp.size(); ++i) {
    const Node s = sp[i];
    s.only({"mass", "alpha"});
    species.push_back({s.at("mass").number(), s.number_or("alpha", 0.0)});
  }
  if (species.empty()) sp.fail("mixture needs at least one species");
  const Node g = n.at("gamma");
  std::vector<std::vector<double>> gamma;
  for (std::size_t i = 0; i < g.size(); ++i) gamma.push_back(g[i].numbers());
  return detail::located(n, [&] { return MixtureParams(std::move(species), std::move(gamma)); });
}

inline AngularKernel parse_angular(const Node& n) {
  const std::string type = n.at("type").string();
  return detail::located(n, [&] {
    if (type == "constant") {
      n.only({"type", "value"});
      return AngularKernel::constant(n.at("value").number());
    }
    if (type == "table") {
      n.only({"type", "samples"});
      return AngularKernel::table(n.at("samples").numbers());
    }
    if (type == "truncated_power") {
      n.only({"type", "scale", "exponent", "lo", "hi"});
      return AngularKernel::truncated_power(n.at("scale").number(), n.at("exponent").number(),
                                            n.number_or("lo", -1.0), n.number_or("hi", 1.0));
    }
    n.at("type").fail("unknown angular kernel type '" + type + "' (constant, table, truncated_power)");
  });
}

inline ExchangeBound parse_exchange(const Node& n) {
  const std::string type = n.at("type").string();
  if (type == "constant") {
    n.only({"type", "value"});
    return ExchangeBound::constant(n.at("value").number());
  }
  if (type == "product_power") {
    n.only({"type", "coef", "r", "one_minus_r", "R", "one_minus_R"});
    return ExchangeBound::product_power(n.number_or("coef", 1.0), n.number_or("r", 0.0), n.number_or("one_minus_r", 0.0),
                                        n.number_or("R", 0.0), n.number_or("one_minus_R", 0.0));
  }
  n.at("type").fail("unknown exchange bound type '" + type + "' (constant, product_power)");
}

inline Maxwellian parse_maxwellian_fields(const Node& n) {
  Maxwellian m;
  m.density = n.number_or("density", 1.0);
  if (auto b = n.opt("bulk")) m.bulk = b->vec3();
  m.temperature = n.number_or("temperature", 1.0);
  return m;
}

// `species` is fixed by the caller when given; otherwise read from the node
inline TestDistribution parse_distribution(const Node& n, const MixtureParams& mix,
                                           std::optional<std::size_t> species = std::nullopt) {
  const std::size_t i = species ? *species : parse_species_index(n.at("species"), mix.size());
  const std::string type = n.at("type").string();
  return detail::located(n, [&]() -> TestDistribution {
    if (type == "maxwellian") {
      n.only({"species", "type", "density", "bulk", "temperature"});
      const Maxwellian m = parse_maxwellian_fields(n);
      return TestDistribution::maxwellian(mix, i, m.density, m.bulk, m.temperature);
    }
    if (type == "bump") {
      n.only({"species", "type", "center_v", "center_I", "radius", "height"});
      Vec3 c;
      if (auto cv = n.opt("center_v")) c = cv->vec3();
      return TestDistribution::bump(mix, i, c, n.at("center_I").number(), n.at("radius").number(),
                                    n.at("height").number());
    }
    if (type == "mixture_of_two") {
      n.only({"species", "type", "first", "second", "w_first", "w_second"});
      const Node a = n.at("first"), b = n.at("second");
      a.only({"density", "bulk", "temperature"});
      b.only({"density", "bulk", "temperature"});
      return TestDistribution::mixture_of_two(mix, i, parse_maxwellian_fields(a), parse_maxwellian_fields(b),
                                              n.number_or("w_first", 1.0), n.number_or("w_second", 1.0));
    }
    n.at("type").fail("unknown distribution type '" + type + "' (maxwellian, bump, mixture_of_two)");
  });
}

struct KernelBlock {
  AngularKernel angular = AngularKernel::constant(1.0);
  ExchangeBound upper = ExchangeBound::constant(1.0);
  ExchangeBound lower = ExchangeBound::constant(1.0);
};

inline KernelBlock parse_kernel_block(const Node& n, KernelBlock base = {}) {
  if (auto a = n.opt("angular")) base.angular = parse_angular(*a);
  if (auto u = n.opt("upper")) base.upper = parse_exchange(*u);
  if (auto l = n.opt("lower")) base.lower = parse_exchange(*l);
  return base;
}

// specs[i][j] for every ordered pair; a block given for (i, j) also defines (j, i)
inline std::vector<std::vector<KernelSpec>> parse_kernels(const std::optional<Node>& n, const MixtureParams& mix) {
  const std::size_t P = mix.size();
  KernelBlock def;
  std::vector<std::vector<std::optional<KernelBlock>>> given(P, std::vector<std::optional<KernelBlock>>(P));
  if (n) {
    n->only({"default", "pairs"});
    if (auto d = n->opt("default")) {
      d->only({"angular", "upper", "lower"});
      def = parse_kernel_block(*d);
    }
    if (auto ps = n->opt("pairs"))
      for (std::size_t a = 0; a < ps->size(); ++a) {
        const Node e = (*ps)[a];
        e.only({"pair", "angular", "upper", "lower"});
        const Node pr = e.at("pair");
        if (pr.size() != 2) pr.fail("expected two species indices");
        const std::size_t i = parse_species_index(pr[0], P), j = parse_species_index(pr[1], P);
        if (given[i][j]) e.fail("pair defined twice");
        KernelBlock b = parse_kernel_block(e, def);
        given[i][j] = b;
        if (i != j) {
          // (j, i) sees the bounds with r and 1 - r exchanged
          KernelBlock s = b;
          s.upper = b.upper.swapped();
          s.lower = b.lower.swapped();
          given[j][i] = s;
        }
      }
  }
  std::vector<std::vector<KernelSpec>> specs(P, std::vector<KernelSpec>(P));
  for (std::size_t i = 0; i < P; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      KernelBlock b = given[i][j] ? *given[i][j] : def;
      if (!given[i][j] && i > j) {
        // the default is written for i <= j
        b.upper = def.upper.swapped();
        b.lower = def.lower.swapped();
      }
      specs[i][j] = KernelSpec{pair_params(mix, i, j), b.angular, b.upper, b.lower};
      const std::string where = n ? n->where() : std::string("/kernels");
      try {
        specs[i][j].validate();
      } catch (const Error& e) {
        throw ConfigError(where + ": pair (" + std::to_string(i + 1) + "," + std::to_string(j + 1) + "): " + e.what());
      }
    }
  return specs;
}

// one distribution per species, in species order
inline std::vector<TestDistribution> parse_distributions(const Node& n, const MixtureParams& mix) {
  std::vector<std::optional<TestDistribution>> by(mix.size());
  for (std::size_t a = 0; a < n.size(); ++a) {
    const Node e = n[a];
    TestDistribution d = parse_distribution(e, mix);
    if (by[d.species()]) e.fail("species " + std::to_string(d.species() + 1) + " given twice");
    by[d.species()] = d;
  }
  std::vector<TestDistribution> out;
  for (std::size_t i = 0; i < by.size(); ++i) {
    if (!by[i]) n.fail("no distribution for species " + std::to_string(i + 1));
    out.push_back(*by[i]);
  }
  return out;
}

inline SolverConfig parse_solver(const Node& n) {
  n.only({"dt", "steps", "particles", "majorant_inflation", "max_collision_probability", "max_overflow_fraction",
          "cadence", "grid", "p", "k", "moments", "burn_in", "bias_budget"});
  SolverConfig c;
  c.dt = n.number_or("dt", c.dt);
  c.n_steps = n.count_or("steps", c.n_steps);
  if (auto p = n.opt("particles")) {
    c.particles.clear();
    if (p->raw().is_array())
      for (std::size_t i = 0; i < p->size(); ++i) c.particles.push_back((*p)[i].count());
    else
      c.particles.push_back(p->count());
  }
  c.majorant_inflation = n.number_or("majorant_inflation", c.majorant_inflation);
  c.max_collision_probability = n.number_or("max_collision_probability", c.max_collision_probability);
  c.max_overflow_fraction = n.number_or("max_overflow_fraction", c.max_overflow_fraction);
  c.cadence = n.count_or("cadence", c.cadence);
  c.grid.nv = 8;
  c.grid.nI = 8;
  c.grid.clip_tolerance = 1e-3;
  if (auto g = n.opt("grid")) {
    g->only({"nv", "nI", "L", "I_max", "clip_tolerance"});
    c.grid.nv = static_cast<int>(g->count_or("nv", 8));
    c.grid.nI = static_cast<int>(g->count_or("nI", 8));
    c.grid.clip_tolerance = g->number_or("clip_tolerance", c.grid.clip_tolerance);
    if (g->has("L") || g->has("I_max")) {
      if (!(g->has("L") && g->has("I_max"))) g->fail("give both L and I_max, or neither");
      c.auto_grid = false;
      c.grid.L = g->at("L").number();
      c.grid.I_max = g->at("I_max").number();
    }
  }
  c.p = n.number_or("p", c.p);
  c.k = n.number_or("k", c.k);
  if (auto m = n.opt("moments")) c.moment_orders = m->numbers();
  c.burn_in_fraction = n.number_or("burn_in", c.burn_in_fraction);
  c.bias_budget = n.number_or("bias_budget", c.bias_budget);
  detail::located(n, [&] {
    c.validate();
    return 0;
  });
  return c;
}

inline ParticleState parse_state(const Node& n) {
  n.only({"v", "I"});
  ParticleState s;
  s.v = n.at("v").vec3();
  s.I = n.at("I").number();
  if (!(s.I >= 0.0)) n.at("I").fail("internal energy must be nonnegative");
  return s;
}

inline VerifyCase parse_case(const Node& n) {
  n.only({"label", "mixture", "pair", "p", "k", "angular", "upper", "lower", "f", "g", "chi", "fixed"});
  const MixtureParams mix = parse_mixture(n.at("mixture"));
  std::size_t i = 0, j = mix.size() > 1 ? 1 : 0;
  if (auto pr = n.opt("pair")) {
    if (pr->size() != 2) pr->fail("expected two species indices");
    i = parse_species_index((*pr)[0], mix.size());
    j = parse_species_index((*pr)[1], mix.size());
  }
  const KernelBlock kb = parse_kernel_block(n);
  VerifyCase vc{n.at("label").string(),
                mix,
                i,
                j,
                kb.angular,
                kb.upper,
                kb.lower,
                parse_distribution(n.at("f"), mix, i),
                parse_distribution(n.at("g"), mix, j),
                parse_distribution(n.at("chi"), mix, i)};
  vc.p = n.number_or("p", 2.0);
  if (!(vc.p > 1.0)) n.at("p").fail("p must exceed 1");
  if (auto k = n.opt("k")) vc.k_values = k->numbers();
  if (auto fx = n.opt("fixed")) vc.fixed = parse_state(*fx);
  if (!vc.chi.nonnegative()) n.at("chi").fail("chi must be nonnegative");
  detail::located(n, [&] {
    vc.spec().validate();
    return 0;
  });
  return vc;
}

struct VerifierBlock {
  std::vector<VerifyCase> cases;
  SuiteOptions options;
};

inline VerifierBlock parse_verifier(const std::optional<Node>& n) {
  VerifierBlock v;
  if (!n) {
    v.cases = curated_cases();
    return v;
  }
  n->only({"checks", "cases", "n_samples", "n_outer", "kernel_points", "probe_points"});
  v.options.n_samples = n->count_or("n_samples", v.options.n_samples);
  v.options.n_outer = n->count_or("n_outer", v.options.n_outer);
  v.options.kernel_points = n->count_or("kernel_points", v.options.kernel_points);
  v.options.n_probe = n->count_or("probe_points", v.options.n_probe);
  if (v.options.n_samples == 0 || v.options.n_outer == 0 || v.options.kernel_points == 0 || v.options.n_probe == 0)
    n->fail("sample sizes must be positive");
  if (auto c = n->opt("checks"))
    for (std::size_t a = 0; a < c->size(); ++a) {
      const std::string name = (*c)[a].string();
      if (!is_check_name(name)) (*c)[a].fail("unknown check '" + name + "'");
      v.options.checks.insert(name);
    }
  const auto cs = n->opt("cases");
  if (!cs || (cs->raw().is_string() && cs->string() == "curated")) {
    v.cases = curated_cases();
  } else if (cs->raw().is_array()) {
    for (std::size_t a = 0; a < cs->size(); ++a) v.cases.push_back(parse_case((*cs)[a]));
    if (v.cases.empty()) cs->fail("no cases");
  } else {
    cs->fail("expected \"curated\" or an array of cases");
  }
  return v;
}

struct ConstantsBlock {
  std::vector<double> q{2.0};
  double p = 2.0;
  double k = 0.0;
};

inline ConstantsBlock parse_constants_block(const std::optional<Node>& n) {
  ConstantsBlock c;
  if (!n) return c;
  n->only({"q", "p", "k"});
  if (auto q = n->opt("q")) {
    c.q = q->numbers();
    for (std::size_t a = 0; a < c.q.size(); ++a)
      if (!(c.q[a] >= 1.0)) (*q)[a].fail("q must be >= 1");
  }
  c.p = n->number_or("p", c.p);
  if (!(c.p > 1.0) || std::isinf(c.p)) n->at("p").fail("p must lie in (1, inf)");
  c.k = n->number_or("k", c.k);
  if (!(c.k >= 0.0)) n->at("k").fail("k must be >= 0");
  return c;
}

struct RunConfig {
  json source;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::optional<MixtureParams> mixture;
  std::vector<std::vector<KernelSpec>> specs;
  std::optional<std::vector<TestDistribution>> distributions;
  SolverConfig solver;
  bool has_solver = false;
  VerifierBlock verifier;
  ConstantsBlock constants;
  std::string digest;
};

// FNV-1a 64 of the canonical (key-sorted, compact) dump, as 16 hex digits
inline std::string config_digest(const json& j) {
  const std::uint64_t h = fnv1a(j.dump());
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline RunConfig parse_config(const json& j) {
  const Node root(j, "");
  if (!j.is_object()) root.fail("expected an object");
  root.only({"seed", "out", "mixture", "kernels", "distributions", "solver", "verifier", "constants"});
  RunConfig rc;
  rc.source = j;
  rc.seed = root.count_or("seed", rc.seed);
  if (auto o = root.opt("out")) rc.out_dir = o->string();
  if (auto m = root.opt("mixture")) {
    rc.mixture = parse_mixture(*m);
    rc.specs = parse_kernels(root.opt("kernels"), *rc.mixture);
    if (auto d = root.opt("distributions")) rc.distributions = parse_distributions(*d, *rc.mixture);
  } else if (root.has("kernels") || root.has("distributions")) {
    root.fail("kernels and distributions need a mixture block");
  }
  if (auto s = root.opt("solver")) {
    rc.solver = parse_solver(*s);
    rc.has_solver = true;
  }
  rc.solver.seed = rc.seed;
  rc.verifier = parse_verifier(root.opt("verifier"));
  rc.verifier.options.seed = rc.seed;
  rc.constants = parse_constants_block(root.opt("constants"));
  rc.digest = config_digest(j);
  return rc;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  try {
    return json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

// loads a file, applying an optional seed override before the digest
inline RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed = std::nullopt) {
  json j = load_json_file(path);
  if (seed) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
    j["seed"] = *seed;
  }
  try {
    return parse_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ":" + e.what());
  }
}

} // namespace polymix

#endif // POLYMIX_CONFIG_HPP
