#include "pmc/config.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace pmc {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(const std::string& where, int ln, const std::string& fld, const std::string& msg) {
  std::ostringstream os;
  os << where;
  if (ln > 0) os << ':' << ln;
  os << ": ";
  if (!fld.empty()) os << fld << ": ";
  os << msg;
  return os.str();
}

// every accepted key, per section
const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"params", {"N", "q", "m", "s", "gamma"}},
      {"density", {"kind", "amplitude", "exponent", "radius"}},
      {"radial", {"r_min", "r_max", "per_decade"}},
      {"grid", {"nodes", "half_width", "boundary", "tol", "max_iter"}},
      {"sweep",
       {"gronwall_sets", "sprofile_cases", "jets_per_N", "geometry_jets", "theorem1_instances",
        "haarala_instances", "nu_instances", "moser_cases", "riesz_instances"}},
      {"pipeline", {"nodes", "half_width", "amplitude", "radius", "n_list", "Rbar", "window"}},
      {"constants", {"gamma", "c_mono", "c_ball", "haarala_c"}},
      {"run", {"seed", "workers"}},
  };
  return s;
}

struct Reader {
  const KeyValueFile& kv;

  const KeyValueFile::Entry* find(const std::string& sec, const std::string& key) const {
    auto s = kv.sections.find(sec);
    if (s == kv.sections.end()) return nullptr;
    auto e = s->second.find(key);
    return e == s->second.end() ? nullptr : &e->second;
  }
  [[noreturn]] void fail(const std::string& sec, const std::string& key, int line,
                         const std::string& msg) const {
    throw ConfigError(kv.name, line, "[" + sec + "] " + key, msg);
  }

  bool real(const std::string& sec, const std::string& key, double& out) const {
    auto* e = find(sec, key);
    if (!e) return false;
    const std::string& t = e->value;
    double x = 0.0;
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(x))
      fail(sec, key, e->line, "expected a finite number, got '" + t + "'");
    out = x;
    return true;
  }
  template <class I>
  bool integer(const std::string& sec, const std::string& key, I& out) const {
    auto* e = find(sec, key);
    if (!e) return false;
    const std::string& t = e->value;
    I x{};
    auto r = std::from_chars(t.data(), t.data() + t.size(), x);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size())
      fail(sec, key, e->line, "expected an integer, got '" + t + "'");
    out = x;
    return true;
  }
  bool word(const std::string& sec, const std::string& key, std::string& out,
            const std::set<std::string>& allowed) const {
    auto* e = find(sec, key);
    if (!e) return false;
    if (!allowed.count(e->value)) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      fail(sec, key, e->line, "expected one of " + opts + ", got '" + e->value + "'");
    }
    out = e->value;
    return true;
  }
  int line(const std::string& sec, const std::string& key) const {
    auto* e = find(sec, key);
    return e ? e->line : 0;
  }
  void positive(const std::string& sec, const std::string& key, double x) const {
    if (!(x > 0.0)) fail(sec, key, line(sec, key), "must be positive");
  }
  void at_least(const std::string& sec, const std::string& key, long long x, long long lo) const {
    if (x < lo) fail(sec, key, line(sec, key), "must be at least " + std::to_string(lo));
  }
};

}  // namespace

ConfigError::ConfigError(const std::string& where, int ln, const std::string& fld,
                         const std::string& msg)
    : std::runtime_error(fmt(where, ln, fld, msg)), line(ln), field(fld) {}

KeyValueFile KeyValueFile::parse(const std::string& text, const std::string& name) {
  KeyValueFile kv;
  kv.name = name;
  std::istringstream is(text);
  std::string raw, section;
  int ln = 0;
  while (std::getline(is, raw)) {
    ++ln;
    std::string s = raw;
    auto c = s.find_first_of("#;");
    if (c != std::string::npos) s.erase(c);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(name, ln, "", "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!schema().count(section)) throw ConfigError(name, ln, "[" + section + "]", "unknown section");
      kv.sections[section];
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(name, ln, "", "expected key = value");
    std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
    if (section.empty()) throw ConfigError(name, ln, key, "key outside any section");
    std::string fld = "[" + section + "] " + key;
    if (key.empty()) throw ConfigError(name, ln, fld, "empty key");
    if (!schema().at(section).count(key)) throw ConfigError(name, ln, fld, "unknown key");
    if (val.empty()) throw ConfigError(name, ln, fld, "empty value");
    auto& slot = kv.sections[section];
    if (slot.count(key))
      throw ConfigError(name, ln, fld, "duplicate key (first set on line " +
                                           std::to_string(slot[key].line) + ")");
    slot[key] = {val, ln};
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError(path, 0, "", "cannot open file");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

RadialDensity DensitySpec::build(int N) const {
  (void)N;
  if (kind == "zero") return RadialDensity::zero();
  if (kind == "bump") return RadialDensity::bump(amplitude, radius);
  if (kind == "constant") return RadialDensity::constant(amplitude, radius);
  if (kind == "toy") return RadialDensity::power(1.0, 1.5, 1.0);
  return RadialDensity::power(amplitude, exponent, radius);
}

RunConfig RunConfig::from(const KeyValueFile& kv) {
  RunConfig c;
  c.source = kv.name;
  Reader r{kv};

  // params: N first, the rest default from N
  int N = 3;
  r.integer("params", "N", N);
  if (N < 3 || N > 12) r.fail("params", "N", r.line("params", "N"), "must lie in [3, 12]");
  c.params = ParamSet::defaults(N);
  r.real("params", "q", c.params.q);
  r.real("params", "m", c.params.m);
  r.real("params", "s", c.params.s);
  r.real("params", "gamma", c.params.gamma);
  try {
    c.params.validate();
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    std::string key = msg.substr(0, msg.find(':'));
    int ln = r.line("params", key);
    if (key == "beta" || key == "alpha_holder") ln = r.line("params", "q");
    throw ConfigError(kv.name, ln, "[params] " + key, msg.substr(msg.find(':') + 2));
  }

  auto& d = c.density;
  r.word("density", "kind", d.kind, {"zero", "bump", "constant", "power", "toy"});
  r.real("density", "amplitude", d.amplitude);
  r.real("density", "exponent", d.exponent);
  r.real("density", "radius", d.radius);
  r.positive("density", "radius", d.radius);
  if (d.kind == "power" && !(d.exponent >= 0.0 && d.exponent < N))
    r.fail("density", "exponent", r.line("density", "exponent"), "must lie in [0, N)");

  auto& rad = c.radial;
  r.real("radial", "r_min", rad.r_min);
  r.real("radial", "r_max", rad.r_max);
  r.integer("radial", "per_decade", rad.per_decade);
  r.positive("radial", "r_min", rad.r_min);
  if (!(rad.r_max > rad.r_min)) r.fail("radial", "r_max", r.line("radial", "r_max"), "must exceed r_min");
  r.at_least("radial", "per_decade", rad.per_decade, 4);

  auto& g = c.grid;
  r.integer("grid", "nodes", g.nodes);
  r.real("grid", "half_width", g.half_width);
  r.word("grid", "boundary", g.boundary, {"zero", "oracle"});
  r.real("grid", "tol", g.tol);
  r.integer("grid", "max_iter", g.max_iter);
  r.at_least("grid", "nodes", g.nodes, 5);
  if (g.nodes % 2 == 0) r.fail("grid", "nodes", r.line("grid", "nodes"), "must be odd");
  if (g.half_width < 0.0) r.fail("grid", "half_width", r.line("grid", "half_width"), "must be >= 0");
  r.positive("grid", "tol", g.tol);
  r.at_least("grid", "max_iter", g.max_iter, 1);

  auto& sw = c.sweep;
  std::pair<const char*, int*> counts[] = {
      {"gronwall_sets", &sw.gronwall_sets},   {"sprofile_cases", &sw.sprofile_cases},
      {"jets_per_N", &sw.jets_per_N},         {"geometry_jets", &sw.geometry_jets},
      {"theorem1_instances", &sw.theorem1_instances}, {"haarala_instances", &sw.haarala_instances},
      {"nu_instances", &sw.nu_instances},     {"moser_cases", &sw.moser_cases},
      {"riesz_instances", &sw.riesz_instances}};
  for (auto [k, p] : counts) {
    r.integer("sweep", k, *p);
    r.at_least("sweep", k, *p, 0);
  }

  auto& pl = c.pipeline;
  r.integer("pipeline", "nodes", pl.nodes);
  r.real("pipeline", "half_width", pl.half_width);
  r.real("pipeline", "amplitude", pl.amplitude);
  r.real("pipeline", "radius", pl.radius);
  r.real("pipeline", "Rbar", pl.Rbar);
  r.real("pipeline", "window", pl.window);
  r.at_least("pipeline", "nodes", pl.nodes, 5);
  if (pl.nodes % 2 == 0) r.fail("pipeline", "nodes", r.line("pipeline", "nodes"), "must be odd");
  r.positive("pipeline", "half_width", pl.half_width);
  r.positive("pipeline", "radius", pl.radius);
  r.positive("pipeline", "Rbar", pl.Rbar);
  r.positive("pipeline", "window", pl.window);
  if (auto* e = r.find("pipeline", "n_list")) {
    pl.n_list.clear();
    std::istringstream ls(e->value);
    std::string tok;
    while (std::getline(ls, tok, ',')) {
      tok = trim(tok);
      int x = 0;
      auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
      if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || x < 1)
        r.fail("pipeline", "n_list", e->line, "expected comma-separated positive integers");
      if (!pl.n_list.empty() && x <= pl.n_list.back())
        r.fail("pipeline", "n_list", e->line, "must be strictly increasing");
      pl.n_list.push_back(x);
    }
  }

  c.constants = DerivedConstants::shipped(N);
  r.real("constants", "gamma", c.constants.gamma);
  r.real("constants", "c_mono", c.constants.c_mono);
  r.real("constants", "c_ball", c.constants.c_ball);
  double hc = 0.0;
  if (r.real("constants", "haarala_c", hc)) c.constants.haarala_c = hc;
  for (const char* k : {"gamma", "c_mono", "c_ball"}) {
    double x = 0.0;
    if (r.real("constants", k, x)) r.positive("constants", k, x);
  }

  r.integer("run", "seed", c.seed);
  r.integer("run", "workers", c.workers);
  r.at_least("run", "workers", c.workers, 1);
  return c;
}

RunConfig RunConfig::load(const std::string& path) { return from(KeyValueFile::load(path)); }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["params"] = {{"N", params.N}, {"q", params.q}, {"m", params.m}, {"s", params.s}, {"gamma", params.gamma}};
  j["density"] = {{"kind", density.kind}, {"amplitude", density.amplitude},
                  {"exponent", density.exponent}, {"radius", density.radius}};
  j["radial"] = {{"r_min", radial.r_min}, {"r_max", radial.r_max}, {"per_decade", radial.per_decade}};
  j["grid"] = {{"nodes", grid.nodes}, {"half_width", grid.half_width}, {"boundary", grid.boundary},
               {"tol", grid.tol}, {"max_iter", grid.max_iter}};
  j["sweep"] = {{"gronwall_sets", sweep.gronwall_sets}, {"sprofile_cases", sweep.sprofile_cases},
                {"jets_per_N", sweep.jets_per_N}, {"geometry_jets", sweep.geometry_jets},
                {"theorem1_instances", sweep.theorem1_instances},
                {"haarala_instances", sweep.haarala_instances}, {"nu_instances", sweep.nu_instances},
                {"moser_cases", sweep.moser_cases}, {"riesz_instances", sweep.riesz_instances}};
  j["pipeline"] = {{"nodes", pipeline.nodes}, {"half_width", pipeline.half_width},
                   {"amplitude", pipeline.amplitude}, {"radius", pipeline.radius},
                   {"n_list", pipeline.n_list}, {"Rbar", pipeline.Rbar}, {"window", pipeline.window}};
  j["constants"] = constants.to_json();
  j["seed"] = seed;
  j["workers"] = workers;
  return j;
}

}  // namespace pmc
