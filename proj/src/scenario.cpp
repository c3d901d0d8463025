#include "btlab/scenario.hpp"

#include "btlab/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <set>

namespace btlab {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const ScenarioText& t) : text_(t) {}

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(text_.source + ":" + std::to_string(line) + ": " + msg);
  }

  double number(const ScenarioText::Entry& e, const std::string& key) const {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc{} || p != end || e.value.empty()) fail(e.line, key + ": expected a number, got '" + e.value + "'");
    return v;
  }

  int integer(const ScenarioText::Entry& e, const std::string& key) const {
    int v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc{} || p != end || e.value.empty()) fail(e.line, key + ": expected an integer, got '" + e.value + "'");
    return v;
  }

  std::vector<double> numbers(const ScenarioText::Entry& e, const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split(e.value, ',')) out.push_back(number({part, e.line}, key));
    return out;
  }

  std::vector<int> integers(const ScenarioText::Entry& e, const std::string& key) const {
    std::vector<int> out;
    for (const auto& part : split(e.value, ',')) out.push_back(integer({part, e.line}, key));
    return out;
  }

  /// Runs `build`, re-anchoring any expression error at the entry's line.
  template <class F>
  auto compile(const ScenarioText::Entry& e, const std::string& key, F&& build) const {
    try {
      return build(e.value);
    } catch (const ConfigError& err) {
      fail(e.line, key + ": " + err.what());
    } catch (const ParameterError& err) {
      fail(e.line, key + ": " + err.what());
    }
  }

 private:
  const ScenarioText& text_;
};

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> k{
      {"structure", {"name", "m", "n", "phi", "phi1", "phi2", "phi3", "R", "T", "W_margin"}},
      {"gevrey", {"s", "h"}},
      {"chi", {"plateau", "support"}},
      {"u", {"expr", "density"}},
      {"point", {"location", "order", "weight", "profile"}},
      {"run", {"mode", "sweeps", "tau", "degrees", "output_dir", "grid", "order_cap"}},
      {"poincare", {"p", "q", "grid"}},
      {"trace",
       {"t", "phi_s", "phi_inner", "phi_outer", "psi_s", "psi_inner", "psi_outer", "outer", "cutoff_s", "alt_outer",
        "alt_cutoff_s", "grid", "padding", "order_cap"}},
      {"tolerance", {"slope_max", "e_final", "poincare", "trace"}},
  };
  return k;
}

RunMode parse_mode(const std::string& v, const Reader& r, int line) {
  static const std::map<std::string, RunMode> modes{
      {"validate", RunMode::Validate}, {"g-sweep", RunMode::GSweep}, {"r-sweep", RunMode::RSweep},
      {"e-sweep", RunMode::ESweep},    {"poly", RunMode::Poly},      {"poincare", RunMode::Poincare},
      {"trace", RunMode::Trace},       {"all", RunMode::All}};
  auto it = modes.find(v);
  if (it == modes.end()) r.fail(line, "mode: unknown mode '" + v + "'");
  return it->second;
}

// Keys of the form f[1,2|3] or primitive[|1].
std::optional<std::pair<std::string, FormKey>> form_key(const std::string& key) {
  const auto open = key.find('[');
  if (open == std::string::npos || key.back() != ']') return std::nullopt;
  const std::string head = key.substr(0, open);
  const std::string body = key.substr(open + 1, key.size() - open - 2);
  const auto bar = body.find('|');
  if (bar == std::string::npos) throw ConfigError("form key needs 'I|J'");
  auto indices = [](const std::string& s) {
    std::vector<int> v;
    if (trim(s).empty()) return v;
    for (const auto& p : split(s, ',')) {
      int x = 0;
      auto [ptr, ec] = std::from_chars(p.data(), p.data() + p.size(), x);
      if (ec != std::errc{} || ptr != p.data() + p.size()) throw ConfigError("bad index '" + p + "'");
      v.push_back(x);
    }
    return v;
  };
  return std::pair{head, FormKey{IndexSet(indices(body.substr(0, bar))), IndexSet(indices(body.substr(bar + 1)))}};
}

}  // namespace

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Validate: return "validate";
    case RunMode::GSweep: return "g-sweep";
    case RunMode::RSweep: return "r-sweep";
    case RunMode::ESweep: return "e-sweep";
    case RunMode::Poly: return "poly";
    case RunMode::Poincare: return "poincare";
    case RunMode::Trace: return "trace";
    case RunMode::All: return "all";
  }
  return "?";
}

ScenarioText ScenarioText::parse(std::istream& in, std::string source) {
  ScenarioText t;
  t.source = std::move(source);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(t.source + ":" + std::to_string(line) + ": unterminated section header");
      t.sections.push_back({trim(s.substr(1, s.size() - 2)), line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(t.source + ":" + std::to_string(line) + ": expected 'key = value'");
    if (t.sections.empty()) throw ConfigError(t.source + ":" + std::to_string(line) + ": key outside any section");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError(t.source + ":" + std::to_string(line) + ": empty key");
    auto& keys = t.sections.back().keys;
    if (keys.count(key)) throw ConfigError(t.source + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
    keys[key] = {trim(s.substr(eq + 1)), line};
  }
  return t;
}

ScenarioText ScenarioText::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open scenario file");
  return parse(in, path);
}

Scenario build_scenario(const ScenarioText& text) {
  const Reader r(text);
  Scenario sc;
  sc.source = text.source;

  const ScenarioText::Section* structure = nullptr;
  const ScenarioText::Section* u_section = nullptr;
  std::vector<const ScenarioText::Section*> points;
  std::set<std::string> seen;
  for (const auto& sec : text.sections) {
    const auto known = known_keys().find(sec.name);
    if (known == known_keys().end()) r.fail(sec.line, "unknown section [" + sec.name + "]");
    if (sec.name != "point" && !seen.insert(sec.name).second) r.fail(sec.line, "duplicate section [" + sec.name + "]");
    for (const auto& [k, e] : sec.keys) {
      const bool form = sec.name == "poincare" && k.find('[') != std::string::npos;
      if (!form && !known->second.count(k)) r.fail(e.line, "unknown key '" + k + "' in [" + sec.name + "]");
    }
    if (sec.name == "structure") structure = &sec;
    if (sec.name == "u") u_section = &sec;
    if (sec.name == "point") points.push_back(&sec);
  }
  if (!structure) throw ConfigError(text.source + ": missing [structure] section");

  auto get = [](const ScenarioText::Section* s, const std::string& k) -> const ScenarioText::Entry* {
    if (!s) return nullptr;
    auto it = s->keys.find(k);
    return it == s->keys.end() ? nullptr : &it->second;
  };
  auto section = [&](const std::string& name) -> const ScenarioText::Section* {
    for (const auto& s : text.sections)
      if (s.name == name) return &s;
    return nullptr;
  };

  // Structure.
  if (const auto* e = get(structure, "name")) {
    sc.structure_name = e->value;
    sc.structure = r.compile(*e, "name", [](const std::string& v) { return builtin_structure(v); });
  } else {
    const auto* em = get(structure, "m");
    const auto* en = get(structure, "n");
    if (!em || !en) r.fail(structure->line, "[structure] needs 'name' or 'm', 'n' and phi");
    const int m = r.integer(*em, "m"), n = r.integer(*en, "n");
    if (m < 1 || m > 3 || n < 1) r.fail(em->line, "m must lie in 1..3 and n >= 1");
    std::vector<std::string> phi;
    for (int k = 1; k <= m; ++k) {
      const auto* e = get(structure, m == 1 && get(structure, "phi") ? "phi" : "phi" + std::to_string(k));
      if (!e) r.fail(structure->line, "missing phi" + std::to_string(k));
      phi.push_back(e->value);
    }
    sc.structure_name = "custom";
    const int line = get(structure, "m")->line;
    try {
      sc.structure = structure_from_expressions(m, n, phi, "custom");
    } catch (const ConfigError& err) {
      r.fail(line, std::string("phi: ") + err.what());
    } catch (const ParameterError& err) {
      r.fail(line, std::string("phi: ") + err.what());
    }
  }
  if (const auto* e = get(structure, "R")) sc.radii.R = r.number(*e, "R");
  if (const auto* e = get(structure, "W_margin")) sc.radii.W_margin = r.number(*e, "W_margin");
  if (const auto* e = get(structure, "T")) {
    if (e->value == "auto") {
      sc.T_auto = true;
    } else {
      sc.T_auto = false;
      sc.radii.T = r.number(*e, "T");
    }
  }
  if (!(sc.radii.R > 0.0)) r.fail(get(structure, "R") ? get(structure, "R")->line : structure->line, "R must be positive");
  if (!sc.T_auto) sc.radii.T = std::min(sc.radii.T, sc.radii.R);

  // Gevrey and cutoff.
  const auto* gev = section("gevrey");
  if (const auto* e = get(gev, "s")) sc.s = r.number(*e, "s");
  if (const auto* e = get(gev, "h")) sc.h = r.number(*e, "h");
  if (!(sc.s > 1.0)) r.fail(get(gev, "s")->line, "s must exceed 1");
  const auto* chi = section("chi");
  if (const auto* e = get(chi, "plateau")) sc.chi_plateau = r.number(*e, "plateau");
  if (const auto* e = get(chi, "support")) sc.chi_support = r.number(*e, "support");

  // Data.
  const StructureMap& S = sc.structure;
  if (const auto* e = get(u_section, "expr")) {
    sc.u_text = e->value;
    sc.u = r.compile(*e, "expr", [&](const std::string& v) { return structure_function(S, v); });
  }
  if (const auto* e = get(u_section, "density")) {
    sc.distribution.density = r.compile(*e, "density", [&](const std::string& v) { return structure_function(S, v); });
    sc.has_distribution = true;
  }
  Expression::Symbols tsym;
  if (S.n() == 1) tsym["t"] = 0;
  for (int j = 0; j < S.n(); ++j) tsym["t" + std::to_string(j + 1)] = j;
  for (const auto* p : points) {
    PointFunctional pf;
    const auto* loc = get(p, "location");
    if (!loc) r.fail(p->line, "[point] needs 'location'");
    pf.location = r.numbers(*loc, "location");
    if (pf.location.size() != static_cast<std::size_t>(S.m())) r.fail(loc->line, "location: expected m coordinates");
    pf.order = MultiIndex(static_cast<std::size_t>(S.m()));
    if (const auto* e = get(p, "order")) {
      const auto o = r.integers(*e, "order");
      if (o.size() != static_cast<std::size_t>(S.m()) || std::any_of(o.begin(), o.end(), [](int v) { return v < 0; }))
        r.fail(e->line, "order: expected m nonnegative integers");
      pf.order = MultiIndex(o);
    }
    if (const auto* e = get(p, "weight"))
      pf.weight = r.compile(*e, "weight", [](const std::string& v) { return Expression::parse(v, {}).eval(std::span<const Complex>{}); });
    const auto* prof = get(p, "profile");
    pf.t_profile = prof ? r.compile(*prof, "profile",
                                    [&](const std::string& v) {
                                      return expression_function(v, tsym, static_cast<std::size_t>(S.n()));
                                    })
                        : SampledFunction::constant(static_cast<std::size_t>(S.n()), 1.0);
    sc.distribution.points.push_back(std::move(pf));
    sc.has_distribution = true;
  }

  // Run settings.
  const auto* run = section("run");
  if (const auto* e = get(run, "mode")) sc.mode = parse_mode(e->value, r, e->line);
  if (const auto* e = get(run, "sweeps")) {
    sc.sweeps.clear();
    for (const auto& part : split(e->value, ',')) {
      const RunMode m = parse_mode(part, r, e->line);
      if (m != RunMode::GSweep && m != RunMode::RSweep && m != RunMode::ESweep)
        r.fail(e->line, "sweeps: '" + part + "' is not a sweep mode");
      sc.sweeps.push_back(m);
    }
  }
  if (const auto* e = get(run, "tau")) sc.taus = r.numbers(*e, "tau");
  if (const auto* e = get(run, "degrees")) sc.degrees = r.integers(*e, "degrees");
  if (const auto* e = get(run, "output_dir")) sc.output_dir = e->value;
  if (const auto* e = get(run, "grid")) sc.grid = r.integer(*e, "grid");
  if (const auto* e = get(run, "order_cap")) sc.order_cap = r.integer(*e, "order_cap");
  for (double t : sc.taus)
    if (!(t > 0.0)) r.fail(get(run, "tau")->line, "tau: values must be positive");
  if (sc.grid < 2) r.fail(get(run, "grid")->line, "grid: need at least 2 points per axis");
  if (sc.order_cap < 0) r.fail(get(run, "order_cap")->line, "order_cap: must be nonnegative");

  // Poincaré form.
  if (const auto* pc = section("poincare")) {
    if (const auto* e = get(pc, "p")) sc.poincare.p = r.integer(*e, "p");
    if (const auto* e = get(pc, "q")) sc.poincare.q = r.integer(*e, "q");
    if (const auto* e = get(pc, "grid")) sc.poincare.grid = r.integer(*e, "grid");
    for (const auto& [k, e] : pc->keys) {
      if (k.find('[') == std::string::npos) continue;
      std::optional<std::pair<std::string, FormKey>> fk;
      try {
        fk = form_key(k);
      } catch (const std::exception& err) {
        r.fail(e.line, k + ": " + err.what());
      }
      if (!fk || (fk->first != "f" && fk->first != "primitive"))
        r.fail(e.line, "unknown key '" + k + "' in [poincare]; use f[I|J] or primitive[I|J]");
      (fk->first == "f" ? sc.poincare.coefficients : sc.poincare.primitive)[fk->second] = e.value;
    }
    if (!sc.poincare.coefficients.empty() && !sc.poincare.primitive.empty())
      r.fail(pc->line, "[poincare] takes either f[...] or primitive[...] keys, not both");
  }

  // Trace.
  if (const auto* tr = section("trace")) {
    auto& T = sc.trace;
    if (const auto* e = get(tr, "t")) T.t_grid = r.numbers(*e, "t");
    const std::pair<const char*, double*> reals[] = {
        {"phi_s", &T.phi_s},   {"phi_inner", &T.phi_inner}, {"phi_outer", &T.phi_outer}, {"psi_s", &T.psi_s},
        {"psi_inner", &T.psi_inner}, {"psi_outer", &T.psi_outer}, {"outer", &T.outer}, {"cutoff_s", &T.cutoff_s},
        {"alt_outer", &T.alt_outer}, {"alt_cutoff_s", &T.alt_cutoff_s}};
    for (const auto& [k, dst] : reals)
      if (const auto* e = get(tr, k)) *dst = r.number(*e, k);
    const std::pair<const char*, int*> ints[] = {{"grid", &T.grid}, {"padding", &T.padding}, {"order_cap", &T.order_cap}};
    for (const auto& [k, dst] : ints)
      if (const auto* e = get(tr, k)) *dst = r.integer(*e, k);
  }

  if (const auto* tl = section("tolerance")) {
    const std::pair<const char*, double*> reals[] = {{"slope_max", &sc.tol.slope_max},
                                                     {"e_final", &sc.tol.e_final},
                                                     {"poincare", &sc.tol.poincare},
                                                     {"trace", &sc.tol.trace}};
    for (const auto& [k, dst] : reals)
      if (const auto* e = get(tl, k)) *dst = r.number(*e, k);
  }

  sc.mode_line = get(run, "mode") ? get(run, "mode")->line : structure->line;
  require_inputs(sc, sc.mode);
  return sc;
}

Scenario load_scenario(const std::string& path) { return build_scenario(ScenarioText::load(path)); }

void require_inputs(const Scenario& sc, RunMode mode) {
  auto fail = [&](const std::string& msg) {
    throw ConfigError(sc.source + ":" + std::to_string(sc.mode_line) + ": mode " + to_string(mode) + " " + msg);
  };
  const bool sweep = mode == RunMode::GSweep || mode == RunMode::RSweep || mode == RunMode::ESweep;
  if (sweep && !sc.u) fail("needs [u] expr");
  if ((sweep || mode == RunMode::Poly || mode == RunMode::Poincare) && sc.taus.empty()) fail("needs [run] tau");
  if (mode == RunMode::Poly && !sc.u && !sc.has_distribution) fail("needs [u] data");
  if (mode == RunMode::Trace && !sc.has_distribution) fail("needs [u] density or [point] sections");
  if (mode == RunMode::Poincare && sc.poincare.coefficients.empty() && sc.poincare.primitive.empty())
    fail("needs f[I|J] or primitive[I|J] keys in [poincare]");
}

}  // namespace btlab
