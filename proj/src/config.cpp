#include "tve/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace tve {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& source, int line, const std::string& msg) {
  throw Error(ErrorCode::ConfigParseError, source + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// strip a trailing comment that is not inside a string
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::string t;
  for (char c : s)
    if (c != '_') t += c;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end && *end == '\0' && std::isfinite(out);
}

std::vector<std::string> split_array(const std::string& body, const std::string& source, int line) {
  std::vector<std::string> items;
  std::string cur;
  bool in_str = false;
  for (char c : body) {
    if (c == '"') in_str = !in_str;
    if (c == ',' && !in_str) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (in_str) fail(source, line, "unterminated string in array");
  if (!trim(cur).empty()) items.push_back(trim(cur));
  for (const auto& it : items)
    if (it.empty()) fail(source, line, "empty array element");
  return items;
}

bool unquote(const std::string& s, std::string& out) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return false;
  out = s.substr(1, s.size() - 2);
  return out.find('"') == std::string::npos;
}

TomlValue parse_value(const std::string& raw, const std::string& source, int line) {
  TomlValue v;
  v.line = line;
  double d;
  std::string str;
  if (raw == "true" || raw == "false") {
    v.v = raw == "true";
  } else if (unquote(raw, str)) {
    v.v = str;
  } else if (raw.front() == '[') {
    if (raw.back() != ']') fail(source, line, "arrays must be written on one line");
    const auto items = split_array(raw.substr(1, raw.size() - 2), source, line);
    if (!items.empty() && items[0].front() == '"') {
      std::vector<std::string> out;
      for (const auto& it : items) {
        if (!unquote(it, str)) fail(source, line, "mixed or malformed string array");
        out.push_back(str);
      }
      v.v = out;
    } else {
      std::vector<double> out;
      for (const auto& it : items) {
        if (!parse_number(it, d)) fail(source, line, "not a number: " + it);
        out.push_back(d);
      }
      v.v = out;
    }
  } else if (parse_number(raw, d)) {
    v.v = d;
  } else {
    fail(source, line, "cannot parse value '" + raw + "'");
  }
  return v;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::string fmt_list(const std::vector<double>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + "]";
}

std::string fmt_list(const std::vector<std::string>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + quote(v[i]);
  return s + "]";
}

// Typed reader over one table; every key must be consumed.
class Reader {
 public:
  Reader(const TomlDoc& doc, const std::string& table, const std::string& source)
      : source_(source), table_(table) {
    auto it = doc.find(table);
    if (it != doc.end()) t_ = &it->second;
  }

  int line(const std::string& key) const {
    if (!t_) return 0;
    auto it = t_->find(key);
    return it == t_->end() ? 0 : it->second.line;
  }

  void num(const std::string& key, double& out) { get<double>(key, out, "a number"); }
  void integer(const std::string& key, int& out) {
    double d = out;
    num(key, d);
    if (d != std::floor(d) || std::abs(d) > 1e9) fail(source_, line(key), key + " must be an integer");
    out = static_cast<int>(d);
  }
  void boolean(const std::string& key, bool& out) { get<bool>(key, out, "true or false"); }
  void str(const std::string& key, std::string& out) { get<std::string>(key, out, "a string"); }
  void nums(const std::string& key, std::vector<double>& out) { get<std::vector<double>>(key, out, "a number array"); }
  void strs(const std::string& key, std::vector<std::string>& out) {
    if (!t_) return;
    auto it = t_->find(key);
    if (it != t_->end() && std::holds_alternative<std::vector<double>>(it->second.v) &&
        std::get<std::vector<double>>(it->second.v).empty()) {
      seen_.insert(key);
      out.clear();
      return;
    }
    get<std::vector<std::string>>(key, out, "a string array");
  }
  void vec2(const std::string& key, Vec2& out) {
    std::vector<double> v{out[0], out[1]};
    nums(key, v);
    if (v.size() != 2) fail(source_, line(key), key + " must have two components");
    out = Vec2(v[0], v[1]);
  }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_)
      if (!seen_.count(k)) fail(source_, v.line, "unknown key '" + k + "' in [" + table_ + "]");
  }

 private:
  template <class T>
  void get(const std::string& key, T& out, const char* what) {
    if (!t_) return;
    auto it = t_->find(key);
    if (it == t_->end()) return;
    seen_.insert(key);
    if (!std::holds_alternative<T>(it->second.v)) fail(source_, it->second.line, key + " must be " + what);
    out = std::get<T>(it->second.v);
  }

  std::string source_, table_;
  const TomlTable* t_ = nullptr;
  std::set<std::string> seen_;
};

std::string resolve_path(const std::string& p, const fs::path& base) {
  if (p.empty()) return p;
  fs::path q(p);
  if (q.is_relative()) q = base / q;
  return q.lexically_normal().string();
}

bool is_preset(const std::string& s, std::initializer_list<const char*> names) {
  for (const char* n : names)
    if (s == n) return true;
  return false;
}

// product of normalized distances to the Dirichlet edges; vanishes there
double dirichlet_cutoff(const Grid& g, const Vec2& x) {
  double c = 1.0;
  for (Edge e : g.dirichlet_edges()) {
    switch (e) {
      case Edge::Left: c *= x[0] / g.Lx(); break;
      case Edge::Right: c *= (g.Lx() - x[0]) / g.Lx(); break;
      case Edge::Bottom: c *= x[1] / g.Ly(); break;
      case Edge::Top: c *= (g.Ly() - x[1]) / g.Ly(); break;
    }
  }
  return c;
}

bool on_edge(double Lx, double Ly, const Vec2& x, Edge e) {
  const double tol = 1e-12 * std::max(Lx, Ly);
  switch (e) {
    case Edge::Left: return std::abs(x[0]) <= tol;
    case Edge::Right: return std::abs(x[0] - Lx) <= tol;
    case Edge::Bottom: return std::abs(x[1]) <= tol;
    case Edge::Top: return std::abs(x[1] - Ly) <= tol;
  }
  return false;
}

TimeProfile make_profile(const std::string& name, double duration, const std::string& table) {
  if (!table.empty()) return TimeProfile::from_csv(table);
  return TimeProfile::parse(name, duration);
}

}  // namespace

TomlDoc parse_toml(const std::string& text, const std::string& source) {
  TomlDoc doc;
  std::string table;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::set<std::string> opened;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(source, lineno, "malformed table header");
      table = trim(line.substr(1, line.size() - 2));
      if (table.empty()) fail(source, lineno, "empty table name");
      if (!opened.insert(table).second) fail(source, lineno, "duplicate table [" + table + "]");
      doc[table];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(source, lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) fail(source, lineno, "expected key = value");
    if (table.empty()) fail(source, lineno, "key outside of a table");
    auto& t = doc[table];
    if (t.count(key)) fail(source, lineno, "duplicate key '" + key + "'");
    t[key] = parse_value(val, source, lineno);
  }
  return doc;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParseError, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

RunConfig RunConfig::parse(const std::string& text, const std::string& source) {
  const TomlDoc doc = parse_toml(text, source);
  static const std::set<std::string> tables{"material", "grid",   "scheme", "loads",
                                            "initial",  "study",  "output", "linear"};
  for (const auto& [name, t] : doc)
    if (!tables.count(name)) {
      int line = 0;
      // report the first key line of the stray table, or the file
      if (!t.empty()) line = t.begin()->second.line;
      fail(source, line, "unknown table [" + name + "]");
    }

  RunConfig c;
  c.source = source;
  const fs::path base = fs::path(source).has_parent_path() ? fs::path(source).parent_path() : fs::path(".");

  Reader mat(doc, "material", source);
  MaterialParams& m = c.material;
  mat.num("a1", m.a1);
  mat.num("a2", m.a2);
  mat.num("a3", m.a3);
  mat.num("q", m.q);
  mat.num("cH", m.cH);
  mat.num("p", m.p);
  mat.num("cV", m.cV);
  mat.num("beta", m.beta);
  mat.num("eta", m.eta);
  mat.num("k0", m.k0);
  mat.num("c0", m.c0);
  mat.num("C0", m.C0);
  mat.num("max_strain", m.max_strain);
  mat.num("max_theta", m.max_theta);
  mat.finish();

  Reader gr(doc, "grid", source);
  gr.integer("nx", c.nx);
  gr.integer("ny", c.ny);
  gr.num("Lx", c.Lx);
  gr.num("Ly", c.Ly);
  gr.strs("dirichlet_edges", c.dirichlet_edges);
  gr.finish();
  auto check_edges = [&](Reader& r, const std::string& key, const std::vector<std::string>& edges) {
    for (const auto& e : edges) {
      try {
        parse_edge(e);
      } catch (const Error& err) {
        fail(source, r.line(key), err.what());
      }
    }
  };
  check_edges(gr, "dirichlet_edges", c.dirichlet_edges);
  if (c.nx < 3 || c.ny < 3)
    throw Error(ErrorCode::GridTooSmall, source + ":" + std::to_string(gr.line(c.nx < 3 ? "nx" : "ny")) +
                                             ": need nx, ny >= 3");
  if (!(c.Lx > 0 && c.Ly > 0)) fail(source, gr.line(c.Lx > 0 ? "Ly" : "Lx"), "domain lengths must be positive");
  if (c.dirichlet_edges.empty() || c.dirichlet_edges.size() >= 4)
    fail(source, gr.line("dirichlet_edges"), "both the Dirichlet and the Neumann part must be nonempty");

  Reader sc(doc, "scheme", source);
  SchemeConfig& s = c.scheme;
  sc.num("eps", s.eps);
  sc.num("alpha", s.alpha);
  sc.num("tau", s.tau);
  sc.num("T", s.T);
  sc.num("kappa", s.kappa);
  sc.num("tol_mech", s.tol_mech);
  sc.num("tol_therm", s.tol_therm);
  sc.integer("max_iter_mech", s.max_iter_mech);
  sc.integer("max_iter_therm", s.max_iter_therm);
  std::string reg = "auto";
  sc.str("use_regularized_xi", reg);
  sc.finish();
  if (reg == "true") s.regularize_xi = true;
  else if (reg == "false") s.regularize_xi = false;
  else if (reg != "auto") fail(source, sc.line("use_regularized_xi"), "use_regularized_xi must be auto, true or false");
  try {
    s.validate();
    s.num_steps();
  } catch (const Error& e) {
    const char* key = "eps";
    const std::string msg = e.what();
    if (msg.find("alpha") != std::string::npos) key = "alpha";
    else if (msg.find("tau") != std::string::npos) key = "tau";
    else if (msg.find("kappa") != std::string::npos) key = "kappa";
    else if (msg.find("toler") != std::string::npos) key = "tol_mech";
    throw Error(e.code(), source + ":" + std::to_string(sc.line(key)) + ": " + msg);
  }

  Reader ld(doc, "loads", source);
  auto read_vec_load = [&](const std::string& prefix, VectorLoadSpec& spec) {
    ld.vec2(prefix, spec.amplitude);
    ld.str(prefix + "_profile", spec.profile);
    ld.num(prefix + "_duration", spec.duration);
    ld.str(prefix + "_table", spec.table);
    spec.table = resolve_path(spec.table, base);
    try {
      make_profile(spec.profile, spec.duration, spec.table);
    } catch (const Error& e) {
      fail(source, ld.line(spec.table.empty() ? prefix + "_profile" : prefix + "_table"), e.what());
    }
  };
  read_vec_load("body_force", c.body_force);
  ld.str("body_force_shape", c.body_force_shape);
  ld.num("moving_width", c.moving_width);
  ld.num("moving_speed", c.moving_speed);
  read_vec_load("traction", c.traction);
  ld.strs("traction_edges", c.traction_edges);
  ld.num("theta_flat", c.theta_flat);
  ld.str("theta_flat_profile", c.theta_flat_profile);
  ld.num("theta_flat_duration", c.theta_flat_duration);
  ld.str("theta_flat_table", c.theta_flat_table);
  ld.strs("theta_flat_edges", c.theta_flat_edges);
  ld.finish();
  c.theta_flat_table = resolve_path(c.theta_flat_table, base);
  check_edges(ld, "traction_edges", c.traction_edges);
  check_edges(ld, "theta_flat_edges", c.theta_flat_edges);
  if (c.body_force_shape != "uniform" && c.body_force_shape != "moving")
    fail(source, ld.line("body_force_shape"), "body_force_shape must be uniform or moving");
  if (!(c.moving_width > 0)) fail(source, ld.line("moving_width"), "moving_width must be positive");
  if (!(c.theta_flat >= 0)) fail(source, ld.line("theta_flat"), "boundary temperature must be nonnegative");
  try {
    const TimeProfile tp = make_profile(c.theta_flat_profile, c.theta_flat_duration, c.theta_flat_table);
    for (const auto& [t, v] : tp.table)
      if (v < 0) fail(source, ld.line("theta_flat_table"), "boundary temperature table must be nonnegative");
  } catch (const Error& e) {
    if (std::string(e.what()).rfind(source, 0) == 0) throw;
    fail(source, ld.line(c.theta_flat_table.empty() ? "theta_flat_profile" : "theta_flat_table"), e.what());
  }
  if (c.theta_flat_profile == "sinusoid" && c.theta_flat_table.empty())
    fail(source, ld.line("theta_flat_profile"), "sinusoid changes sign; not allowed for the boundary temperature");

  Reader ini(doc, "initial", source);
  ini.str("u0", c.u0);
  ini.num("u0_amplitude", c.u0_amplitude);
  ini.str("mu0", c.mu0);
  ini.num("mu0_amplitude", c.mu0_amplitude);
  ini.finish();
  if (!is_preset(c.u0, {"zero", "stretch", "bend", "shear"})) c.u0 = resolve_path(c.u0, base);
  if (!is_preset(c.mu0, {"zero", "constant", "bump"})) c.mu0 = resolve_path(c.mu0, base);
  if (is_preset(c.mu0, {"constant", "bump"}) && c.mu0_amplitude < 0)
    fail(source, ini.line("mu0_amplitude"), "initial temperature must be nonnegative");

  Reader st(doc, "study", source);
  st.nums("tau_ladder", c.tau_ladder);
  st.nums("eps_ladder", c.eps_ladder);
  st.num("norm_r", c.norms.r);
  st.num("norm_s", c.norms.s);
  st.finish();
  try {
    c.norms.validate();
  } catch (const Error& e) {
    throw Error(e.code(), source + ":" + std::to_string(st.line("norm_r")) + ": " + e.what());
  }

  Reader out(doc, "output", source);
  out.str("dir", c.output_dir);
  out.integer("snapshot_every", c.snapshot_every);
  out.finish();
  if (c.snapshot_every < 0) fail(source, out.line("snapshot_every"), "snapshot_every must be nonnegative");

  Reader lin(doc, "linear", source);
  lin.boolean("enabled", c.linear);
  lin.finish();
  return c;
}

LoadingProgram RunConfig::loading_program() const {
  LoadingProgram p;
  const TimeProfile fb = make_profile(body_force.profile, body_force.duration, body_force.table);
  const TimeProfile tr = make_profile(traction.profile, traction.duration, traction.table);
  const TimeProfile th = make_profile(theta_flat_profile, theta_flat_duration, theta_flat_table);
  const Vec2 fa = body_force.amplitude, ta = traction.amplitude;
  if (body_force_shape == "moving") {
    const double w = moving_width, v = moving_speed;
    p.body_force = [fa, fb, w, v](double t, const Vec2& x) {
      const double d = x[0] - v * t;
      return Vec2(fa * fb(t) * std::exp(-d * d / (2 * w * w)));
    };
  } else {
    p.body_force = [fa, fb](double t, const Vec2&) { return Vec2(fa * fb(t)); };
  }
  p.traction = [ta, tr](double t, const Vec2&) { return Vec2(ta * tr(t)); };
  for (const auto& e : traction_edges) p.traction_edges.push_back(parse_edge(e));
  const double amp = theta_flat;
  if (theta_flat_edges.empty()) {
    p.boundary_temperature = [amp, th](double t, const Vec2&) { return amp * th(t); };
  } else {
    std::vector<Edge> edges;
    for (const auto& e : theta_flat_edges) edges.push_back(parse_edge(e));
    const double lx = Lx, ly = Ly;
    p.boundary_temperature = [amp, th, edges, lx, ly](double t, const Vec2& x) {
      for (Edge e : edges)
        if (on_edge(lx, ly, x, e)) return amp * th(t);
      return 0.0;
    };
  }
  return p;
}

ProblemSetup RunConfig::build() const {
  ProblemSetup s;
  std::vector<Edge> dir;
  for (const auto& e : dirichlet_edges) dir.push_back(parse_edge(e));
  auto grid = std::make_shared<Grid>(nx, ny, Lx, Ly, dir);
  s.grid = grid;
  s.material = std::make_shared<Material>(material);
  s.cfg = scheme;
  s.loads = loading_program();
  const Grid& g = *grid;
  const int N = g.num_nodes();

  s.u0 = VectorField::Zero(2 * N);
  if (u0 == "zero") {
  } else if (is_preset(u0, {"stretch", "bend", "shear"})) {
    for (int n = 0; n < N; ++n) {
      const double c = dirichlet_cutoff(g, g.position(n));
      Vec2 u = Vec2::Zero();
      if (u0 == "stretch") u = Vec2(c, 0);
      else if (u0 == "shear") u = Vec2(0, c);
      else u = Vec2(0, c * c);
      s.u0.segment<2>(2 * n) = u0_amplitude * u;
    }
  } else {
    s.u0 = read_snapshot_csv(u0, g, 2);
  }

  s.mu0 = ScalarField::Zero(N);
  if (mu0 == "zero") {
  } else if (mu0 == "constant") {
    s.mu0.setConstant(mu0_amplitude);
  } else if (mu0 == "bump") {
    const Vec2 mid(0.5 * Lx, 0.5 * Ly);
    const double w = 0.2 * std::min(Lx, Ly);
    for (int n = 0; n < N; ++n) s.mu0[n] = mu0_amplitude * std::exp(-(g.position(n) - mid).squaredNorm() / (2 * w * w));
  } else {
    s.mu0 = read_snapshot_csv(mu0, g, 1);
  }
  return s;
}

std::string RunConfig::resolved_toml() const {
  std::ostringstream o;
  const MaterialParams& m = material;
  o << "[material]\n";
  o << "a1 = " << fmt(m.a1) << "\na2 = " << fmt(m.a2) << "\na3 = " << fmt(m.a3) << "\nq = " << fmt(m.q)
    << "\ncH = " << fmt(m.cH) << "\np = " << fmt(m.p) << "\ncV = " << fmt(m.cV) << "\nbeta = " << fmt(m.beta)
    << "\neta = " << fmt(m.eta) << "\nk0 = " << fmt(m.k0) << "\nc0 = " << fmt(m.c0) << "\nC0 = " << fmt(m.C0)
    << "\nmax_strain = " << fmt(m.max_strain) << "\nmax_theta = " << fmt(m.max_theta) << "\n\n";
  o << "[grid]\nnx = " << nx << "\nny = " << ny << "\nLx = " << fmt(Lx) << "\nLy = " << fmt(Ly)
    << "\ndirichlet_edges = " << fmt_list(dirichlet_edges) << "\n\n";
  const SchemeConfig& s = scheme;
  o << "[scheme]\neps = " << fmt(s.eps) << "\nalpha = " << fmt(s.alpha) << "\ntau = " << fmt(s.tau)
    << "\nT = " << fmt(s.T) << "\nkappa = " << fmt(s.kappa) << "\ntol_mech = " << fmt(s.tol_mech)
    << "\ntol_therm = " << fmt(s.tol_therm) << "\nmax_iter_mech = " << s.max_iter_mech
    << "\nmax_iter_therm = " << s.max_iter_therm << "\nuse_regularized_xi = "
    << quote(s.regularize_xi ? (*s.regularize_xi ? "true" : "false") : "auto") << "\n\n";
  auto vec_load = [&](const std::string& prefix, const VectorLoadSpec& v) {
    o << prefix << " = " << fmt_list(std::vector<double>{v.amplitude[0], v.amplitude[1]}) << "\n";
    o << prefix << "_profile = " << quote(v.profile) << "\n" << prefix << "_duration = " << fmt(v.duration) << "\n";
    o << prefix << "_table = " << quote(v.table) << "\n";
  };
  o << "[loads]\n";
  vec_load("body_force", body_force);
  o << "body_force_shape = " << quote(body_force_shape) << "\nmoving_width = " << fmt(moving_width)
    << "\nmoving_speed = " << fmt(moving_speed) << "\n";
  vec_load("traction", traction);
  o << "traction_edges = " << fmt_list(traction_edges) << "\n";
  o << "theta_flat = " << fmt(theta_flat) << "\ntheta_flat_profile = " << quote(theta_flat_profile)
    << "\ntheta_flat_duration = " << fmt(theta_flat_duration) << "\ntheta_flat_table = " << quote(theta_flat_table)
    << "\ntheta_flat_edges = " << fmt_list(theta_flat_edges) << "\n\n";
  o << "[initial]\nu0 = " << quote(u0) << "\nu0_amplitude = " << fmt(u0_amplitude) << "\nmu0 = " << quote(mu0)
    << "\nmu0_amplitude = " << fmt(mu0_amplitude) << "\n\n";
  o << "[study]\ntau_ladder = " << fmt_list(tau_ladder) << "\neps_ladder = " << fmt_list(eps_ladder)
    << "\nnorm_r = " << fmt(norms.r) << "\nnorm_s = " << fmt(norms.s) << "\n\n";
  o << "[output]\ndir = " << quote(output_dir) << "\nsnapshot_every = " << snapshot_every << "\n\n";
  o << "[linear]\nenabled = " << (linear ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace tve
