#include "ducfem/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "ducfem/errors.hpp"

namespace ducfem {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    out.push_back(trim(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  double v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ConfigError(key + ": '" + text + "' is not a number");
  return v;
}

long long to_integer(const std::string& text, const std::string& key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ConfigError(key + ": '" + text + "' is not an integer");
  return v;
}

// Accepts a, bi, a+bi and a-bi.
std::complex<double> to_complex(const std::string& text, const std::string& key) {
  if (text.empty()) throw ConfigError(key + ": empty complex value");
  if (text.back() != 'i') return {to_double(text, key), 0.0};
  const std::string body = text.substr(0, text.size() - 1);
  std::size_t split = std::string::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  auto imag_part = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return to_double(s, key);
  };
  if (split == std::string::npos) return {0.0, imag_part(body)};
  return {to_double(body.substr(0, split), key), imag_part(body.substr(split))};
}

Range to_range(const std::string& text, const std::string& key) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw ConfigError(key + ": expected 'lo, hi'");
  Range r{to_double(parts[0], key), to_double(parts[1], key)};
  if (!(r.hi >= r.lo)) throw ConfigError(key + ": empty range");
  return r;
}

std::vector<double> to_doubles(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& p : split_list(text)) out.push_back(to_double(p, key));
  return out;
}

// Reads one section, tracking which keys were consumed.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!tree_) return std::nullopt;
    const auto child = tree_->get_child_optional(key);
    if (!child) return std::nullopt;
    return trim(child->data());
  }
  std::string full(const std::string& key) const { return name_ + "." + key; }

  template <typename Fn>
  void read(const std::string& key, Fn&& fn) {
    if (const auto v = raw(key)) {
      const std::string name = full(key);
      fn(*v, name);
    }
  }

  void check_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) throw ConfigError("nested key " + full(key) + " is not allowed");
      if (!used_.count(key)) throw ConfigError("unknown key " + full(key));
    }
  }

 private:
  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }

  static const std::set<std::string> known{"mesh",  "sampling", "pod",     "solver",
                                           "cvar",  "validate", "compare", "output"};
  for (const auto& [name, child] : tree) {
    if (child.empty()) throw ConfigError("key '" + name + "' outside any section");
    if (!known.count(name)) throw ConfigError("unknown section [" + name + "]");
  }
  auto section = [&](const std::string& name) {
    const auto child = tree.get_child_optional(name);
    return Section(child ? &*child : nullptr, name);
  };

  RunConfig cfg;

  {
    auto s = section("mesh");
    auto& g = cfg.mesh.geometry;
    bool generated = false;
    auto geom = [&](const char* key, double& field) {
      s.read(key, [&](const std::string& v, const std::string& k) {
        field = to_double(v, k);
        generated = true;
      });
    };
    geom("length", g.length);
    geom("height", g.height);
    geom("liner_start", g.liner_start);
    geom("liner_length", g.liner_length);
    geom("h", g.h);
    s.read("path", [&](const std::string& v, const std::string& k) {
      require(!v.empty(), k + ": empty path");
      std::filesystem::path p(v);
      if (p.is_relative()) p = base_dir / p;
      require(std::filesystem::exists(p), k + ": mesh file " + p.string() + " does not exist");
      cfg.mesh.path = p;
    });
    require(!(generated && cfg.mesh.path), "mesh: give either path or geometry, not both");
    s.check_unknown();
    require(g.length > 0 && g.height > 0 && g.liner_start >= 0 && g.liner_length > 0 && g.h > 0,
            "mesh: dimensions must be positive");
    require(g.liner_start + g.liner_length <= g.length, "mesh: liner extends past the duct");
  }

  {
    auto s = section("sampling");
    auto& m = cfg.sampling;
    s.read("k_count", [&](auto& v, auto& k) { m.k_count = static_cast<int>(to_integer(v, k)); });
    s.read("k_grid", [&](auto& v, auto& k) { m.k_grid = to_range(v, k); });
    s.read("mu_set", [&](auto& v, auto& k) {
      m.mu_set.clear();
      for (const auto& p : split_list(v)) m.mu_set.push_back(to_complex(p, k));
    });
    s.read("xi_r_set", [&](auto& v, auto& k) { m.xi_r_set = to_doubles(v, k); });
    s.read("xi_i_set", [&](auto& v, auto& k) { m.xi_i_set = to_doubles(v, k); });
    s.read("seed", [&](auto& v, auto& k) {
      const long long seed = to_integer(v, k);
      require(seed >= 0, k + ": seed must be non-negative");
      m.seed = static_cast<std::uint64_t>(seed);
    });
    s.read("Q", [&](auto& v, auto& k) { m.Q = to_integer(v, k); });
    s.read("k_range", [&](auto& v, auto& k) { m.k = to_range(v, k); });
    s.read("mu_r_range", [&](auto& v, auto& k) { m.mu_r = to_range(v, k); });
    s.read("mu_i_range", [&](auto& v, auto& k) { m.mu_i = to_range(v, k); });
    s.check_unknown();
    require(m.k_count >= 2, "sampling.k_count must be at least 2");
    require(m.k_grid.lo > 0 && m.k.lo > 0, "sampling: wavenumbers must be positive");
    require(!m.mu_set.empty() && !m.xi_r_set.empty() && !m.xi_i_set.empty(),
            "sampling: sample sets must be nonempty");
    for (const double xr : m.xi_r_set) require(xr > 0, "sampling.xi_r_set: resistance must be positive");
    require(m.Q >= 1, "sampling.Q must be at least 1");
  }

  {
    auto s = section("pod");
    std::optional<Index> modes;
    std::optional<double> tau;
    s.read("mode", [&](auto& v, auto& k) {
      try {
        cfg.pod.mode = parse_pod_mode(v);
      } catch (const Error& e) {
        throw ConfigError(k + ": " + e.what());
      }
    });
    s.read("modes", [&](auto& v, auto& k) { modes = to_integer(v, k); });
    s.read("tau", [&](auto& v, auto& k) { tau = to_double(v, k); });
    s.check_unknown();
    require(!(modes && tau), "pod: give either modes or tau, not both");
    if (modes) {
      require(*modes >= 1 && *modes <= kMaxReducedDimension, "pod.modes out of range");
      cfg.pod.select = ModeSelection::fixed(*modes);
    } else if (tau) {
      require(*tau > 0 && *tau < 1, "pod.tau must lie in (0,1)");
      cfg.pod.select = ModeSelection::energy_fraction(*tau);
    }
  }

  {
    auto s = section("solver");
    std::string method = "direct";
    GmresShiftedLaplacian g;
    bool gmres_keys = false;
    s.read("method", [&](auto& v, auto&) { method = v; });
    auto gk = [&](const char* key, auto&& set) {
      s.read(key, [&](auto& v, auto& k) {
        set(v, k);
        gmres_keys = true;
      });
    };
    gk("tol", [&](auto& v, auto& k) { g.tol = to_double(v, k); });
    gk("max_iter", [&](auto& v, auto& k) { g.max_iter = static_cast<int>(to_integer(v, k)); });
    gk("beta1", [&](auto& v, auto& k) { g.beta1 = to_double(v, k); });
    gk("beta2", [&](auto& v, auto& k) { g.beta2 = to_double(v, k); });
    s.check_unknown();
    if (method == "direct") {
      require(!gmres_keys, "solver: tol/max_iter/beta1/beta2 apply only to method = gmres");
      cfg.solver = DirectSolve{};
    } else if (method == "gmres") {
      require(g.tol >= 0 && g.max_iter >= 1, "solver: tol must be >= 0 and max_iter >= 1");
      cfg.solver = g;
    } else {
      throw ConfigError("solver.method: expected direct or gmres, got '" + method + "'");
    }
  }

  {
    auto s = section("cvar");
    auto& c = cfg.cvar;
    s.read("beta", [&](auto& v, auto& k) { c.betas = to_doubles(v, k); });
    s.read("eps", [&](auto& v, auto& k) { c.eps = to_double(v, k); });
    s.read("gamma", [&](auto& v, auto& k) { c.gamma = to_double(v, k); });
    s.read("gamma_p", [&](auto& v, auto& k) {
      if (v == "auto")
        c.gamma_p.reset();
      else
        c.gamma_p = to_double(v, k);
    });
    s.read("xi_r0", [&](auto& v, auto& k) { c.xi_r0 = to_double(v, k); });
    s.read("xi_i0", [&](auto& v, auto& k) { c.xi_i0 = to_double(v, k); });
    s.read("alpha0", [&](auto& v, auto& k) { c.alpha0 = to_double(v, k); });
    s.read("max_iter", [&](auto& v, auto& k) { c.max_iter = static_cast<int>(to_integer(v, k)); });
    s.check_unknown();
    require(!c.betas.empty(), "cvar.beta: empty list");
    for (const double b : c.betas) require(b > 0 && b < 1, "cvar.beta: values must lie in (0,1)");
    require(c.eps > 0, "cvar.eps must be positive");
    require(c.gamma >= 0, "cvar.gamma must be non-negative");
    require(!c.gamma_p || *c.gamma_p > 0, "cvar.gamma_p must be positive or auto");
    require(c.xi_r0 > 0, "cvar.xi_r0 must be positive");
    require(c.max_iter >= 1, "cvar.max_iter must be at least 1");
  }

  {
    auto s = section("validate");
    auto& v = cfg.validate;
    s.read("draws", [&](auto& t, auto& k) { v.draws = static_cast<int>(to_integer(t, k)); });
    s.read("modes", [&](auto& t, auto& k) {
      v.modes.clear();
      for (const auto& p : split_list(t)) v.modes.push_back(to_integer(p, k));
    });
    s.read("xi_r_range", [&](auto& t, auto& k) { v.xi_r = to_range(t, k); });
    s.read("xi_i_range", [&](auto& t, auto& k) { v.xi_i = to_range(t, k); });
    s.check_unknown();
    require(v.draws >= 1, "validate.draws must be at least 1");
    require(!v.modes.empty(), "validate.modes: empty list");
    for (std::size_t i = 0; i < v.modes.size(); ++i) {
      require(v.modes[i] >= 1, "validate.modes: values must be positive");
      require(i == 0 || v.modes[i] > v.modes[i - 1], "validate.modes must be increasing");
    }
    require(v.xi_r.lo >= 0, "validate.xi_r_range must be non-negative");
  }

  {
    auto s = section("compare");
    auto& c = cfg.compare;
    s.read("theta", [&](auto& t, auto& k) {
      const auto vals = to_doubles(t, k);
      require(vals.size() == 3, k + ": expected 'k, mu_r, mu_i'");
      require(vals[0] > 0, k + ": wavenumber must be positive");
      c.theta = RandomParams{vals[0], vals[1], vals[2]};
    });
    s.read("xi_r0", [&](auto& t, auto& k) { c.xi_r0 = to_double(t, k); });
    s.read("xi_i0", [&](auto& t, auto& k) { c.xi_i0 = to_double(t, k); });
    s.read("max_iter", [&](auto& t, auto& k) { c.max_iter = static_cast<int>(to_integer(t, k)); });
    s.check_unknown();
    require(c.xi_r0 > 0, "compare.xi_r0 must be positive");
    require(c.max_iter >= 1, "compare.max_iter must be at least 1");
  }

  {
    auto s = section("output");
    s.read("dir", [&](auto& t, auto& k) {
      require(!t.empty(), k + ": empty path");
      cfg.output_dir = t;
    });
    s.check_unknown();
    if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  return parse_config(in, path.parent_path());
}

RandomParams nominal_params(const RunConfig& cfg) {
  if (cfg.compare.theta) return *cfg.compare.theta;
  return {cfg.sampling.k.hi, cfg.sampling.mu_r.hi, cfg.sampling.mu_i.hi};
}

CvarConfig cvar_config(const RunConfig& cfg, double beta, double gamma_p) {
  CvarConfig c;
  c.beta = beta;
  c.eps = cfg.cvar.eps;
  c.gamma = cfg.cvar.gamma;
  c.gamma_p = gamma_p;
  c.Q = cfg.sampling.Q;
  c.seed = cfg.sampling.seed;
  c.k = cfg.sampling.k;
  c.mu_r = cfg.sampling.mu_r;
  c.mu_i = cfg.sampling.mu_i;
  return c;
}

}  // namespace ducfem
