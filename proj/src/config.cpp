#include "sbgrad/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace sbgrad::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_real(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError("expected a real number, got nothing");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw ConfigError("expected a real number, got '" + t + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Splits `a+bi` at the sign that separates the two parts: the last + or -
// that is neither the leading sign nor part of an exponent.
num::complexd parse_complex_body(const std::string& t) {
  if (t.empty()) throw ConfigError("expected a complex number, got nothing");
  if (t.back() != 'i' && t.back() != 'I') {
    return num::complexd(parse_real(t), 0.0);
  }
  const std::string body = t.substr(0, t.size() - 1);
  std::size_t cut = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    const char c = body[k];
    if ((c == '+' || c == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      cut = k;
      break;
    }
  }
  auto imag_part = [](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return parse_real(s);
  };
  if (cut == std::string::npos) {
    return num::complexd(0.0, imag_part(body));
  }
  return num::complexd(parse_real(body.substr(0, cut)),
                       imag_part(body.substr(cut)));
}

num::ComplexMatrix parse_matrix2(const std::string& value,
                                 const char* key) {
  const std::vector<std::string> parts = split(value, ',');
  if (parts.size() != 4) {
    throw ConfigError(std::string(key) + " needs 4 comma-separated entries, got " +
                      std::to_string(parts.size()));
  }
  num::ComplexMatrix m(2, 2);
  for (std::size_t k = 0; k < 4; ++k) {
    m(k / 2, k % 2) = parse_complex(parts[k]);
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const num::complexd v = m(k / 2, k % 2);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw ConfigError(std::string(key) + " has a non-finite entry");
    }
  }
  return m;
}

void check_hermitian(const num::ComplexMatrix& m, const char* key) {
  const double off = std::abs(m(0, 1) - std::conj(m(1, 0)));
  const double diag =
      std::max(std::abs(m(0, 0).imag()), std::abs(m(1, 1).imag()));
  if (off > 1e-12 || diag > 1e-12) {
    throw ConfigError(std::string(key) + " violates hermiticity");
  }
}

bool parse_bool(const std::string& value) {
  const std::string t = trim(value);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  throw ConfigError("expected true or false, got '" + t + "'");
}

}  // namespace

RunConfig::RunConfig()
    : params(),
      rho0(2, 2),
      custom_observable(0, 0) {
  rho0(0, 0) = num::complexd(0.75, 0.0);
  rho0(0, 1) = num::complexd(0.0, -0.4330127018922193);
  rho0(1, 0) = num::complexd(0.0, 0.4330127018922193);
  rho0(1, 1) = num::complexd(0.25, 0.0);
}

num::complexd parse_complex(const std::string& text) {
  std::string packed;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) packed += c;
  }
  return parse_complex_body(packed);
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  bool saw_custom_matrix = false;

  std::istringstream in(text);
  std::string raw;
  long lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    try {
      if (key == "epsilon") {
        cfg.params.epsilon = parse_real(value);
      } else if (key == "delta") {
        cfg.params.delta = parse_real(value);
      } else if (key == "beta") {
        cfg.params.bath.beta = parse_real(value);
      } else if (key == "eta") {
        cfg.params.bath.eta = parse_real(value);
      } else if (key == "omega_c") {
        cfg.params.bath.omega_c = parse_real(value);
      } else if (key == "s_exponent") {
        cfg.params.bath.s_exponent = parse_real(value);
      } else if (key == "rho0") {
        cfg.rho0 = parse_matrix2(value, "rho0");
        check_hermitian(cfg.rho0, "rho0");
        const double tr = cfg.rho0.trace().real();
        if (std::abs(tr - 1.0) > 1e-12) {
          std::ostringstream msg;
          msg << "rho0 violates trace (got " << tr << ", expected 1)";
          throw ConfigError(msg.str());
        }
      } else if (key == "observable") {
        if (value == "sigma_z") {
          cfg.observable = ObservableKind::sigma_z;
        } else if (value == "sigma_x") {
          cfg.observable = ObservableKind::sigma_x;
        } else if (value == "custom") {
          cfg.observable = ObservableKind::custom;
        } else {
          throw ConfigError("unknown observable '" + value + "'");
        }
      } else if (key == "observable_matrix") {
        cfg.custom_observable = parse_matrix2(value, "observable_matrix");
        check_hermitian(cfg.custom_observable, "observable_matrix");
        saw_custom_matrix = true;
      } else if (key == "tol_ss") {
        cfg.tol_ss = parse_real(value);
      } else if (key == "rank_tol") {
        cfg.rank_tol = parse_real(value);
      } else if (key == "fd_step") {
        cfg.fd_step = parse_real(value);
      } else if (key == "include_imag") {
        cfg.include_imag = parse_bool(value);
      } else if (key == "grad_method") {
        if (value == "direct") {
          cfg.grad_method = sens::GradMethod::implicit_direct;
        } else if (value == "adjoint-ode") {
          cfg.grad_method = sens::GradMethod::adjoint_ode;
        } else {
          throw ConfigError("unknown grad_method '" + value +
                            "' (use direct or adjoint-ode)");
        }
      } else if (key == "free") {
        cfg.params.free_mask.fill(false);
        for (const std::string& part : split(value, ',')) {
          const std::string name = trim(part);
          if (name.empty()) continue;
          const auto id = red::param_from_name(name);
          if (!id) {
            throw ConfigError("unknown parameter '" + name + "' in free list");
          }
          cfg.params.free_mask[static_cast<std::size_t>(*id)] = true;
        }
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      const std::string what = e.what();
      if (what.rfind("line ", 0) == 0) throw;
      throw ConfigError("line " + std::to_string(lineno) + ": " + what);
    }
  }

  if (cfg.observable == ObservableKind::custom && !saw_custom_matrix) {
    throw ConfigError("observable = custom requires observable_matrix");
  }
  if (!(cfg.tol_ss > 0.0) || !(cfg.rank_tol > 0.0) || !(cfg.fd_step > 0.0)) {
    throw ConfigError("tol_ss, rank_tol and fd_step must be positive");
  }
  try {
    red::validate(cfg.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open config file");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

num::ComplexMatrix observable_matrix(const RunConfig& cfg) {
  switch (cfg.observable) {
    case ObservableKind::sigma_z:
      return red::sigma_z();
    case ObservableKind::sigma_x:
      return red::sigma_x();
    case ObservableKind::custom:
      return cfg.custom_observable;
  }
  throw std::logic_error("observable_matrix: bad kind");
}

sens::GradientOptions gradient_options(const RunConfig& cfg) {
  sens::GradientOptions opts;
  opts.rank_tol = cfg.rank_tol;
  opts.fd_step = cfg.fd_step;
  opts.tol_ss = cfg.tol_ss;
  opts.bath.include_imag = cfg.include_imag;
  return opts;
}

}  // namespace sbgrad::cli
