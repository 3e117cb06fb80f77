#include "ivobs/scenario.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ivobs/gain.hpp"

namespace ivobs {

namespace {

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

using Section = std::map<std::string, Entry>;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, end);
}

std::string format_vector(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    const auto row = m.row(i);
    out += format_vector({row.begin(), row.end()});
  }
  return out;
}

// splitmix64 finalizer; used to derive reproducible noise from (seed, t, k).
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Reader {
 public:
  explicit Reader(std::string_view text) { load(text); }

  bool has_section(const std::string& name) const { return sections_.count(name) > 0; }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const std::string& raw(const std::string& section, const std::string& key) {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key)) {
      throw ScenarioError("[" + section + "] missing required key '" + key + "'");
    }
    Entry& e = s->second.at(key);
    e.used = true;
    return e.value;
  }

  Expr expression(const std::string& section, const std::string& key, std::size_t n_x, std::size_t n_u) {
    const std::string& text = raw(section, key);
    try {
      return parse(text, n_x, n_u);
    } catch (const SyntaxError& e) {
      throw ScenarioError(where(section, key) + ": " + e.what());
    }
  }

  Expr time_expression(const std::string& section, const std::string& key) {
    return expression(section, key, 0, 0);
  }

  double number(const std::string& section, const std::string& key) {
    return constant(raw(section, key), section, key);
  }

  double number_or(const std::string& section, const std::string& key, double fallback) {
    return has(section, key) ? number(section, key) : fallback;
  }

  std::size_t count(const std::string& section, const std::string& key) {
    const std::string& text = raw(section, key);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      throw ScenarioError(where(section, key) + ": expected a nonnegative integer, got '" + text + "'");
    }
    return v;
  }

  std::vector<double> vector(const std::string& section, const std::string& key) {
    std::vector<double> out;
    for (auto item : split(raw(section, key), ',')) out.push_back(constant(std::string(item), section, key));
    return out;
  }

  Matrix matrix(const std::string& section, const std::string& key) {
    return matrix_from_text(raw(section, key), section, key);
  }

  Matrix matrix_from_text(const std::string& text, const std::string& section, const std::string& key) {
    std::vector<std::vector<double>> rows;
    for (auto row : split(text, ';')) {
      std::vector<double> values;
      for (auto item : split(row, ',')) values.push_back(constant(std::string(item), section, key));
      rows.push_back(std::move(values));
    }
    try {
      return Matrix::from_rows(rows);
    } catch (const DimensionError&) {
      throw ScenarioError(where(section, key) + ": matrix rows have different lengths");
    }
  }

  std::vector<std::string> keys(const std::string& section) {
    std::vector<std::string> out;
    auto s = sections_.find(section);
    if (s == sections_.end()) return out;
    for (auto& [k, e] : s->second) out.push_back(k);
    return out;
  }

  void check_all_used() const {
    for (const auto& [name, section] : sections_) {
      for (const auto& [key, e] : section) {
        if (!e.used) {
          throw ScenarioError("[" + name + "] unknown key '" + key + "' (line " + std::to_string(e.line) + ")");
        }
      }
    }
  }

  std::string where(const std::string& section, const std::string& key) const {
    const auto& e = sections_.at(section).at(key);
    return "[" + section + "] key '" + key + "' (line " + std::to_string(e.line) + ")";
  }

 private:
  double constant(const std::string& text, const std::string& section, const std::string& key) {
    if (text == "inf") return std::numeric_limits<double>::infinity();
    try {
      const Expr e = parse(text, 0, 0);
      if (variable_usage(e).uses_time) {
        throw ScenarioError(where(section, key) + ": expected a constant, got '" + text + "'");
      }
      return eval_real(e, 0.0, {}, {});
    } catch (const SyntaxError& err) {
      throw ScenarioError(where(section, key) + ": " + err.what() + " in '" + text + "'");
    } catch (const DomainError& err) {
      throw ScenarioError(where(section, key) + ": " + err.what());
    }
  }

  void load(std::string_view text) {
    std::string current;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto end = text.find('\n', start);
      std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      ++line_no;
      start = end == std::string_view::npos ? text.size() + 1 : end + 1;

      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ScenarioError("line " + std::to_string(line_no) + ": malformed section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (sections_.count(current)) {
          throw ScenarioError("line " + std::to_string(line_no) + ": duplicate section [" + current + "]");
        }
        sections_[current];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ScenarioError("line " + std::to_string(line_no) + ": expected 'key = value'");
      }
      if (current.empty()) throw ScenarioError("line " + std::to_string(line_no) + ": key outside of a section");
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) throw ScenarioError("line " + std::to_string(line_no) + ": empty key");
      auto& section = sections_[current];
      if (section.count(key)) {
        throw ScenarioError("line " + std::to_string(line_no) + ": duplicate key '" + key + "' in [" + current + "]");
      }
      section[key] = Entry{value, line_no, false};
    }
  }

  std::map<std::string, Section> sections_;
};

bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

GainSpec read_gain_spec(Reader& r, const std::string& section, const std::string& key) {
  const std::string text = r.raw(section, key);
  GainSpec g;
  if (text == "auto") {
    g.kind = GainSpec::Kind::kAuto;
  } else if (is_identifier(text)) {
    g.kind = GainSpec::Kind::kNamed;
    g.name = text;
  } else {
    g.kind = GainSpec::Kind::kMatrix;
    g.matrix = r.matrix_from_text(text, section, key);
  }
  return g;
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  Reader r(text);
  Scenario s;

  const std::string M = "model";
  if (!r.has_section(M)) throw ScenarioError("missing [model] section");
  if (r.has(M, "name")) s.name = r.raw(M, "name");
  const std::size_t nx = r.count(M, "n_x");
  const std::size_t nu = r.count(M, "n_u");
  const std::size_t ny = r.count(M, "n_y");
  if (nx == 0 || ny == 0) throw ScenarioError("[model] n_x and n_y must be positive");
  s.model.t0 = r.number(M, "t0");
  s.model.tf = r.number(M, "tf");
  if (!(s.model.t0 < s.model.tf)) throw ScenarioError("[model] horizon must satisfy t0 < tf");

  std::vector<Expr> f;
  for (std::size_t i = 1; i <= nx; ++i) f.push_back(r.expression(M, "f" + std::to_string(i), nx, nu));
  s.model.f = VectorField(std::move(f), nx, nu);

  s.model.C = r.matrix(M, "C");
  if (s.model.C.rows() != ny || s.model.C.cols() != nx) {
    throw ScenarioError(r.where(M, "C") + ": expected " + std::to_string(ny) + " rows of " + std::to_string(nx) +
                        " entries");
  }
  const std::vector<double> x0_lo = r.vector(M, "X0_lo");
  const std::vector<double> x0_hi = r.vector(M, "X0_hi");
  if (x0_lo.size() != nx || x0_hi.size() != nx) throw ScenarioError("[model] X0_lo/X0_hi need n_x entries");
  try {
    s.model.X0 = IntervalVector(x0_lo, x0_hi);
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("[model] invalid X0: ") + e.what());
  }
  for (std::size_t k = 1; k <= nu; ++k) {
    s.model.U.lower.push_back(r.time_expression(M, "u" + std::to_string(k) + "_lo"));
    s.model.U.upper.push_back(r.time_expression(M, "u" + std::to_string(k) + "_hi"));
  }
  for (std::size_t k = 1; k <= ny; ++k) {
    s.model.V.lower.push_back(r.time_expression(M, "v" + std::to_string(k) + "_lo"));
    s.model.V.upper.push_back(r.time_expression(M, "v" + std::to_string(k) + "_hi"));
  }
  if (r.has(M, "A")) {
    s.A = r.matrix(M, "A");
    if (s.A->rows() != nx || s.A->cols() != nx) throw ScenarioError(r.where(M, "A") + ": expected an n_x by n_x matrix");
  }

  const std::string T = "truth";
  if (!r.has_section(T)) throw ScenarioError("missing [truth] section");
  for (std::size_t k = 1; k <= nu; ++k) s.truth.u.push_back(r.time_expression(T, "u" + std::to_string(k)));
  s.truth.x0 = r.vector(T, "x0");
  if (s.truth.x0.size() != nx) throw ScenarioError(r.where(T, "x0") + ": expected n_x entries");
  if (!s.model.X0.contains(s.truth.x0)) throw ScenarioError(r.where(T, "x0") + ": initial state lies outside X0");
  if (r.has(T, "noise")) {
    const std::string text = r.raw(T, "noise");
    std::uint64_t seed = 0;
    const std::string prefix = "random(";
    bool ok = text.rfind(prefix, 0) == 0 && text.back() == ')';
    if (ok) {
      const char* first = text.data() + prefix.size();
      const char* last = text.data() + text.size() - 1;
      auto [ptr, ec] = std::from_chars(first, last, seed);
      ok = ec == std::errc() && ptr == last;
    }
    if (!ok) throw ScenarioError(r.where(T, "noise") + ": expected random(<seed>)");
    s.truth.noise.random_seed = seed;
  } else {
    for (std::size_t k = 1; k <= ny; ++k) s.truth.noise.expressions.push_back(r.time_expression(T, "noise" + std::to_string(k)));
  }
  s.truth.n_samples = r.has(T, "n_samples") ? r.count(T, "n_samples") : 500;
  if (s.truth.n_samples < 2) throw ScenarioError(r.where(T, "n_samples") + ": need at least 2 samples");

  for (const auto& name : r.keys("gains")) {
    if (!is_identifier(name) || name == "auto") throw ScenarioError("[gains] invalid gain name '" + name + "'");
    Matrix g = r.matrix("gains", name);
    if (g.rows() != nx || g.cols() != ny) throw ScenarioError(r.where("gains", name) + ": expected n_x rows of n_y entries");
    s.gains.emplace(name, std::move(g));
  }

  const std::string O = "observer";
  if (r.has_section(O)) {
    if (r.has(O, "variant")) {
      const auto v = parse_variant(r.raw(O, "variant"));
      if (!v) throw ScenarioError(r.where(O, "variant") + ": expected GMAC, NoMeasurements or NoConstraints");
      s.observer.variant = *v;
    }
    if (r.has(O, "gain")) s.observer.gain = read_gain_spec(r, O, "gain");
    s.observer.s_min = r.number_or(O, "s_min", s.observer.s_min);
    s.observer.l_bound = r.number_or(O, "l_bound", s.observer.l_bound);
  }
  if (s.observer.gain.kind == GainSpec::Kind::kMatrix) {
    if (s.observer.gain.matrix.empty()) s.observer.gain.matrix = Matrix(nx, ny);
    if (s.observer.gain.matrix.rows() != nx || s.observer.gain.matrix.cols() != ny) {
      throw ScenarioError("[observer] gain must have n_x rows of n_y entries");
    }
  } else if (s.observer.gain.kind == GainSpec::Kind::kNamed && !s.gains.count(s.observer.gain.name)) {
    throw ScenarioError("[observer] gain refers to unknown gain '" + s.observer.gain.name + "'");
  } else if (s.observer.gain.kind == GainSpec::Kind::kAuto && !s.A) {
    throw ScenarioError("[observer] gain = auto requires an A matrix in [model]");
  }

  const std::string I = "integration";
  if (r.has_section(I)) {
    IntegrationBlock& ib = s.integration;
    ib.rel_tol = r.number_or(I, "rel_tol", ib.rel_tol);
    ib.abs_tol = r.number_or(I, "abs_tol", ib.abs_tol);
    ib.max_step = r.number_or(I, "max_step", ib.max_step);
    ib.blow_up_threshold = r.number_or(I, "blow_up_threshold", ib.blow_up_threshold);
    if (r.has(I, "n_output")) ib.n_output = r.count(I, "n_output");
    if (!(ib.rel_tol > 0 && ib.abs_tol > 0 && ib.max_step > 0 && ib.blow_up_threshold > 0)) {
      throw ScenarioError("[integration] tolerances, max_step and blow_up_threshold must be positive");
    }
    if (ib.n_output < 2) throw ScenarioError("[integration] n_output must be at least 2");
  }

  r.check_all_used();
  try {
    s.model.validate();
    (void)s.model.U.at(s.model.t0);
    (void)s.model.V.at(s.model.t0);
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(std::string("[model] ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string format_scenario(const Scenario& s) {
  std::ostringstream out;
  const SystemModel& m = s.model;
  out << "[model]\n";
  if (!s.name.empty()) out << "name = " << s.name << '\n';
  out << "n_x = " << m.n_x() << '\n' << "n_u = " << m.n_u() << '\n' << "n_y = " << m.n_y() << '\n';
  out << "t0 = " << format_number(m.t0) << '\n' << "tf = " << format_number(m.tf) << '\n';
  for (std::size_t i = 0; i < m.n_x(); ++i) out << 'f' << i + 1 << " = " << unparse(m.f[i]) << '\n';
  out << "C = " << format_matrix(m.C) << '\n';
  out << "X0_lo = " << format_vector(m.X0.lower()) << '\n';
  out << "X0_hi = " << format_vector(m.X0.upper()) << '\n';
  for (std::size_t k = 0; k < m.U.size(); ++k) {
    out << 'u' << k + 1 << "_lo = " << unparse(m.U.lower[k]) << '\n';
    out << 'u' << k + 1 << "_hi = " << unparse(m.U.upper[k]) << '\n';
  }
  for (std::size_t k = 0; k < m.V.size(); ++k) {
    out << 'v' << k + 1 << "_lo = " << unparse(m.V.lower[k]) << '\n';
    out << 'v' << k + 1 << "_hi = " << unparse(m.V.upper[k]) << '\n';
  }
  if (s.A) out << "A = " << format_matrix(*s.A) << '\n';

  out << "\n[truth]\n";
  for (std::size_t k = 0; k < s.truth.u.size(); ++k) out << 'u' << k + 1 << " = " << unparse(s.truth.u[k]) << '\n';
  out << "x0 = " << format_vector(s.truth.x0) << '\n';
  if (s.truth.noise.random_seed) {
    out << "noise = random(" << *s.truth.noise.random_seed << ")\n";
  } else {
    for (std::size_t k = 0; k < s.truth.noise.expressions.size(); ++k) {
      out << "noise" << k + 1 << " = " << unparse(s.truth.noise.expressions[k]) << '\n';
    }
  }
  out << "n_samples = " << s.truth.n_samples << '\n';

  if (!s.gains.empty()) {
    out << "\n[gains]\n";
    for (const auto& [name, g] : s.gains) out << name << " = " << format_matrix(g) << '\n';
  }

  out << "\n[observer]\n";
  out << "variant = " << to_string(s.observer.variant) << '\n';
  switch (s.observer.gain.kind) {
    case GainSpec::Kind::kAuto: out << "gain = auto\n"; break;
    case GainSpec::Kind::kNamed: out << "gain = " << s.observer.gain.name << '\n'; break;
    case GainSpec::Kind::kMatrix: out << "gain = " << format_matrix(s.observer.gain.matrix) << '\n'; break;
  }
  out << "s_min = " << format_number(s.observer.s_min) << '\n';
  out << "l_bound = " << format_number(s.observer.l_bound) << '\n';

  const IntegrationBlock& ib = s.integration;
  out << "\n[integration]\n";
  out << "rel_tol = " << format_number(ib.rel_tol) << '\n';
  out << "abs_tol = " << format_number(ib.abs_tol) << '\n';
  if (std::isfinite(ib.max_step)) out << "max_step = " << format_number(ib.max_step) << '\n';
  out << "blow_up_threshold = " << format_number(ib.blow_up_threshold) << '\n';
  out << "n_output = " << ib.n_output << '\n';
  return out.str();
}

Matrix resolve_gain(const Scenario& s, const GainSpec& spec) {
  switch (spec.kind) {
    case GainSpec::Kind::kMatrix: return spec.matrix;
    case GainSpec::Kind::kNamed: {
      auto it = s.gains.find(spec.name);
      if (it == s.gains.end()) throw ScenarioError("unknown gain '" + spec.name + "'");
      return it->second;
    }
    case GainSpec::Kind::kAuto:
      if (!s.A) throw ScenarioError("gain = auto requires an A matrix in [model]");
      return synthesize_gain({*s.A, s.model.C}, s.observer.s_min, s.observer.l_bound).L;
  }
  throw std::logic_error("unhandled gain kind");
}

IntegConfig integration_config(const Scenario& s) {
  IntegConfig c;
  c.rel_tol = s.integration.rel_tol;
  c.abs_tol = s.integration.abs_tol;
  c.max_step = s.integration.max_step;
  c.blow_up_threshold = s.integration.blow_up_threshold;
  c.output_times = linspace(s.model.t0, s.model.tf, s.integration.n_output);
  return c;
}

TruthTrajectory simulate_scenario_truth(const Scenario& s) {
  const auto& u_exprs = s.truth.u;
  TimeFunction u = [&u_exprs](double t) {
    std::vector<double> out;
    out.reserve(u_exprs.size());
    for (const auto& e : u_exprs) out.push_back(eval_real(e, t, {}, {}));
    return out;
  };
  IntegConfig c;
  c.rel_tol = 1e-12;
  c.abs_tol = 1e-12;
  return simulate_truth(s.model, u, s.truth.x0, c);
}

TimeFunction scenario_noise(const Scenario& s) {
  if (s.truth.noise.random_seed) {
    const std::uint64_t seed = *s.truth.noise.random_seed;
    const BoundSignal V = s.model.V;
    return [seed, V](double t) {
      const IntervalVector box = V.at(t);
      std::vector<double> out(box.size());
      for (std::size_t k = 0; k < box.size(); ++k) {
        const std::uint64_t h = mix(mix(seed ^ std::bit_cast<std::uint64_t>(t)) + k);
        const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
        out[k] = box[k].lo() + unit * box[k].width();
      }
      return out;
    };
  }
  const std::vector<Expr> exprs = s.truth.noise.expressions;
  return [exprs](double t) {
    std::vector<double> out;
    out.reserve(exprs.size());
    for (const auto& e : exprs) out.push_back(eval_real(e, t, {}, {}));
    return out;
  };
}

MeasurementSignal scenario_measurements(const Scenario& s, const TruthTrajectory& truth) {
  return make_measurements([&truth](double t) { return truth(t); }, s.model.C, scenario_noise(s), s.truth.n_samples,
                           s.model.t0, s.model.tf);
}

}  // namespace ivobs
