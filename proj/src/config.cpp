#include "strataquad/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "strataquad/error.hpp"

namespace strataquad {

namespace {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, Array> data;
  int line = 0;
};

struct Entry {
  Value value;
  bool used = false;
};

struct Table {
  int line = 0;
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
};

class Parser {
 public:
  Parser(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  std::map<std::string, Table> parse() {
    std::map<std::string, Table> tables;
    tables[""].line = 1;
    std::string current;
    while (true) {
      skip_space(true);
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        const std::string name = identifier("table name");
        expect(']');
        if (tables.count(name) != 0) error("duplicate table [" + name + "]");
        tables[name].line = line_;
        current = name;
      } else {
        const int key_line = line_;
        const std::string key = identifier("key");
        skip_space(false);
        expect('=');
        skip_space(false);
        Value value = parse_value();
        Table& table = tables[current];
        if (table.entries.count(key) != 0) {
          error_at(key_line, "duplicate key '" + qualified(current, key) + "'");
        }
        value.line = key_line;
        table.entries[key] = Entry{std::move(value), false};
        table.order.push_back(key);
      }
      skip_space(false);
      if (!at_end() && peek() != '\n') error("unexpected text after value");
    }
    return tables;
  }

  [[noreturn]] void error(const std::string& message) const { error_at(line_, message); }

  [[noreturn]] void error_at(int line, const std::string& message) const {
    fail(ErrorKind::kConfig, source_ + ":" + std::to_string(line) + ": " + message);
  }

  static std::string qualified(const std::string& table, const std::string& key) {
    return table.empty() ? key : table + "." + key;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_space(bool newlines) {
    while (!at_end()) {
      const char c = peek();
      if (c == '#') {
        while (!at_end() && peek() != '\n') ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '\n' && newlines) {
        ++pos_;
        ++line_;
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    if (at_end() || peek() != c) error(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string identifier(const char* what) {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                         peek() == '-')) {
      ++pos_;
    }
    if (pos_ == start) error(std::string("expected ") + what);
    return text_.substr(start, pos_ - start);
  }

  Value parse_value() {
    if (at_end()) error("missing value");
    Value value;
    value.line = line_;
    const char c = peek();
    if (c == '"') {
      value.data = parse_string();
    } else if (c == '[') {
      ++pos_;
      Array items;
      while (true) {
        skip_space(true);
        if (at_end()) error("unterminated array");
        if (peek() == ']') {
          ++pos_;
          break;
        }
        items.push_back(parse_value());
        skip_space(true);
        if (!at_end() && peek() == ',') {
          ++pos_;
          continue;
        }
        skip_space(true);
        if (at_end() || peek() != ']') error("expected ',' or ']' in array");
      }
      value.data = std::move(items);
    } else if (text_.compare(pos_, 4, "true") == 0) {
      pos_ += 4;
      value.data = true;
    } else if (text_.compare(pos_, 5, "false") == 0) {
      pos_ += 5;
      value.data = false;
    } else {
      value.data = parse_number();
      return value;
    }
    return value;
  }

  std::string parse_string() {
    ++pos_;
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') error("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) error("unterminated escape");
        const char e = text_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: error(std::string("unknown escape \\") + e);
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  std::variant<bool, std::int64_t, double, std::string, Array> parse_number() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                         peek() == '-' || peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string token = text_.substr(start, pos_ - start);
    if (token.empty()) error("expected a value");
    std::string digits;
    for (char ch : token) {
      if (ch != '_') digits += ch;
    }
    const bool is_float = digits.find_first_of(".eE") != std::string::npos ||
                          digits == "inf" || digits == "nan";
    try {
      std::size_t used = 0;
      if (is_float) {
        const double x = std::stod(digits, &used);
        if (used == digits.size() && std::isfinite(x)) return x;
      } else {
        const long long x = std::stoll(digits, &used, 10);
        if (used == digits.size()) return static_cast<std::int64_t>(x);
      }
    } catch (const std::exception&) {
    }
    error("invalid value '" + token + "'");
  }

  const std::string& text_;
  std::string source_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

// Typed accessors that mark entries used and report line-specific errors.
class Reader {
 public:
  Reader(const Parser& parser, std::map<std::string, Table>& tables)
      : parser_(parser), tables_(tables) {}

  bool has_table(const std::string& name) const { return tables_.count(name) != 0; }

  bool has(const std::string& table, const std::string& key) const {
    auto it = tables_.find(table);
    return it != tables_.end() && it->second.entries.count(key) != 0;
  }

  std::string string(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    if (auto s = std::get_if<std::string>(&v.data)) return *s;
    bad(v, table, key, "a string");
  }

  double number(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    return as_number(v, table, key);
  }

  std::int64_t integer(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    return as_integer(v, table, key);
  }

  std::vector<double> numbers(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    std::vector<double> out;
    for (const Value& item : array(v, table, key)) out.push_back(as_number(item, table, key));
    return out;
  }

  std::vector<std::int64_t> integers(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    std::vector<std::int64_t> out;
    for (const Value& item : array(v, table, key)) out.push_back(as_integer(item, table, key));
    return out;
  }

  std::vector<std::vector<std::int64_t>> integer_rows(const std::string& table,
                                                      const std::string& key) {
    const Value& v = take(table, key);
    std::vector<std::vector<std::int64_t>> out;
    for (const Value& row : array(v, table, key)) {
      std::vector<std::int64_t> r;
      for (const Value& item : array(row, table, key)) r.push_back(as_integer(item, table, key));
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<std::string> strings(const std::string& table, const std::string& key) {
    const Value& v = take(table, key);
    std::vector<std::string> out;
    for (const Value& item : array(v, table, key)) {
      if (auto s = std::get_if<std::string>(&item.data)) {
        out.push_back(*s);
      } else {
        bad(item, table, key, "an array of strings");
      }
    }
    return out;
  }

  [[noreturn]] void invalid(const std::string& table, const std::string& key,
                            const std::string& message) const {
    auto it = tables_.find(table);
    int line = 1;
    if (it != tables_.end()) {
      line = it->second.line;
      auto e = it->second.entries.find(key);
      if (e != it->second.entries.end()) line = e->second.value.line;
    }
    parser_.error_at(line, "key '" + Parser::qualified(table, key) + "': " + message);
  }

  void reject_unused() const {
    static const std::set<std::string> known = {"", "model", "design", "run", "fit", "simulate"};
    for (const auto& [name, table] : tables_) {
      if (known.count(name) == 0) parser_.error_at(table.line, "unknown table [" + name + "]");
      for (const std::string& key : table.order) {
        const Entry& e = table.entries.at(key);
        if (!e.used) {
          parser_.error_at(e.value.line, "unknown key '" + Parser::qualified(name, key) + "'");
        }
      }
    }
  }

 private:
  const Value& take(const std::string& table, const std::string& key) {
    Entry& e = tables_.at(table).entries.at(key);
    e.used = true;
    return e.value;
  }

  [[noreturn]] void bad(const Value& v, const std::string& table, const std::string& key,
                        const std::string& expected) const {
    parser_.error_at(v.line, "key '" + Parser::qualified(table, key) + "' expects " + expected);
  }

  const Array& array(const Value& v, const std::string& table, const std::string& key) const {
    if (auto a = std::get_if<Array>(&v.data)) return *a;
    bad(v, table, key, "an array");
  }

  double as_number(const Value& v, const std::string& table, const std::string& key) const {
    if (auto d = std::get_if<double>(&v.data)) return *d;
    if (auto i = std::get_if<std::int64_t>(&v.data)) return static_cast<double>(*i);
    bad(v, table, key, "a number");
  }

  std::int64_t as_integer(const Value& v, const std::string& table,
                          const std::string& key) const {
    if (auto i = std::get_if<std::int64_t>(&v.data)) return *i;
    bad(v, table, key, "an integer");
  }

  const Parser& parser_;
  std::map<std::string, Table>& tables_;
};

bool valid_density(const std::string& s) {
  if (s == "uniform" || s == "optimal") return true;
  auto numeric_tail = [](const std::string& tail) {
    if (tail.empty()) return false;
    try {
      std::size_t used = 0;
      const double x = std::stod(tail, &used);
      return used == tail.size() && std::isfinite(x);
    } catch (const std::exception&) {
      return false;
    }
  };
  if (s.rfind("power:", 0) == 0) return numeric_tail(s.substr(6));
  if (s.rfind("quantile:pow:", 0) == 0) return numeric_tail(s.substr(13));
  return false;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  Parser parser(text, source);
  std::map<std::string, Table> tables = parser.parse();
  Reader in(parser, tables);
  ExperimentConfig config;

  if (in.has("", "title")) config.title = in.string("", "title");

  if (!in.has_table("model")) parser.error_at(1, "missing table [model]");
  if (!in.has("model", "name")) in.invalid("model", "name", "is required");
  ModelConfig& m = config.model;
  m.name = in.string("model", "name");
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"fbf", {"dim", "decomposition", "alpha"}},
      {"exp", {"dim", "alpha"}},
      {"amplitude_modulated",
       {"dim", "alpha", "base", "amplitude", "shift", "scale", "beta", "holder_constant"}},
      {"warped_fbm", {"lambda", "beta", "scale"}},
  };
  auto model_keys = allowed.find(m.name);
  if (model_keys == allowed.end()) {
    in.invalid("model", "name", "unknown model '" + m.name + "'");
  }
  for (const std::string& key : tables.at("model").order) {
    if (key != "name" && model_keys->second.count(key) == 0) {
      in.invalid("model", key, "does not apply to model '" + m.name + "'");
    }
  }
  if (in.has("model", "dim")) m.dim = static_cast<int>(in.integer("model", "dim"));
  if (in.has("model", "decomposition")) {
    for (std::int64_t w : in.integers("model", "decomposition")) {
      m.decomposition.push_back(static_cast<int>(w));
    }
  }
  if (in.has("model", "alpha")) m.alpha = in.numbers("model", "alpha");
  if (in.has("model", "base")) m.base = in.string("model", "base");
  if (in.has("model", "amplitude")) m.amplitude = in.string("model", "amplitude");
  if (in.has("model", "shift")) m.shift = in.number("model", "shift");
  if (in.has("model", "scale")) m.scale = in.number("model", "scale");
  if (in.has("model", "beta")) m.beta = in.number("model", "beta");
  if (in.has("model", "lambda")) m.lambda = in.number("model", "lambda");
  if (in.has("model", "holder_constant")) m.holder_constant = in.number("model", "holder_constant");
  if (m.name != "warped_fbm" && m.alpha.empty()) in.invalid("model", "alpha", "is required");
  if (m.name == "warped_fbm") {
    if (!m.lambda) in.invalid("model", "lambda", "is required");
    if (!m.beta) in.invalid("model", "beta", "is required");
  }
  if (m.name == "amplitude_modulated") {
    if (!m.amplitude) in.invalid("model", "amplitude", "is required");
    if (*m.amplitude != "inverse_shift" && *m.amplitude != "radial_power") {
      in.invalid("model", "amplitude", "unknown amplitude '" + *m.amplitude + "'");
    }
    if (m.base && *m.base != "exp") in.invalid("model", "base", "only 'exp' is supported");
    if (*m.amplitude == "radial_power" && !m.beta) in.invalid("model", "beta", "is required");
  }

  if (in.has_table("design")) {
    if (in.has("design", "densities")) {
      config.design.densities = in.strings("design", "densities");
      for (const std::string& d : config.design.densities) {
        if (!valid_density(d)) in.invalid("design", "densities", "unknown density '" + d + "'");
      }
    }
    if (in.has("design", "allocation")) {
      config.design.allocation = in.string("design", "allocation");
      const std::string& a = config.design.allocation;
      if (a != "uniform" && a != "optimal" && a != "explicit") {
        in.invalid("design", "allocation", "unknown allocation '" + a + "'");
      }
    }
  }

  if (!in.has_table("run")) parser.error_at(1, "missing table [run]");
  RunConfig& r = config.run;
  int schedules = 0;
  if (in.has("run", "N")) {
    r.N = in.integers("run", "N");
    ++schedules;
  }
  if (in.has("run", "n")) {
    r.n = in.integers("run", "n");
    ++schedules;
  }
  if (in.has("run", "counts")) {
    r.counts = in.integer_rows("run", "counts");
    ++schedules;
  }
  if (schedules != 1) in.invalid("run", "N", "give exactly one of N, n or counts");
  if ((config.design.allocation == "explicit") != !r.counts.empty()) {
    in.invalid("run", "counts", "counts go together with allocation = \"explicit\"");
  }
  if (!r.n.empty() && config.design.allocation != "uniform") {
    in.invalid("run", "n", "per-coordinate counts need allocation = \"uniform\"");
  }
  if (in.has("run", "order")) r.order = static_cast<int>(in.integer("run", "order"));
  if (in.has("run", "seed")) {
    const std::int64_t seed = in.integer("run", "seed");
    if (seed < 0) in.invalid("run", "seed", "must be nonnegative");
    r.seed = static_cast<std::uint64_t>(seed);
  }
  if (in.has("run", "out")) r.out = in.string("run", "out");

  if (in.has_table("fit")) {
    FitConfig f;
    if (in.has("fit", "model")) f.model = in.string("fit", "model");
    if (f.model != "single_power" && f.model != "two_power" && f.model != "scaled_constant") {
      in.invalid("fit", "model", "unknown fit model '" + f.model + "'");
    }
    if (in.has("fit", "exponents")) f.exponents = in.numbers("fit", "exponents");
    if (f.model == "two_power" && f.exponents.size() != 2) {
      in.invalid("fit", "exponents", "two_power needs two exponents");
    }
    if (in.has("fit", "scaled_exponent")) f.scaled_exponent = in.number("fit", "scaled_exponent");
    if (in.has("fit", "range")) {
      f.range = in.integers("fit", "range");
      if (f.range.size() != 2 || f.range[0] >= f.range[1]) {
        in.invalid("fit", "range", "expects [N_min, N_max] with N_min < N_max");
      }
    }
    if (in.has("fit", "reference")) f.reference = in.numbers("fit", "reference");
    config.fit = f;
  }

  if (in.has_table("simulate")) {
    SimulateConfig s;
    if (!in.has("simulate", "N")) in.invalid("simulate", "N", "is required");
    s.N = in.integers("simulate", "N");
    if (in.has("simulate", "eta_samples")) {
      s.eta_samples = static_cast<int>(in.integer("simulate", "eta_samples"));
    }
    if (in.has("simulate", "replications")) {
      s.replications = static_cast<int>(in.integer("simulate", "replications"));
    }
    if (in.has("simulate", "refinement")) {
      s.refinement = static_cast<int>(in.integer("simulate", "refinement"));
    }
    config.simulate = s;
  }

  in.reject_unused();
  return config;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) fail(ErrorKind::kConfig, "cannot open config '" + path + "'");
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_config(buffer.str(), path);
}

namespace {

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string number(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  std::string s = buffer;
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

template <typename T, typename F>
std::string list(const std::vector<T>& values, F format) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ", ";
    out += format(values[i]);
  }
  return out + "]";
}

std::string integer(std::int64_t x) { return std::to_string(x); }

}  // namespace

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  if (c.title) out << "title = " << quote(*c.title) << "\n\n";
  const ModelConfig& m = c.model;
  out << "[model]\nname = " << quote(m.name) << '\n';
  if (m.dim) out << "dim = " << *m.dim << '\n';
  if (!m.decomposition.empty()) {
    out << "decomposition = "
        << list(m.decomposition, [](int w) { return std::to_string(w); }) << '\n';
  }
  if (!m.alpha.empty()) out << "alpha = " << list(m.alpha, number) << '\n';
  if (m.base) out << "base = " << quote(*m.base) << '\n';
  if (m.amplitude) out << "amplitude = " << quote(*m.amplitude) << '\n';
  if (m.shift) out << "shift = " << number(*m.shift) << '\n';
  if (m.scale) out << "scale = " << number(*m.scale) << '\n';
  if (m.beta) out << "beta = " << number(*m.beta) << '\n';
  if (m.lambda) out << "lambda = " << number(*m.lambda) << '\n';
  if (m.holder_constant) out << "holder_constant = " << number(*m.holder_constant) << '\n';

  out << "\n[design]\n";
  if (!c.design.densities.empty()) out << "densities = " << list(c.design.densities, quote) << '\n';
  out << "allocation = " << quote(c.design.allocation) << '\n';

  const RunConfig& r = c.run;
  out << "\n[run]\n";
  if (!r.N.empty()) out << "N = " << list(r.N, integer) << '\n';
  if (!r.n.empty()) out << "n = " << list(r.n, integer) << '\n';
  if (!r.counts.empty()) {
    out << "counts = "
        << list(r.counts, [](const std::vector<std::int64_t>& row) { return list(row, integer); })
        << '\n';
  }
  if (r.order) out << "order = " << *r.order << '\n';
  if (r.seed) out << "seed = " << *r.seed << '\n';
  if (r.out) out << "out = " << quote(*r.out) << '\n';

  if (c.fit) {
    const FitConfig& f = *c.fit;
    out << "\n[fit]\nmodel = " << quote(f.model) << '\n';
    if (!f.exponents.empty()) out << "exponents = " << list(f.exponents, number) << '\n';
    if (f.scaled_exponent) out << "scaled_exponent = " << number(*f.scaled_exponent) << '\n';
    if (!f.range.empty()) out << "range = " << list(f.range, integer) << '\n';
    if (!f.reference.empty()) out << "reference = " << list(f.reference, number) << '\n';
  }
  if (c.simulate) {
    const SimulateConfig& s = *c.simulate;
    out << "\n[simulate]\nN = " << list(s.N, integer) << '\n';
    if (s.eta_samples) out << "eta_samples = " << *s.eta_samples << '\n';
    if (s.replications) out << "replications = " << *s.replications << '\n';
    if (s.refinement) out << "refinement = " << *s.refinement << '\n';
  }
  return out.str();
}

}  // namespace strataquad
