#include "tvtopo/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <system_error>

#include "tvtopo/errors.hpp"

namespace tvtopo {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    throw ConfigError(std::string(key), "cannot parse '" + std::string(text) + "' as a number");
  return value;
}

template <class T>
std::string format_number(T value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::vector<std::string_view> split_commas(std::string_view text) {
  std::vector<std::string_view> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    out.push_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class Access>
Field number_field(const char* key, Access access) {
  return Field{key,
               [key, access](RunConfig& c, std::string_view v) { access(c) = parse_number<T>(key, v); },
               [access](const RunConfig& c) { return format_number(access(const_cast<RunConfig&>(c))); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      number_field<int>("scenario.n", [](RunConfig& c) -> int& { return c.scenario.n; }),
      number_field<int>("scenario.T", [](RunConfig& c) -> int& { return c.scenario.T; }),
      number_field<int>("scenario.segment_length", [](RunConfig& c) -> int& { return c.scenario.segment_length; }),
      number_field<double>("scenario.perturb_pct", [](RunConfig& c) -> double& { return c.scenario.perturb_pct; }),
      number_field<double>("scenario.density", [](RunConfig& c) -> double& { return c.scenario.density; }),
      number_field<double>("scenario.margin", [](RunConfig& c) -> double& { return c.scenario.margin; }),
      number_field<double>("scenario.scale", [](RunConfig& c) -> double& { return c.scenario.scale; }),
      number_field<int>("solver.P", [](RunConfig& c) -> int& { return c.experiment.solver.P; }),
      number_field<int>("solver.C", [](RunConfig& c) -> int& { return c.experiment.solver.C; }),
      number_field<double>("solver.alpha", [](RunConfig& c) -> double& { return c.experiment.solver.alpha; }),
      number_field<double>("solver.beta", [](RunConfig& c) -> double& { return c.experiment.solver.beta; }),
      number_field<double>("solver.h", [](RunConfig& c) -> double& { return c.experiment.solver.h; }),
      number_field<double>("solver.eps", [](RunConfig& c) -> double& { return c.experiment.eps; }),
      number_field<double>("solver.gamma", [](RunConfig& c) -> double& { return c.experiment.gamma; }),
      number_field<double>("solver.cov_ridge", [](RunConfig& c) -> double& { return c.experiment.cov_ridge; }),
      number_field<double>("solver.mle_ridge", [](RunConfig& c) -> double& { return c.experiment.mle_ridge; }),
      number_field<double>("solver.init_scale", [](RunConfig& c) -> double& { return c.experiment.init_scale; }),
      Field{"run.seeds",
            [](RunConfig& c, std::string_view v) {
              c.run.seeds.clear();
              for (auto item : split_commas(v)) c.run.seeds.push_back(parse_number<std::uint64_t>("run.seeds", item));
            },
            [](const RunConfig& c) {
              std::string s;
              for (std::size_t i = 0; i < c.run.seeds.size(); ++i) s += (i ? "," : "") + format_number(c.run.seeds[i]);
              return s;
            }},
      Field{"run.references",
            [](RunConfig& c, std::string_view v) { c.experiment.references = parse_references(v); },
            [](const RunConfig& c) { return format_references(c.experiment.references); }},
      Field{"run.out", [](RunConfig& c, std::string_view v) { c.run.out = std::string(v); },
            [](const RunConfig& c) { return c.run.out; }},
      number_field<int>("run.feasibility_stride",
                        [](RunConfig& c) -> int& { return c.experiment.feasibility_stride; }),
  };
  return table;
}

const Field& find_field(std::string_view key) {
  for (const auto& f : fields())
    if (key == f.key) return f;
  throw ConfigError(std::string(key), "unknown key");
}

}  // namespace

ReferenceSet parse_references(std::string_view text) {
  ReferenceSet refs{false, false, false};
  if (trim(text) == "none") return refs;
  for (auto item : split_commas(text)) {
    if (item == "bmle")
      refs.bmle = true;
    else if (item == "imle")
      refs.imle = true;
    else if (item == "truth")
      refs.truth = true;
    else
      throw ConfigError("run.references", "unknown reference '" + std::string(item) + "'");
  }
  return refs;
}

std::string format_references(const ReferenceSet& refs) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(refs.bmle, "bmle");
  add(refs.imle, "imle");
  add(refs.truth, "truth");
  return s.empty() ? "none" : s;
}

void RunConfig::validate() const {
  if (schema_version != kConfigSchemaVersion)
    throw ConfigError("schema_version", "unsupported version " + std::to_string(schema_version));
  scenario.validate();
  experiment.validate();
  if (run.out.empty()) throw ConfigError("run.out", "must not be empty");
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::string section;
  int line_no = 0;
  bool saw_version = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(line_no), "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "scenario" && section != "solver" && section != "run")
        throw ConfigError(section, "unknown section");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    if (section.empty()) {
      if (key != "schema_version") throw ConfigError(std::string(key), "unknown key outside a section");
      cfg.schema_version = parse_number<int>("schema_version", value);
      saw_version = true;
      continue;
    }
    find_field(section + "." + std::string(key)).set(cfg, value);
  }
  if (!saw_version) throw ConfigError("schema_version", "missing");
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out = "schema_version = " + std::to_string(cfg.schema_version) + "\n";
  std::string current;
  for (const auto& f : fields()) {
    const std::string_view key = f.key;
    const auto dot = key.find('.');
    const std::string section(key.substr(0, dot));
    if (section != current) {
      out += "\n[" + section + "]\n";
      current = section;
    }
    out += std::string(key.substr(dot + 1)) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError(std::string(assignment), "override must look like section.key=value");
  const std::string_view key = trim(assignment.substr(0, eq));
  const std::string_view value = trim(assignment.substr(eq + 1));
  if (key == "schema_version") {
    cfg.schema_version = parse_number<int>("schema_version", value);
    return;
  }
  find_field(key).set(cfg, value);
}

}  // namespace tvtopo
