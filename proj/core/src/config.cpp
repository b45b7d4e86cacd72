#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "cbo/errors.hpp"
#include "cbo/harness.hpp"

namespace cbo {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value for '" + std::string(key) + "': '" + std::string(value) + "'");
}

double to_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

long long to_integer(std::string_view key, std::string_view value) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

int to_int(std::string_view key, std::string_view value) {
  const long long v = to_integer(key, value);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad_value(key, value);
  return static_cast<int>(v);
}

Eigen::VectorXd to_vector(std::string_view key, std::string_view value) {
  const auto parts = split(value, ',');
  Eigen::VectorXd v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v[static_cast<Eigen::Index>(i)] = to_double(key, parts[i]);
  return v;
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
  ConfigFile file;
  std::map<std::string, std::string>* current = &file.global;
  int line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      current = &file.sections[std::string(trim(line.substr(1, line.size() - 2)))];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    (*current)[key] = std::string(trim(line.substr(eq + 1)));
  }
  return file;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ConfigFile load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void apply_setting(LoopConfig& config, std::string_view key, std::string_view value) {
  if (key == "budget") {
    config.budget = to_int(key, value);
  } else if (key == "n_initial") {
    config.n_initial = to_int(key, value);
  } else if (key == "alpha") {
    config.acquisition.alpha = to_vector(key, value);
    if (config.alpha_rule.kind == AlphaRule::Kind::Piecewise) config.alpha_rule = AlphaRule::constant();
  } else if (key == "alpha_schedule") {
    std::vector<AlphaPhase> phases;
    for (std::string_view part : split(value, ';')) {
      const auto colon = part.find(':');
      if (colon == std::string_view::npos) bad_value(key, value);
      phases.push_back({to_int(key, trim(part.substr(0, colon))), to_vector(key, trim(part.substr(colon + 1)))});
    }
    config.alpha_rule = AlphaRule::piecewise(std::move(phases));
    config.acquisition.alpha = config.initial_alpha();
  } else if (key == "alpha_rule") {
    const auto parts = split(value, ':');
    if (parts.size() == 1 && parts[0] == "constant") {
      config.alpha_rule = AlphaRule::constant();
    } else if (parts.size() == 3 && parts[0] == "multiply") {
      config.alpha_rule = AlphaRule::multiply_on_infeasible(to_double(key, parts[1]), to_double(key, parts[2]));
    } else {
      bad_value(key, value);
    }
  } else if (key == "feasible_threshold") {
    config.acquisition.feasible_threshold =
        value == "inf" ? std::numeric_limits<int>::max() : to_int(key, value);
  } else if (key == "xi") {
    config.acquisition.xi = to_double(key, value);
  } else if (key == "candidate_count") {
    config.maximizer.candidate_count = to_int(key, value);
  } else if (key == "refine_steps") {
    config.maximizer.refine_steps = to_int(key, value);
  } else if (key == "gp_restarts") {
    config.gp.restarts = to_int(key, value);
  } else if (key == "kernel") {
    if (value == "matern52") {
      config.gp.family = KernelFamily::Matern52;
    } else if (value == "squared_exponential") {
      config.gp.family = KernelFamily::SquaredExponential;
    } else {
      bad_value(key, value);
    }
  } else {
    throw ConfigError("unknown setting '" + std::string(key) + "'");
  }
}

ExperimentSpec make_spec(const ConfigFile& file) {
  const auto get = [&](const char* key) -> std::optional<std::string> {
    const auto it = file.global.find(key);
    if (it == file.global.end()) return std::nullopt;
    return it->second;
  };

  const auto benchmark = get("benchmark");
  if (!benchmark) throw ConfigError("config is missing 'benchmark'");
  const BenchmarkDef def = make_benchmark(*benchmark);

  std::vector<Algorithm> algorithms;
  if (const auto list = get("algorithms")) {
    for (std::string_view name : split(*list, ',')) {
      const auto a = parse_algorithm(name);
      if (!a) throw ConfigError("unknown algorithm '" + std::string(name) + "'");
      algorithms.push_back(*a);
    }
  } else {
    for (const std::string& name : {std::string("emi1"), std::string("emi2"), std::string("ucbo"), std::string("eci")}) {
      if (file.sections.count(name)) algorithms.push_back(*parse_algorithm(name));
    }
    if (algorithms.empty()) algorithms = all_algorithms();
  }

  ExperimentSpec spec;
  spec.benchmark = *benchmark;
  spec.algorithms = algorithms;
  if (const auto v = get("replications")) spec.replications = to_int("replications", *v);
  if (const auto v = get("seed")) spec.base_seed = static_cast<std::uint64_t>(to_integer("seed", *v));
  if (const auto v = get("out")) spec.output_dir = *v;
  if (const auto v = get("jobs")) spec.jobs = to_int("jobs", *v);
  if (const auto v = get("format")) {
    const auto f = parse_output_format(*v);
    if (!f) bad_value("format", *v);
    spec.format = *f;
  }

  static const std::vector<std::string> kSpecKeys = {"benchmark", "algorithms", "replications",
                                                     "seed", "out", "jobs", "format"};
  for (const auto& [name, section] : file.sections) {
    if (!parse_algorithm(name)) throw ConfigError("unknown algorithm section [" + name + "]");
  }
  for (Algorithm a : algorithms) {
    LoopConfig config = def.presets.at(a);
    for (const auto& [key, value] : file.global) {
      if (std::find(kSpecKeys.begin(), kSpecKeys.end(), key) == kSpecKeys.end()) apply_setting(config, key, value);
    }
    if (const auto it = file.sections.find(to_string(a)); it != file.sections.end()) {
      for (const auto& [key, value] : it->second) apply_setting(config, key, value);
    }
    spec.configs[a] = config;
  }
  spec.validate();
  return spec;
}

}  // namespace cbo
