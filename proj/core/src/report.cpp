#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "cbo/errors.hpp"
#include "cbo/harness.hpp"

namespace cbo {

namespace {

using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;
constexpr const char* kIterationAxis =
    "iteration 0 is the state after the initial design; iteration t >= 1 is the state after the "
    "t-th evaluation that follows it (resampling evaluations included)";

ordered_json to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from(const ordered_json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

ordered_json to_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::optional<double> optional_from(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string family_name(KernelFamily f) {
  return f == KernelFamily::Matern52 ? "matern52" : "squared_exponential";
}

std::string rule_name(AlphaRule::Kind k) {
  switch (k) {
    case AlphaRule::Kind::Constant: return "constant";
    case AlphaRule::Kind::MultiplyOnInfeasible: return "multiply_on_infeasible";
    case AlphaRule::Kind::Piecewise: return "piecewise";
  }
  return "?";
}

ordered_json config_to_json(const LoopConfig& c) {
  ordered_json phases = ordered_json::array();
  for (const AlphaPhase& p : c.alpha_rule.phases) {
    phases.push_back({{"start_iteration", p.start_iteration}, {"alpha", to_json(p.alpha)}});
  }
  return {
      {"acquisition", to_string(c.acquisition.kind)},
      {"alpha", to_json(c.acquisition.alpha)},
      {"beta", c.acquisition.beta},
      {"xi", c.acquisition.xi},
      {"feasible_threshold", c.acquisition.feasible_threshold},
      {"n_initial", c.n_initial},
      {"budget", c.budget},
      {"candidate_count", c.maximizer.candidate_count},
      {"refine_steps", c.maximizer.refine_steps},
      {"alpha_rule",
       {{"kind", rule_name(c.alpha_rule.kind)},
        {"factor", c.alpha_rule.factor},
        {"cap", c.alpha_rule.cap},
        {"phases", phases}}},
      {"gp",
       {{"kernel", family_name(c.gp.family)},
        {"restarts", c.gp.restarts},
        {"min_length_scale", c.gp.min_length_scale},
        {"max_length_scale", c.gp.max_length_scale},
        {"min_signal_variance", c.gp.min_signal_variance},
        {"max_signal_variance", c.gp.max_signal_variance},
        {"initial_step", c.gp.initial_step},
        {"min_step", c.gp.min_step},
        {"max_evaluations", c.gp.max_evaluations}}},
  };
}

LoopConfig config_from_json(const ordered_json& j) {
  LoopConfig c;
  const std::string kind = j.at("acquisition").get<std::string>();
  for (AcquisitionKind k : {AcquisitionKind::EI, AcquisitionKind::ECI, AcquisitionKind::EMI1,
                            AcquisitionKind::EMI2, AcquisitionKind::UECI}) {
    if (to_string(k) == kind) c.acquisition.kind = k;
  }
  c.acquisition.alpha = vector_from(j.at("alpha"));
  c.acquisition.beta = j.at("beta").get<double>();
  c.acquisition.xi = j.at("xi").get<double>();
  c.acquisition.feasible_threshold = j.at("feasible_threshold").get<int>();
  c.n_initial = j.at("n_initial").get<int>();
  c.budget = j.at("budget").get<int>();
  c.maximizer.candidate_count = j.at("candidate_count").get<int>();
  c.maximizer.refine_steps = j.at("refine_steps").get<int>();

  const ordered_json& rule = j.at("alpha_rule");
  const std::string rk = rule.at("kind").get<std::string>();
  for (AlphaRule::Kind k : {AlphaRule::Kind::Constant, AlphaRule::Kind::MultiplyOnInfeasible,
                            AlphaRule::Kind::Piecewise}) {
    if (rule_name(k) == rk) c.alpha_rule.kind = k;
  }
  c.alpha_rule.factor = rule.at("factor").get<double>();
  c.alpha_rule.cap = rule.at("cap").get<double>();
  for (const ordered_json& p : rule.at("phases")) {
    c.alpha_rule.phases.push_back({p.at("start_iteration").get<int>(), vector_from(p.at("alpha"))});
  }

  const ordered_json& gp = j.at("gp");
  c.gp.family = gp.at("kernel").get<std::string>() == "matern52" ? KernelFamily::Matern52
                                                                  : KernelFamily::SquaredExponential;
  c.gp.restarts = gp.at("restarts").get<int>();
  c.gp.min_length_scale = gp.at("min_length_scale").get<double>();
  c.gp.max_length_scale = gp.at("max_length_scale").get<double>();
  c.gp.min_signal_variance = gp.at("min_signal_variance").get<double>();
  c.gp.max_signal_variance = gp.at("max_signal_variance").get<double>();
  c.gp.initial_step = gp.at("initial_step").get<double>();
  c.gp.min_step = gp.at("min_step").get<double>();
  c.gp.max_evaluations = gp.at("max_evaluations").get<int>();
  return c;
}

ordered_json record_to_json(const TraceRecord& r) {
  return {
      {"evaluation", r.evaluation},
      {"iteration", r.iteration},
      {"phase", to_string(r.phase)},
      {"x", to_json(r.x)},
      {"f", r.f_value},
      {"c", to_json(r.c_values)},
      {"feasible", r.feasible},
      {"best_feasible", to_json(r.best_feasible_f)},
      {"beta", to_json(r.beta)},
      {"alpha", to_json(r.alpha)},
  };
}

TraceRecord record_from_json(const ordered_json& j) {
  TraceRecord r;
  r.evaluation = j.at("evaluation").get<int>();
  r.iteration = j.at("iteration").get<int>();
  const auto phase = parse_record_phase(j.at("phase").get<std::string>());
  if (!phase) throw Error("unknown record phase in results JSON");
  r.phase = *phase;
  r.x = vector_from(j.at("x"));
  r.f_value = j.at("f").get<double>();
  r.c_values = vector_from(j.at("c"));
  r.feasible = j.at("feasible").get<bool>();
  r.best_feasible_f = optional_from(j.at("best_feasible"));
  r.beta = optional_from(j.at("beta"));
  r.alpha = vector_from(j.at("alpha"));
  return r;
}

template <typename T>
ordered_json optional_series(const std::vector<std::optional<T>>& series) {
  ordered_json out = ordered_json::array();
  for (const auto& v : series) out.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
  return out;
}

std::vector<std::optional<double>> optional_series_from(const ordered_json& j) {
  std::vector<std::optional<double>> out;
  for (const ordered_json& v : j) out.push_back(optional_from(v));
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string format_number(std::optional<double> value) {
  if (!value) return "NA";
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", *value);
  return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_csv(const AggregateResult& result) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const AlgorithmResult& ar : result.algorithms) {
    const std::string name = to_string(ar.algorithm);
    for (std::size_t t = 0; t < ar.median.size(); ++t) {
      out += name;
      out += ',' + std::to_string(t);
      out += ',' + format_number(ar.median[t]);
      out += ',' + format_number(ar.p25[t]);
      out += ',' + format_number(ar.p75[t]);
      out += ',' + std::to_string(ar.n_feasible_runs[t]);
      out += '\n';
    }
  }
  return out;
}

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0;
  bool header = true;
  const auto number = [](std::string_view field) -> std::optional<double> {
    if (field == "NA") return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      throw Error("malformed CSV number '" + std::string(field) + "'");
    }
    return v;
  };
  const auto integer = [](std::string_view field) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
      throw Error("malformed CSV integer '" + std::string(field) + "'");
    }
    return v;
  };
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (header) {
      if (line != kCsvHeader) throw Error("unexpected CSV header");
      header = false;
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw Error("CSV row does not have 6 fields");
    CsvRow row;
    row.algorithm = std::string(f[0]);
    row.iteration = integer(f[1]);
    row.median = number(f[2]);
    row.p25 = number(f[3]);
    row.p75 = number(f[4]);
    row.n_feasible_runs = integer(f[5]);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_json(const AggregateResult& result) {
  const ExperimentSpec& spec = result.spec;
  ordered_json j;
  j["format_version"] = kFormatVersion;
  j["iteration_axis"] = kIterationAxis;

  ordered_json algorithms = ordered_json::array();
  for (Algorithm a : spec.algorithms) algorithms.push_back(to_string(a));
  j["spec"] = {
      {"benchmark", spec.benchmark},
      {"algorithms", algorithms},
      {"replications", spec.replications},
      {"base_seed", spec.base_seed},
  };

  ordered_json results = ordered_json::array();
  for (const AlgorithmResult& ar : result.algorithms) {
    ordered_json runs = ordered_json::array();
    for (const Replication& r : ar.runs) {
      ordered_json trace = ordered_json::array();
      for (const TraceRecord& rec : r.records) trace.push_back(record_to_json(rec));
      runs.push_back({
          {"seed", r.seed},
          {"ok", r.ok},
          {"error", r.error},
          {"first_feasible_evaluation",
           r.first_feasible_evaluation ? ordered_json(*r.first_feasible_evaluation) : ordered_json(nullptr)},
          {"best_feasible", optional_series(r.best_feasible)},
          {"trace", trace},
      });
    }
    results.push_back({
        {"algorithm", to_string(ar.algorithm)},
        {"config", config_to_json(ar.config)},
        {"failures", ar.failures},
        {"aggregate",
         {{"median", optional_series(ar.median)},
          {"p25", optional_series(ar.p25)},
          {"p75", optional_series(ar.p75)},
          {"n_feasible_runs", ar.n_feasible_runs}}},
        {"runs", runs},
    });
  }
  j["results"] = results;
  return j.dump(1) + "\n";
}

AggregateResult parse_json(std::string_view text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed results JSON: ") + e.what());
  }
  if (j.value("format_version", 0) != kFormatVersion) throw Error("unsupported results JSON version");

  AggregateResult result;
  const ordered_json& spec = j.at("spec");
  result.spec.benchmark = spec.at("benchmark").get<std::string>();
  result.spec.replications = spec.at("replications").get<int>();
  result.spec.base_seed = spec.at("base_seed").get<std::uint64_t>();
  for (const ordered_json& name : spec.at("algorithms")) {
    const auto a = parse_algorithm(name.get<std::string>());
    if (!a) throw Error("unknown algorithm in results JSON");
    result.spec.algorithms.push_back(*a);
  }

  for (const ordered_json& aj : j.at("results")) {
    AlgorithmResult ar;
    const auto a = parse_algorithm(aj.at("algorithm").get<std::string>());
    if (!a) throw Error("unknown algorithm in results JSON");
    ar.algorithm = *a;
    ar.config = config_from_json(aj.at("config"));
    result.spec.configs[ar.algorithm] = ar.config;
    ar.failures = aj.at("failures").get<int>();
    const ordered_json& agg = aj.at("aggregate");
    ar.median = optional_series_from(agg.at("median"));
    ar.p25 = optional_series_from(agg.at("p25"));
    ar.p75 = optional_series_from(agg.at("p75"));
    ar.n_feasible_runs = agg.at("n_feasible_runs").get<std::vector<int>>();
    for (const ordered_json& rj : aj.at("runs")) {
      Replication r;
      r.seed = rj.at("seed").get<std::uint64_t>();
      r.ok = rj.at("ok").get<bool>();
      r.error = rj.at("error").get<std::string>();
      if (!rj.at("first_feasible_evaluation").is_null()) {
        r.first_feasible_evaluation = rj.at("first_feasible_evaluation").get<int>();
      }
      r.best_feasible = optional_series_from(rj.at("best_feasible"));
      for (const ordered_json& rec : rj.at("trace")) r.records.push_back(record_from_json(rec));
      ar.runs.push_back(std::move(r));
    }
    result.algorithms.push_back(std::move(ar));
  }
  return result;
}

void write_results(const AggregateResult& result, const std::filesystem::path& dir,
                   OutputFormat format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (format == OutputFormat::Csv || format == OutputFormat::Both) {
    write_text(dir / "results.csv", format_csv(result));
  }
  if (format == OutputFormat::Json || format == OutputFormat::Both) {
    write_text(dir / "results.json", format_json(result));
  }
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  ordered_json meta = {
      {"written_unix_ms", std::chrono::duration_cast<std::chrono::milliseconds>(now).count()},
      {"jobs", result.spec.jobs},
  };
  write_text(dir / "metadata.json", meta.dump(1) + "\n");
}

}  // namespace cbo
