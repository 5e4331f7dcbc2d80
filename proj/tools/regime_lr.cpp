// Command-line front end: simulate | estimate | test | mc.
//
// Configuration is a single JSON document with one flat section per command
// (unknown keys rejected, every field type- and range-checked); command-line
// flags override file values. Every output embeds the full effective
// configuration and seed and contains no timestamps, so reruns are
// byte-identical. Exit codes: 0 success, 2 input/config error, 3 numerical
// failure.
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regimelr/ar_fit.hpp"
#include "regimelr/ar_process.hpp"
#include "regimelr/estimation.hpp"
#include "regimelr/lr_test.hpp"
#include "regimelr/mixture.hpp"
#include "regimelr/montecarlo.hpp"
#include "regimelr/parallel.hpp"

using nlohmann::ordered_json;
using namespace regimelr;

namespace {

constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Small conversions.

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd json_vec(const ordered_json& a) {
  Eigen::VectorXd v(a.size());
  Eigen::Index i = 0;
  for (const auto& x : a) v(i++) = x.get<double>();
  return v;
}

std::string family_name(Family f) {
  return f == Family::LMAR ? "lmar" : "gmar";
}

Family parse_family(const std::string& s) {
  if (s == "lmar") return Family::LMAR;
  if (s == "gmar") return Family::GMAR;
  throw std::invalid_argument("family must be 'lmar' or 'gmar', got '" + s +
                              "'");
}

// ---------------------------------------------------------------------------
// Config schema: flat typed keys per command section.

enum class Kind { Int, Num, Bool, Str, NumArray, IntArray, StrArray };

struct KeySpec {
  const char* key;
  Kind kind;
};

const std::vector<KeySpec> kGaKeys = {
    {"ga_population", Kind::Int},        {"ga_generations", Kind::Int},
    {"ga_tournament", Kind::Int},        {"ga_blend_alpha", Kind::Num},
    {"ga_mutation_prob", Kind::Num},     {"ga_mutation_scale", Kind::Num},
    {"ga_mutation_decay", Kind::Num},    {"ga_elite", Kind::Int},
    {"ga_nm_max_evaluations", Kind::Int},{"ga_nm_tol_x", Kind::Num},
    {"ga_sigma2_lo_factor", Kind::Num},  {"ga_sigma2_hi_factor", Kind::Num},
    {"ga_intercept_sd_mult", Kind::Num},
};

const std::vector<KeySpec> kDgpKeys = {
    {"dgp", Kind::Str},           {"intercept", Kind::Num},
    {"coeffs", Kind::NumArray},   {"sigma2", Kind::Num},
    {"alpha", Kind::NumArray},    {"beta", Kind::NumArray},
    {"phi", Kind::NumArray},      {"varphi", Kind::NumArray},
};

std::vector<KeySpec> schema_for(const std::string& command) {
  std::vector<KeySpec> s;
  auto add = [&s](std::initializer_list<KeySpec> keys) {
    s.insert(s.end(), keys);
  };
  if (command == "simulate") {
    add({{"length", Kind::Int},
         {"presample", Kind::Int},
         {"seed", Kind::Int},
         {"m", Kind::Int}});
    s.insert(s.end(), kDgpKeys.begin(), kDgpKeys.end());
    return s;
  }
  if (command == "estimate" || command == "test") {
    add({{"family", Kind::Str},
         {"p", Kind::Int},
         {"m", Kind::Int},
         {"seed", Kind::Int},
         {"threads", Kind::Int},
         {"grid_file", Kind::Str}});
    s.insert(s.end(), kGaKeys.begin(), kGaKeys.end());
    if (command == "test")
      add({{"j_count", Kind::Int}, {"sim_eigen_floor_rel", Kind::Num}});
    return s;
  }
  if (command == "mc") {
    add({{"sample_sizes", Kind::IntArray},
         {"replications", Kind::Int},
         {"j_count", Kind::Int},
         {"levels", Kind::NumArray},
         {"p", Kind::Int},
         {"m", Kind::Int},
         {"families", Kind::StrArray},
         {"presample", Kind::Int},
         {"seed", Kind::Int},
         {"threads", Kind::Int},
         {"max_failure_rate", Kind::Num},
         {"sim_eigen_floor_rel", Kind::Num}});
    s.insert(s.end(), kGaKeys.begin(), kGaKeys.end());
    s.insert(s.end(), kDgpKeys.begin(), kDgpKeys.end());
    return s;
  }
  throw std::invalid_argument("unknown command section '" + command + "'");
}

void check_kind(const std::string& section, const std::string& key,
                const ordered_json& v, Kind kind) {
  const std::string where = "config " + section + "." + key;
  auto fail = [&where](const char* want) {
    throw std::invalid_argument(where + ": expected " + want);
  };
  switch (kind) {
    case Kind::Int:
      if (!v.is_number_integer()) fail("an integer");
      break;
    case Kind::Num:
      if (!v.is_number()) fail("a number");
      break;
    case Kind::Bool:
      if (!v.is_boolean()) fail("a boolean");
      break;
    case Kind::Str:
      if (!v.is_string()) fail("a string");
      break;
    case Kind::NumArray:
      if (!v.is_array()) fail("an array of numbers");
      for (const auto& x : v)
        if (!x.is_number()) fail("an array of numbers");
      break;
    case Kind::IntArray:
      if (!v.is_array()) fail("an array of integers");
      for (const auto& x : v)
        if (!x.is_number_integer()) fail("an array of integers");
      break;
    case Kind::StrArray:
      if (!v.is_array()) fail("an array of strings");
      for (const auto& x : v)
        if (!x.is_string()) fail("an array of strings");
      break;
  }
}

void validate_section(const std::string& name, const ordered_json& section) {
  if (!section.is_object())
    throw std::invalid_argument("config section '" + name +
                                "' must be an object");
  const std::vector<KeySpec> schema = schema_for(name);
  for (const auto& [key, value] : section.items()) {
    const KeySpec* found = nullptr;
    for (const KeySpec& ks : schema)
      if (key == ks.key) {
        found = &ks;
        break;
      }
    if (!found)
      throw std::invalid_argument("config " + name + ": unknown key '" + key +
                                  "'");
    check_kind(name, key, value, found->kind);
  }
}

ordered_json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config file " + path + ": " + e.what());
  }
  if (!doc.is_object())
    throw std::invalid_argument("config file must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "simulate" && key != "estimate" && key != "test" && key != "mc")
      throw std::invalid_argument("config: unknown section '" + key + "'");
    validate_section(key, value);
  }
  return doc;
}

// Defaults materialized in a fixed key order (this order is the order keys
// appear in serialized outputs).
void put_ga_defaults(ordered_json& s) {
  const GaConfig g;
  s["ga_population"] = g.population;
  s["ga_generations"] = g.generations;
  s["ga_tournament"] = g.tournament;
  s["ga_blend_alpha"] = g.blend_alpha;
  s["ga_mutation_prob"] = g.mutation_prob;
  s["ga_mutation_scale"] = g.mutation_scale;
  s["ga_mutation_decay"] = g.mutation_decay;
  s["ga_elite"] = g.elite;
  s["ga_nm_max_evaluations"] = g.nm_max_evaluations;
  s["ga_nm_tol_x"] = g.nm_tol_x;
  s["ga_sigma2_lo_factor"] = g.sigma2_lo_factor;
  s["ga_sigma2_hi_factor"] = g.sigma2_hi_factor;
  s["ga_intercept_sd_mult"] = g.intercept_sd_mult;
}

GaConfig ga_from(const ordered_json& s) {
  GaConfig g;
  g.population = s.at("ga_population").get<int>();
  g.generations = s.at("ga_generations").get<int>();
  g.tournament = s.at("ga_tournament").get<int>();
  g.blend_alpha = s.at("ga_blend_alpha").get<double>();
  g.mutation_prob = s.at("ga_mutation_prob").get<double>();
  g.mutation_scale = s.at("ga_mutation_scale").get<double>();
  g.mutation_decay = s.at("ga_mutation_decay").get<double>();
  g.elite = s.at("ga_elite").get<int>();
  g.nm_max_evaluations = s.at("ga_nm_max_evaluations").get<int>();
  g.nm_tol_x = s.at("ga_nm_tol_x").get<double>();
  g.sigma2_lo_factor = s.at("ga_sigma2_lo_factor").get<double>();
  g.sigma2_hi_factor = s.at("ga_sigma2_hi_factor").get<double>();
  g.intercept_sd_mult = s.at("ga_intercept_sd_mult").get<double>();
  if (g.population < 4) throw std::invalid_argument("ga_population must be >= 4");
  if (g.generations < 1) throw std::invalid_argument("ga_generations must be >= 1");
  if (g.tournament < 2) throw std::invalid_argument("ga_tournament must be >= 2");
  if (g.elite < 0 || g.elite >= g.population)
    throw std::invalid_argument("ga_elite must be in [0, ga_population)");
  if (!(g.blend_alpha > 0.0)) throw std::invalid_argument("ga_blend_alpha must be > 0");
  if (g.mutation_prob < 0.0 || g.mutation_prob > 1.0)
    throw std::invalid_argument("ga_mutation_prob must be in [0, 1]");
  if (!(g.mutation_scale > 0.0)) throw std::invalid_argument("ga_mutation_scale must be > 0");
  if (!(g.mutation_decay > 0.0 && g.mutation_decay <= 1.0))
    throw std::invalid_argument("ga_mutation_decay must be in (0, 1]");
  if (g.nm_max_evaluations < 0)
    throw std::invalid_argument("ga_nm_max_evaluations must be >= 0");
  if (!(g.nm_tol_x > 0.0)) throw std::invalid_argument("ga_nm_tol_x must be > 0");
  if (!(g.sigma2_lo_factor > 0.0 && g.sigma2_hi_factor > g.sigma2_lo_factor))
    throw std::invalid_argument(
        "require 0 < ga_sigma2_lo_factor < ga_sigma2_hi_factor");
  if (!(g.intercept_sd_mult > 0.0))
    throw std::invalid_argument("ga_intercept_sd_mult must be > 0");
  return g;
}

void put_dgp_defaults(ordered_json& s) {
  s["dgp"] = "ar";
  s["intercept"] = 0.0;
  s["coeffs"] = ordered_json::array({0.5});
  s["sigma2"] = 1.0;
  s["alpha"] = ordered_json::array();
  s["beta"] = ordered_json::array();
  s["phi"] = ordered_json::array();
  s["varphi"] = ordered_json::array();
}

ordered_json section_defaults(const std::string& command) {
  ordered_json s = ordered_json::object();
  if (command == "simulate") {
    s["length"] = 500;
    s["presample"] = 200;
    s["seed"] = 0;
    s["m"] = 1;
    put_dgp_defaults(s);
    return s;
  }
  if (command == "estimate" || command == "test") {
    s["family"] = "lmar";
    s["p"] = 1;
    s["m"] = 1;
    s["seed"] = 0;
    s["threads"] = 0;
    s["grid_file"] = "";
    if (command == "test") {
      s["j_count"] = 1000;
      s["sim_eigen_floor_rel"] = SimConfig{}.eigen_floor_rel;
    }
    put_ga_defaults(s);
    return s;
  }
  if (command == "mc") {
    const StudyConfig d;
    s["sample_sizes"] = d.sample_sizes;
    s["replications"] = d.replications;
    s["j_count"] = d.j_count;
    s["levels"] = d.levels;
    s["p"] = d.p;
    s["m"] = d.m;
    s["families"] = ordered_json::array({"lmar", "gmar"});
    s["presample"] = d.presample;
    s["seed"] = 0;
    s["threads"] = 0;
    s["max_failure_rate"] = d.max_failure_rate;
    s["sim_eigen_floor_rel"] = SimConfig{}.eigen_floor_rel;
    put_ga_defaults(s);
    put_dgp_defaults(s);
    return s;
  }
  throw std::invalid_argument("unknown command '" + command + "'");
}

// Flag values captured by CLI11; applied on top of the config file section.
struct FlagOverrides {
  std::optional<std::string> family;
  std::optional<int> p;
  std::optional<int> m;
  std::optional<std::string> grid_file;
  std::optional<int> j_count;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void apply_flag(ordered_json& section, const std::string& command,
                const char* key, const ordered_json& value) {
  const std::vector<KeySpec> schema = schema_for(command);
  for (const KeySpec& ks : schema)
    if (std::strcmp(ks.key, key) == 0) {
      section[key] = value;
      return;
    }
  throw std::invalid_argument("flag --" + std::string(key) +
                              " does not apply to '" + command + "'");
}

// Effective section = defaults <- config file section <- flags; validated.
ordered_json effective_section(const std::string& command,
                               const ordered_json& config_doc,
                               const FlagOverrides& flags) {
  ordered_json s = section_defaults(command);
  if (config_doc.contains(command))
    for (const auto& [key, value] : config_doc.at(command).items())
      s[key] = value;
  if (flags.family) apply_flag(s, command, "family", *flags.family);
  if (flags.p) apply_flag(s, command, "p", *flags.p);
  if (flags.m) apply_flag(s, command, "m", *flags.m);
  if (flags.grid_file) apply_flag(s, command, "grid_file", *flags.grid_file);
  if (flags.j_count) apply_flag(s, command, "j_count", *flags.j_count);
  if (flags.seed) apply_flag(s, command, "seed", *flags.seed);
  if (flags.threads) apply_flag(s, command, "threads", *flags.threads);
  validate_section(command, s);
  return s;
}

// ---------------------------------------------------------------------------
// CSV input/output.

Eigen::VectorXd load_series_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open input file: " + path);
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' ||
                             line.back() == '\t'))
      line.pop_back();
    std::size_t start = 0;
    while (start < line.size() && (line[start] == ' ' || line[start] == '\t'))
      ++start;
    if (start == line.size()) continue;  // blank line
    const std::string token = line.substr(start);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || errno == ERANGE ||
        !std::isfinite(v))
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": malformed value '" + token + "'");
    values.push_back(v);
  }
  if (values.empty())
    throw std::invalid_argument(path + ": no observations found");
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

void write_series_csv(const std::string& path, const Eigen::VectorXd& series) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write output file: " + path);
  for (Eigen::Index i = 0; i < series.size(); ++i)
    std::fprintf(f, "%.17g\n", series(i));
  std::fclose(f);
}

void write_json_file(const std::string& path, const ordered_json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path);
  out << doc.dump(2) << '\n';
}

// Grid file: one grid point per line, comma-separated values. GMAR points
// are single numbers in (0, 1); LMAR points have m + 1 entries with a
// nonzero slope part.
AlphaGrid load_grid_file(const std::string& path, Family family, int m) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open grid file: " + path);
  AlphaGrid grid;
  grid.family = family;
  const int arity = family == Family::GMAR ? 1 : m + 1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty()) continue;
    std::vector<double> point;
    std::stringstream ss(line);
    std::string token;
    while (std::getline(ss, token, ',')) {
      errno = 0;
      char* end = nullptr;
      const double v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size() || errno == ERANGE ||
          !std::isfinite(v))
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": malformed grid value '" + token + "'");
      point.push_back(v);
    }
    if (static_cast<int>(point.size()) != arity)
      throw std::invalid_argument(
          path + ":" + std::to_string(line_no) + ": expected " +
          std::to_string(arity) + " values per grid point, got " +
          std::to_string(point.size()));
    if (family == Family::GMAR && !(point[0] > 0.0 && point[0] < 1.0))
      throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                  ": mixing proportion must lie in (0, 1)");
    if (family == Family::LMAR) {
      bool nonzero = false;
      for (int j = 1; j <= m; ++j) nonzero = nonzero || point[j] != 0.0;
      if (!nonzero)
        throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                    ": logistic slope part must be nonzero");
    }
    grid.points.push_back(Eigen::Map<Eigen::VectorXd>(point.data(), arity));
  }
  if (grid.points.empty())
    throw std::invalid_argument(path + ": empty grid file");
  return grid;
}

// ---------------------------------------------------------------------------
// Shared JSON fragments.

ordered_json ar_params_json(const ArParams& params) {
  ordered_json j = ordered_json::object();
  j["intercept"] = params.intercept;
  j["coeffs"] = vec_json(params.coeffs);
  j["sigma2"] = params.sigma2;
  return j;
}

ordered_json null_fit_json(const ArParams& params, double loglik,
                           bool stationary) {
  ordered_json j = ar_params_json(params);
  j["loglik"] = loglik;
  j["stationary"] = stationary;
  return j;
}

ordered_json fit_json(const FitResult& fit) {
  ordered_json j = ordered_json::object();
  j["alpha"] = vec_json(fit.alpha);
  j["beta"] = vec_json(fit.params.beta);
  j["phi"] = vec_json(fit.params.phi);
  j["varphi"] = vec_json(fit.params.varphi);
  j["loglik"] = fit.loglik;
  j["converged"] = fit.converged;
  j["evaluations"] = fit.evaluations;
  return j;
}

ordered_json grid_json(const std::vector<Eigen::VectorXd>& points) {
  ordered_json a = ordered_json::array();
  for (const auto& p : points) a.push_back(vec_json(p));
  return a;
}

ordered_json report_header(const std::string& command,
                           const ordered_json& section) {
  ordered_json doc = ordered_json::object();
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = command;
  doc["config"] = ordered_json::object();
  doc["config"][command] = section;
  return doc;
}

// ---------------------------------------------------------------------------
// DGP construction shared by simulate and mc.

struct DgpSettings {
  Dgp dgp = Dgp::AR;
  ArParams ar;
  MixtureSpec mix_spec;
  MixtureParams mix_params;
};

DgpSettings dgp_from(const ordered_json& s, int m) {
  DgpSettings out;
  const std::string dgp = s.at("dgp").get<std::string>();
  if (dgp == "ar") {
    out.dgp = Dgp::AR;
    out.ar.intercept = s.at("intercept").get<double>();
    out.ar.coeffs = json_vec(s.at("coeffs"));
    out.ar.sigma2 = s.at("sigma2").get<double>();
    if (out.ar.p() < 1)
      throw std::invalid_argument("dgp 'ar' needs a nonempty 'coeffs' array");
    if (!(out.ar.sigma2 > 0.0))
      throw std::invalid_argument("dgp sigma2 must be > 0");
    if (!check_stationarity(out.ar.coeffs))
      throw std::invalid_argument("dgp 'ar' coefficients are nonstationary");
    return out;
  }
  if (dgp != "lmar" && dgp != "gmar")
    throw std::invalid_argument("dgp must be 'ar', 'lmar' or 'gmar'");
  out.dgp = dgp == "lmar" ? Dgp::LMAR : Dgp::GMAR;
  out.mix_spec.family = dgp == "lmar" ? Family::LMAR : Family::GMAR;
  out.mix_spec.m = m;
  out.mix_params.alpha = json_vec(s.at("alpha"));
  out.mix_params.beta = json_vec(s.at("beta"));
  out.mix_params.phi = json_vec(s.at("phi"));
  out.mix_params.varphi = json_vec(s.at("varphi"));
  const int q2 = static_cast<int>(out.mix_params.phi.size());
  // q2 = p + 2 (lmar) or p + 1 (gmar) recovers p from the block length.
  out.mix_spec.p =
      out.mix_spec.family == Family::LMAR ? q2 - 2 : q2 - 1;
  if (out.mix_spec.p < 1)
    throw std::invalid_argument("dgp '" + dgp +
                                "': 'phi' block is too short for any p >= 1");
  out.mix_spec.validate();
  return out;
}

// ---------------------------------------------------------------------------
// simulate: write a series CSV plus a sidecar JSON with the DGP and seed.

int cmd_simulate(const ordered_json& s, const std::string& out_path) {
  const int length = s.at("length").get<int>();
  const int presample = s.at("presample").get<int>();
  const std::uint64_t seed = s.at("seed").get<std::uint64_t>();
  const int m = s.at("m").get<int>();
  if (length < 1) throw std::invalid_argument("length must be >= 1");
  if (presample < 0) throw std::invalid_argument("presample must be >= 0");
  if (m < 1) throw std::invalid_argument("m must be >= 1");

  const DgpSettings dgp = dgp_from(s, m);
  Eigen::VectorXd series;
  if (dgp.dgp == Dgp::AR)
    series = simulate_ar(dgp.ar, length, presample, seed);
  else
    series =
        simulate_mixture(dgp.mix_spec, dgp.mix_params, length, presample, seed);

  write_series_csv(out_path, series);
  ordered_json meta = report_header("simulate", s);
  meta["rows"] = static_cast<int>(series.size());
  meta["observations"] = length;
  meta["initial_values"] =
      static_cast<int>(series.size()) - length;
  write_json_file(out_path + ".meta.json", meta);
  std::cerr << "wrote " << out_path << " and " << out_path << ".meta.json\n";
  return 0;
}

// ---------------------------------------------------------------------------
// estimate: null fit plus the profile of mixture fits over the grid.

int cmd_estimate(const ordered_json& s, const std::string& input,
                 const std::string& out_path) {
  MixtureSpec spec;
  spec.family = parse_family(s.at("family").get<std::string>());
  spec.p = s.at("p").get<int>();
  spec.m = s.at("m").get<int>();
  spec.validate();
  const std::uint64_t seed = s.at("seed").get<std::uint64_t>();
  const int threads = effective_threads(s.at("threads").get<int>());

  const Eigen::VectorXd series = load_series_csv(input);
  if (series.size() < spec.p + 50)
    throw std::invalid_argument("series too short: need at least p + 50 = " +
                                std::to_string(spec.p + 50) + " rows, got " +
                                std::to_string(series.size()));

  const std::string grid_file = s.at("grid_file").get<std::string>();
  const AlphaGrid grid = grid_file.empty()
                             ? default_grid(spec)
                             : load_grid_file(grid_file, spec.family, spec.m);

  GaConfig ga = ga_from(s);
  ga.seed = seed;
  const ArFit null_fit = fit_ar(series, spec.p);
  const std::vector<FitResult> fits =
      profile_alpha(spec, series, grid, null_fit, ga, threads);

  int best = 0;
  for (int i = 1; i < static_cast<int>(fits.size()); ++i)
    if (fits[i].loglik > fits[best].loglik) best = i;

  ordered_json doc = report_header("estimate", s);
  doc["input"] = input;
  doc["family"] = family_name(spec.family);
  doc["p"] = spec.p;
  doc["m"] = spec.m;
  doc["observations"] = static_cast<int>(series.size()) - spec.p;
  doc["null_fit"] =
      null_fit_json(null_fit.params, null_fit.loglik, null_fit.stationary);
  doc["grid"] = grid_json(grid.points);
  ordered_json fits_json = ordered_json::array();
  for (const FitResult& f : fits) fits_json.push_back(fit_json(f));
  doc["fits"] = fits_json;
  doc["best_index"] = best;
  doc["best"] = fit_json(fits[best]);
  write_json_file(out_path, doc);
  std::cerr << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// test: end-to-end LR test with multiplier p-value.

int cmd_test(const ordered_json& s, const std::string& input,
             const std::string& out_path) {
  MixtureSpec spec;
  spec.family = parse_family(s.at("family").get<std::string>());
  spec.p = s.at("p").get<int>();
  spec.m = s.at("m").get<int>();
  spec.validate();

  const Eigen::VectorXd series = load_series_csv(input);
  if (series.size() < spec.p + 50)
    throw std::invalid_argument("series too short: need at least p + 50 = " +
                                std::to_string(spec.p + 50) + " rows, got " +
                                std::to_string(series.size()));

  LrTestConfig cfg;
  const std::string grid_file = s.at("grid_file").get<std::string>();
  if (!grid_file.empty())
    cfg.grid = load_grid_file(grid_file, spec.family, spec.m);
  cfg.j_count = s.at("j_count").get<int>();
  if (cfg.j_count < 1) throw std::invalid_argument("j_count must be >= 1");
  cfg.seed = s.at("seed").get<std::uint64_t>();
  cfg.threads = effective_threads(s.at("threads").get<int>());
  cfg.ga = ga_from(s);
  cfg.sim.eigen_floor_rel = s.at("sim_eigen_floor_rel").get<double>();
  if (!(cfg.sim.eigen_floor_rel > 0.0))
    throw std::invalid_argument("sim_eigen_floor_rel must be > 0");

  const LrTestReport rep = run_test(spec, series, cfg);

  ordered_json doc = report_header("test", s);
  doc["input"] = input;
  doc["family"] = family_name(spec.family);
  doc["p"] = spec.p;
  doc["m"] = spec.m;
  doc["observations"] = static_cast<int>(series.size()) - spec.p;
  doc["grid"] = grid_json(rep.grid_points);
  doc["lr_stat"] = rep.lr_stat;
  doc["per_alpha"] = rep.per_alpha;
  doc["argmax"] = rep.argmax;
  doc["argmax_alpha"] = vec_json(rep.grid_points[rep.argmax]);
  doc["p_value"] = rep.p_value;
  doc["null_fit"] =
      null_fit_json(rep.null_params, rep.null_loglik, rep.null_stationary);
  ordered_json diag = ordered_json::object();
  diag["fit_converged"] = rep.fit_converged;
  diag["fit_evaluations"] = rep.fit_evaluations;
  diag["eigen_lift_count"] = rep.eigen_lift_count;
  diag["single_draw_shortcut"] = rep.single_draw_shortcut;
  doc["diagnostics"] = diag;
  doc["seed"] = rep.seed;
  doc["j_count"] = rep.j_count;
  doc["null_sample"] = rep.null_sample;
  write_json_file(out_path, doc);

  // The console echo serializes through the same JSON dump as the file so
  // the printed p-value matches the stored field byte for byte.
  std::cout << "lr_stat " << ordered_json(rep.lr_stat).dump() << "\n";
  std::cout << "p_value " << ordered_json(rep.p_value).dump() << "\n";
  std::cout << "argmax_alpha " << vec_json(rep.grid_points[rep.argmax]).dump()
            << "\n";
  std::cerr << "wrote " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// mc: size or power study; CSV rejection table plus JSON p-value archive.

std::string level_label(double level) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", level * 100.0);
  return buf;
}

int cmd_mc(const ordered_json& s, const std::string& out_prefix) {
  StudyConfig cfg;
  const int m = s.at("m").get<int>();
  const DgpSettings dgp = dgp_from(s, m);
  cfg.dgp = dgp.dgp;
  cfg.ar_params = dgp.ar;
  cfg.mix_spec = dgp.mix_spec;
  cfg.mix_params = dgp.mix_params;
  cfg.sample_sizes = s.at("sample_sizes").get<std::vector<int>>();
  cfg.replications = s.at("replications").get<int>();
  cfg.j_count = s.at("j_count").get<int>();
  cfg.levels = s.at("levels").get<std::vector<double>>();
  cfg.p = s.at("p").get<int>();
  cfg.m = m;
  cfg.presample = s.at("presample").get<int>();
  cfg.seed = s.at("seed").get<std::uint64_t>();
  cfg.ga = ga_from(s);
  cfg.sim.eigen_floor_rel = s.at("sim_eigen_floor_rel").get<double>();
  cfg.threads = effective_threads(s.at("threads").get<int>());
  cfg.max_failure_rate = s.at("max_failure_rate").get<double>();

  cfg.test_families.clear();
  for (const auto& name : s.at("families"))
    cfg.test_families.push_back(parse_family(name.get<std::string>()));
  if (cfg.test_families.empty())
    throw std::invalid_argument("families must be nonempty");
  for (std::size_t i = 0; i + 1 < cfg.test_families.size(); ++i)
    for (std::size_t k = i + 1; k < cfg.test_families.size(); ++k)
      if (cfg.test_families[i] == cfg.test_families[k])
        throw std::invalid_argument("families must not repeat");

  if (cfg.sample_sizes.empty())
    throw std::invalid_argument("sample_sizes must be nonempty");
  for (int t : cfg.sample_sizes)
    if (t < cfg.p + 50)
      throw std::invalid_argument("sample sizes must be >= p + 50");
  if (cfg.replications < 1)
    throw std::invalid_argument("replications must be >= 1");
  if (cfg.j_count < 1) throw std::invalid_argument("j_count must be >= 1");
  if (cfg.levels.empty()) throw std::invalid_argument("levels must be nonempty");
  for (double lv : cfg.levels)
    if (!(lv > 0.0 && lv < 1.0))
      throw std::invalid_argument("levels must lie in (0, 1)");
  if (!(cfg.max_failure_rate >= 0.0 && cfg.max_failure_rate <= 1.0))
    throw std::invalid_argument("max_failure_rate must lie in [0, 1]");
  if (!(cfg.sim.eigen_floor_rel > 0.0))
    throw std::invalid_argument("sim_eigen_floor_rel must be > 0");
  if (cfg.presample < 0) throw std::invalid_argument("presample must be >= 0");

  const StudyResult res = cfg.dgp == Dgp::AR ? run_size_study(cfg)
                                             : run_power_study(cfg);

  // CSV: one row per sample size, one column block per test family.
  const std::string dgp_name = s.at("dgp").get<std::string>();
  const std::string csv_path = out_prefix + ".csv";
  std::FILE* f = std::fopen(csv_path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot write output file: " + csv_path);
  std::fprintf(f, "dgp,sample_size");
  for (Family fam : cfg.test_families)
    for (double lv : cfg.levels)
      std::fprintf(f, ",%s_%s", family_name(fam).c_str(),
                   level_label(lv).c_str());
  std::fprintf(f, "\n");
  // Cells are sample-size major, family minor.
  const int n_fam = static_cast<int>(cfg.test_families.size());
  for (std::size_t si = 0; si < cfg.sample_sizes.size(); ++si) {
    std::fprintf(f, "%s,%d", dgp_name.c_str(), cfg.sample_sizes[si]);
    for (int fi = 0; fi < n_fam; ++fi) {
      const StudyCell& cell = res.cells[si * n_fam + fi];
      for (double freq : cell.rejection_freq) std::fprintf(f, ",%.17g", freq);
    }
    std::fprintf(f, "\n");
  }
  std::fclose(f);

  ordered_json doc = report_header("mc", s);
  doc["levels"] = cfg.levels;
  ordered_json cells = ordered_json::array();
  for (const StudyCell& cell : res.cells) {
    ordered_json cj = ordered_json::object();
    cj["family"] = family_name(cell.family);
    cj["sample_size"] = cell.sample_size;
    cj["rejection_freq"] = cell.rejection_freq;
    cj["failures"] = cell.failures;
    cj["p_values"] = cell.p_values;  // NaN serializes as null
    cells.push_back(cj);
  }
  doc["cells"] = cells;
  doc["failed_replications"] = res.failed_replications;
  write_json_file(out_prefix + ".json", doc);
  std::cerr << "wrote " << csv_path << " and " << out_prefix << ".json\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Likelihood-ratio test of a linear AR(p) null against a two-regime "
      "mixture autoregression, with simulation-based critical values"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  FlagOverrides flags;
  std::string family_flag, grid_file_flag;
  int p_flag = 0, m_flag = 0, j_flag = 0, threads_flag = 0;
  std::uint64_t seed_flag = 0;

  auto add_common = [&](CLI::App* sub, const char* default_out) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--out", out_path, "output path")->default_str(default_out);
    sub->add_option("--family", family_flag, "test family: lmar or gmar");
    sub->add_option("--p", p_flag, "autoregressive order");
    sub->add_option("--m", m_flag, "logistic lag order (lmar)");
    sub->add_option("--grid-file", grid_file_flag,
                    "CSV of nuisance grid points, one per line");
    sub->add_option("--J", j_flag, "multiplier repetitions");
    sub->add_option("--seed", seed_flag, "RNG seed");
    sub->add_option("--threads", threads_flag,
                    "worker threads (0 = REGIME_LR_THREADS env, then cores)");
  };

  CLI::App* sim = app.add_subcommand("simulate", "simulate a series to CSV");
  add_common(sim, "series.csv");
  CLI::App* est = app.add_subcommand(
      "estimate", "profile the mixture likelihood over the nuisance grid");
  std::string est_input;
  est->add_option("input", est_input, "series CSV")->required();
  add_common(est, "estimate.json");
  CLI::App* tst =
      app.add_subcommand("test", "run the LR test with a multiplier p-value");
  std::string tst_input;
  tst->add_option("input", tst_input, "series CSV")->required();
  add_common(tst, "test_report.json");
  CLI::App* mc = app.add_subcommand("mc", "Monte Carlo size or power study");
  add_common(mc, "mc_study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    if (sub->count("--family")) flags.family = family_flag;
    if (sub->count("--p")) flags.p = p_flag;
    if (sub->count("--m")) flags.m = m_flag;
    if (sub->count("--grid-file")) flags.grid_file = grid_file_flag;
    if (sub->count("--J")) flags.j_count = j_flag;
    if (sub->count("--seed")) flags.seed = seed_flag;
    if (sub->count("--threads")) flags.threads = threads_flag;
    if (out_path.empty())
      out_path = command == "simulate"     ? "series.csv"
                 : command == "estimate"   ? "estimate.json"
                 : command == "test"       ? "test_report.json"
                                           : "mc_study";

    const ordered_json config_doc = config_path.empty()
                                        ? ordered_json::object()
                                        : load_config_file(config_path);
    const ordered_json section = effective_section(command, config_doc, flags);

    if (command == "simulate") return cmd_simulate(section, out_path);
    if (command == "estimate") return cmd_estimate(section, est_input, out_path);
    if (command == "test") return cmd_test(section, tst_input, out_path);
    return cmd_mc(section, out_path);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
