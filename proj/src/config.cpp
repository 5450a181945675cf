#include "zerostat/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zerostat/zeros.hpp"

namespace zerostat {

using nlohmann::ordered_json;

namespace {

#define ZEROSTAT_TOLERANCES(X)                                                                    \
  X(density) X(kernel_closed_form) X(st_closed_form) X(st_oracle) X(st_ratio_floor)               \
  X(near_diagonal) X(pl_relative) X(skewness) X(excess_kurtosis) X(ks) X(mean_sigmas)

ordered_json tolerances_json(const Tolerances &t) {
  ordered_json j;
#define X(name) j[#name] = t.name;
  ZEROSTAT_TOLERANCES(X)
#undef X
  return j;
}

ordered_json config_json(const RunConfig &c) {
  ordered_json j;
  j["degrees"] = c.degrees;
  j["samples"] = c.samples;
  j["master_seed"] = c.master_seed;
  j["perturbation"] = {{"c", c.perturbation.amplitude_c},
                       {"beta", c.perturbation.exponent_beta},
                       {"shape", c.perturbation.shape}};
  j["test_form"] = c.test_form;
  j["grid_level"] = c.grid_level;
  j["output_dir"] = c.output_dir;
  j["tolerances"] = tolerances_json(c.tolerances);
  return j;
}

void reject_unknown(const ordered_json &j, std::initializer_list<const char *> known,
                    const std::string &where) {
  for (const auto &[key, value] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char *k) { return key == k; }) == known.end())
      throw ConfigError("unknown key '" + where + key + "'");
  }
}

template <class T> void read(const ordered_json &j, const char *key, T &out, const std::string &where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception &) {
    throw ConfigError("field '" + where + key + "' has the wrong type");
  }
}

} // namespace

int RunConfig::level_for(int p) const { return grid_level > 0 ? grid_level : p + 8; }

void validate(const RunConfig &c) {
  if (c.degrees.empty()) throw ConfigError("degrees: at least one degree is required");
  for (int p : c.degrees)
    if (p < 1 || p > kMaxDegree)
      throw ConfigError("degrees: " + std::to_string(p) + " is outside [1, " + std::to_string(kMaxDegree) + "]");
  if (c.samples < 1) throw ConfigError("samples: must be positive");
  const auto &s = c.perturbation;
  if (!(s.amplitude_c >= 0.0) || !std::isfinite(s.amplitude_c))
    throw ConfigError("perturbation.c: must be finite and >= 0");
  if (!(s.exponent_beta >= 0.0 && s.exponent_beta <= 1.0))
    throw ConfigError("perturbation.beta: must lie in [0, 1] so that eta_p decreases");
  const auto shapes = perturbation_shapes();
  if (std::find(shapes.begin(), shapes.end(), s.shape) == shapes.end())
    throw ConfigError("perturbation.shape: unknown shape '" + s.shape + "'");
  const auto forms = test_form_names();
  if (std::find(forms.begin(), forms.end(), c.test_form) == forms.end())
    throw ConfigError("test_form: unknown test form '" + c.test_form + "'");
  if (c.grid_level < 0) throw ConfigError("grid_level: must be >= 0");
  for (int p : c.degrees)
    if (c.grid_level > 0 && c.grid_level < p + 2)
      throw ConfigError("grid_level: " + std::to_string(c.grid_level) + " is below p + 2 for p = " +
                        std::to_string(p));
  const auto t = tolerances_json(c.tolerances);
  for (const auto &[key, value] : t.items())
    if (!(value.get<double>() > 0.0)) throw ConfigError("tolerances." + key + ": must be positive");
}

std::string to_json(const RunConfig &c) { return config_json(c).dump(2); }

RunConfig config_from_json(const std::string &text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error &e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"degrees", "samples", "master_seed", "perturbation", "test_form", "grid_level",
                     "output_dir", "tolerances"}, "");
  RunConfig c;
  read(j, "degrees", c.degrees, "");
  read(j, "samples", c.samples, "");
  read(j, "master_seed", c.master_seed, "");
  read(j, "test_form", c.test_form, "");
  read(j, "grid_level", c.grid_level, "");
  read(j, "output_dir", c.output_dir, "");
  if (j.contains("perturbation")) {
    const auto &p = j["perturbation"];
    if (!p.is_object()) throw ConfigError("perturbation must be an object");
    reject_unknown(p, {"c", "beta", "shape"}, "perturbation.");
    read(p, "c", c.perturbation.amplitude_c, "perturbation.");
    read(p, "beta", c.perturbation.exponent_beta, "perturbation.");
    read(p, "shape", c.perturbation.shape, "perturbation.");
  }
  if (j.contains("tolerances")) {
    const auto &t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("tolerances must be an object");
    reject_unknown(t,
                   {
#define X(name) #name,
                       ZEROSTAT_TOLERANCES(X)
#undef X
                   },
                   "tolerances.");
#define X(name) read(t, #name, c.tolerances.name, "tolerances.");
    ZEROSTAT_TOLERANCES(X)
#undef X
  }
  return c;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const RunConfig &c) {
  auto j = config_json(c);
  j.erase("output_dir");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace zerostat
