#include "phipd/cli/run_config.hpp"

#include "phipd/error.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace phipd::cli {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

struct TypeError {
  std::string expected;
};

double as_number(const json& v) {
  if (!v.is_number()) throw TypeError{"a number"};
  return v.get<double>();
}

int as_int(const json& v) {
  if (!v.is_number_integer()) throw TypeError{"an integer"};
  return v.get<int>();
}

std::uint64_t as_u64(const json& v) {
  if (!v.is_number_unsigned()) throw TypeError{"a non-negative integer"};
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v) {
  if (!v.is_boolean()) throw TypeError{"true or false"};
  return v.get<bool>();
}

template <typename Parse>
auto as_enum(const json& v, Parse parse, const char* choices) {
  if (!v.is_string()) throw TypeError{std::string("one of ") + choices};
  try {
    return parse(v.get<std::string>());
  } catch (const InvalidArgument&) {
    throw TypeError{std::string("one of ") + choices};
  }
}

std::optional<double> as_cutoff(const json& v) {
  if (v.is_number()) {
    const double r = v.get<double>();
    if (!(r >= 0.0)) throw TypeError{"a non-negative number, \"full\" or \"none\""};
    return r;
  }
  if (v.is_string()) {
    try {
      return parse_cutoff(v.get<std::string>());
    } catch (const InvalidArgument&) {
    }
  }
  throw TypeError{"a non-negative number, \"full\" or \"none\""};
}

void apply_section(const json& section, const std::string& prefix,
                   const std::map<std::string, Setter>& setters, std::vector<std::string>& errors) {
  if (!section.is_object()) {
    errors.push_back(prefix + ": expected an object");
    return;
  }
  for (const auto& [key, value] : section.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) {
      errors.push_back(prefix + "." + key + ": unknown key");
      continue;
    }
    try {
      it->second(value);
    } catch (const TypeError& e) {
      errors.push_back(prefix + "." + key + ": expected " + e.expected);
    }
  }
}

// validate() messages end in a space-separated list of bad field names.
void collect_invalid(const std::function<void()>& validate, const std::string& prefix,
                     std::vector<std::string>& errors) {
  try {
    validate();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    std::istringstream fields(colon == std::string::npos ? msg : msg.substr(colon + 1));
    std::string field;
    while (fields >> field) errors.push_back(prefix + "." + field + ": invalid value");
  }
}

}  // namespace

std::optional<double> parse_cutoff(const std::string& text) {
  if (text == "none") return std::nullopt;
  if (text == "full" || text == "inf") return noise::kFullCutoff;
  double r = 0.0;
  std::size_t used = 0;
  try {
    r = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(r >= 0.0)) {
    throw InvalidArgument("cutoff must be a non-negative number, 'full' or 'none', got '" + text + "'");
  }
  return r;
}

std::string format_cutoff(const std::optional<double>& cutoff) {
  if (!cutoff) return "none";
  if (std::isinf(*cutoff)) return "full";
  std::ostringstream ss;
  ss << *cutoff;
  return ss.str();
}

noise::MagnitudeSource parse_magnitude_source(const std::string& text) {
  if (text == "gaussian_fft") return noise::MagnitudeSource::gaussian_fft;
  if (text == "rayleigh") return noise::MagnitudeSource::rayleigh;
  throw InvalidArgument("magnitude source must be gaussian_fft or rayleigh, got '" + text + "'");
}

std::string to_string(noise::MagnitudeSource source) {
  return source == noise::MagnitudeSource::rayleigh ? "rayleigh" : "gaussian_fft";
}

denoiser::Objective parse_objective(const std::string& text) {
  if (text == "flow") return denoiser::Objective::flow;
  if (text == "ddpm") return denoiser::Objective::ddpm;
  throw InvalidArgument("objective must be flow or ddpm, got '" + text + "'");
}

std::string to_string(denoiser::Objective objective) {
  return objective == denoiser::Objective::ddpm ? "ddpm" : "flow";
}

denoiser::NoiseMode parse_noise_mode(const std::string& text) {
  if (text == "structured") return denoiser::NoiseMode::structured;
  if (text == "gaussian") return denoiser::NoiseMode::gaussian;
  throw InvalidArgument("noise mode must be structured or gaussian, got '" + text + "'");
}

std::string to_string(denoiser::NoiseMode mode) {
  return mode == denoiser::NoiseMode::gaussian ? "gaussian" : "structured";
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("run config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("run config must be a JSON object");

  RunConfig cfg;
  std::vector<std::string> errors;

  auto& c = cfg.corpus;
  const std::map<std::string, Setter> corpus_keys = {
      {"count", [&](const json& v) { c.count = as_int(v); }},
      {"size", [&](const json& v) { c.size = as_int(v); }},
      {"seed", [&](const json& v) { c.seed = as_u64(v); }},
      {"min_objects", [&](const json& v) { c.min_objects = as_int(v); }},
      {"max_objects", [&](const json& v) { c.max_objects = as_int(v); }},
  };

  auto& n = cfg.noise;
  const std::map<std::string, Setter> noise_keys = {
      {"magnitude_source",
       [&](const json& v) { n.magnitude_source = as_enum(v, parse_magnitude_source, "gaussian_fft, rayleigh"); }},
      {"cutoff_radius", [&](const json& v) { n.cutoff_radius = as_cutoff(v); }},
      {"sigma", [&](const json& v) { n.sigma = as_number(v); }},
      {"normalize", [&](const json& v) { n.normalize = as_bool(v); }},
      {"seed", [&](const json& v) { n.seed = as_u64(v); }},
  };

  auto& t = cfg.train;
  std::map<std::string, Setter> radius_keys = {
      {"r0", [&](const json& v) { t.radius_sampler.r0 = as_number(v); }},
      {"lambda", [&](const json& v) { t.radius_sampler.lambda = as_number(v); }},
  };
  const std::map<std::string, Setter> train_keys = {
      {"objective", [&](const json& v) { t.objective = as_enum(v, parse_objective, "flow, ddpm"); }},
      {"noise_mode",
       [&](const json& v) { t.noise_mode = as_enum(v, parse_noise_mode, "structured, gaussian"); }},
      {"epochs", [&](const json& v) { t.epochs = as_int(v); }},
      {"batch_size", [&](const json& v) { t.batch_size = as_int(v); }},
      {"learning_rate", [&](const json& v) { t.learning_rate = as_number(v); }},
      {"radius_sampler", [&](const json& v) { apply_section(v, "train.radius_sampler", radius_keys, errors); }},
      {"sigma", [&](const json& v) { t.sigma = as_number(v); }},
      {"magnitude_source",
       [&](const json& v) { t.magnitude_source = as_enum(v, parse_magnitude_source, "gaussian_fft, rayleigh"); }},
      {"normalize", [&](const json& v) { t.normalize = as_bool(v); }},
      {"ddpm_steps", [&](const json& v) { t.ddpm_steps = as_int(v); }},
      {"beta_start", [&](const json& v) { t.beta_start = as_number(v); }},
      {"beta_end", [&](const json& v) { t.beta_end = as_number(v); }},
      {"seed", [&](const json& v) { t.seed = as_u64(v); }},
      {"threads", [&](const json& v) { t.threads = as_int(v); }},
  };

  const std::map<std::string, Setter> sections = {
      {"corpus", [&](const json& v) { apply_section(v, "corpus", corpus_keys, errors); }},
      {"noise", [&](const json& v) { apply_section(v, "noise", noise_keys, errors); }},
      {"train", [&](const json& v) { apply_section(v, "train", train_keys, errors); }},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = sections.find(key);
    if (it == sections.end()) {
      errors.push_back(key + ": unknown section");
    } else {
      it->second(value);
    }
  }

  if (doc.contains("corpus")) collect_invalid([&] { c.validate(); }, "corpus", errors);
  if (doc.contains("noise")) collect_invalid([&] { n.validate(); }, "noise", errors);
  if (doc.contains("train")) collect_invalid([&] { t.validate(); }, "train", errors);

  if (!errors.empty()) {
    std::string msg = "invalid run config (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& e : errors) msg += "\n  " + e;
    throw InvalidArgument(msg);
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string dump_run_config(const RunConfig& config) {
  const auto& c = config.corpus;
  const auto& n = config.noise;
  const auto& t = config.train;
  json cutoff = n.cutoff_radius ? (std::isinf(*n.cutoff_radius) ? json("full") : json(*n.cutoff_radius))
                                : json("none");
  const json doc = {
      {"corpus",
       {{"count", c.count}, {"size", c.size}, {"seed", c.seed}, {"min_objects", c.min_objects},
        {"max_objects", c.max_objects}}},
      {"noise",
       {{"magnitude_source", to_string(n.magnitude_source)}, {"cutoff_radius", cutoff},
        {"sigma", n.sigma}, {"normalize", n.normalize}, {"seed", n.seed}}},
      {"train",
       {{"objective", to_string(t.objective)},
        {"noise_mode", to_string(t.noise_mode)},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"radius_sampler", {{"r0", t.radius_sampler.r0}, {"lambda", t.radius_sampler.lambda}}},
        {"sigma", t.sigma},
        {"magnitude_source", to_string(t.magnitude_source)},
        {"normalize", t.normalize},
        {"ddpm_steps", t.ddpm_steps},
        {"beta_start", t.beta_start},
        {"beta_end", t.beta_end},
        {"seed", t.seed},
        {"threads", t.threads}}},
  };
  return doc.dump(2) + "\n";
}

}  // namespace phipd::cli
