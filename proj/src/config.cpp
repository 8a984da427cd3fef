#include "depshap/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <optional>

#include "depshap/errors.hpp"
#include "depshap/format.hpp"
#include "depshap/parallel.hpp"

namespace depshap {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = value.find(',', start);
    const std::string_view part = trim(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
    if (!part.empty()) out.emplace_back(part);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw SchemaError("config key '" + key + "': expected a number, got '" + std::string(text) + "'");
  }
  return v;
}

long long to_integer(const std::string& key, std::string_view text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SchemaError("config key '" + key + "': expected an integer, got '" + std::string(text) + "'");
  }
  return v;
}

int to_int(const std::string& key, std::string_view text) {
  const long long v = to_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw SchemaError("config key '" + key + "': value out of range");
  }
  return static_cast<int>(v);
}

std::vector<double> to_doubles(const std::string& key, std::string_view text) {
  std::vector<double> out;
  for (const std::string& part : split_list(text)) out.push_back(to_double(key, part));
  if (out.empty()) throw SchemaError("config key '" + key + "': empty list");
  return out;
}

template <typename E>
E to_enum(const std::string& key, const std::string& text, const std::vector<std::pair<std::string, E>>& options) {
  std::string names;
  for (const auto& [name, value] : options) {
    if (text == name) return value;
    names += (names.empty() ? "" : ", ") + name;
  }
  throw SchemaError("config key '" + key + "': '" + text + "' is not one of " + names);
}

std::string join_numbers(const std::vector<double>& values) {
  std::string out;
  for (double v : values) out += (out.empty() ? "" : ", ") + format_number(v);
  return out;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "experiment",      "dimension",        "family",           "parameters",    "rho",
      "kappa",           "gamma",            "sampling",         "estimators",    "n_train",
      "n_test",          "batches",          "noise_sd",         "k",             "seed",
      "truth",           "n_mc",             "quadrature_points", "quadrature_half_width",
      "quadrature_tolerance", "psi_variant", "tree_rounds",      "tree_depth",    "learning_rate",
      "tree_bins",       "tree_l2",          "sigma_grid",       "n_aicc",        "aicc_denominator",
      "eta",             "k_cap",            "d_star",           "threads"};
  return keys;
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  std::map<std::string, std::string> values;
  std::vector<std::string> unknown;
  const auto& keys = config_keys();
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw SchemaError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      unknown.push_back(key);
      continue;
    }
    if (value.empty()) throw SchemaError("config key '" + key + "' has no value");
    if (!values.emplace(key, value).second) throw SchemaError("config key '" + key + "' appears twice");
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw SchemaError("unknown config keys: " + list);
  }

  ExperimentConfig c;
  auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
  if (auto v = get("experiment")) c.experiment = *v;
  if (auto v = get("dimension")) c.dimension = to_int("dimension", *v);
  if (auto v = get("family")) {
    c.family = to_enum<FeatureFamily>("family", *v,
                                      {{"gaussian", FeatureFamily::kGaussian},
                                       {"gh", FeatureFamily::kGH},
                                       {"gh10", FeatureFamily::kGH10},
                                       {"mixture", FeatureFamily::kMixture}});
    if (c.family == FeatureFamily::kGH10 && !get("dimension")) c.dimension = 10;
  }
  int sweeps = 0;
  for (const std::string key : {"parameters", "rho", "kappa", "gamma"}) {
    const auto v = get(key);
    if (!v) continue;
    ++sweeps;
    const bool matches = key == "parameters" || (key == "rho" && c.family == FeatureFamily::kGaussian) ||
                         (key == "kappa" && c.family == FeatureFamily::kGH) ||
                         (key == "gamma" && c.family == FeatureFamily::kMixture);
    if (!matches) throw SchemaError("config key '" + key + "' does not apply to family " + to_string(c.family));
    c.parameters = to_doubles(key, *v);
  }
  if (sweeps > 1) throw SchemaError("config sets more than one of parameters, rho, kappa, gamma");
  if (auto v = get("sampling")) {
    c.sampling = to_enum<SamplingModel>("sampling", *v,
                                        {{"linear", SamplingModel::kLinear}, {"piecewise", SamplingModel::kPiecewise}});
  }
  if (auto v = get("estimators")) {
    for (const std::string& label : split_list(*v)) {
      try {
        c.estimators.push_back(parse_sampler_label(label));
      } catch (const DomainError& e) {
        throw SchemaError("config key 'estimators': " + std::string(e.what()));
      }
    }
  }
  if (auto v = get("n_train")) c.n_train = to_int("n_train", *v);
  if (auto v = get("n_test")) c.n_test = to_int("n_test", *v);
  if (auto v = get("batches")) c.batches = to_int("batches", *v);
  if (auto v = get("noise_sd")) c.noise_sd = to_double("noise_sd", *v);
  if (auto v = get("k")) c.k = to_int("k", *v);
  if (auto v = get("seed")) {
    const long long s = to_integer("seed", *v);
    if (s < 0) throw SchemaError("config key 'seed' must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("truth")) {
    c.truth = to_enum<TruthChoice>("truth", *v,
                                   {{"auto", TruthChoice::kAuto},
                                    {"closed_form", TruthChoice::kClosedForm},
                                    {"quadrature", TruthChoice::kQuadrature},
                                    {"monte_carlo", TruthChoice::kMonteCarlo}});
  }
  if (auto v = get("n_mc")) c.n_mc = to_int("n_mc", *v);
  if (auto v = get("quadrature_points")) c.quadrature.points = to_int("quadrature_points", *v);
  if (auto v = get("quadrature_half_width")) c.quadrature.half_width = to_double("quadrature_half_width", *v);
  if (auto v = get("quadrature_tolerance")) c.quadrature.tolerance = to_double("quadrature_tolerance", *v);
  if (auto v = get("psi_variant")) {
    c.psi_variant =
        to_enum<PsiVariant>("psi_variant", *v, {{"inverse", PsiVariant::kInverse}, {"printed", PsiVariant::kPrinted}});
  }
  if (auto v = get("tree_rounds")) c.boosting.rounds = to_int("tree_rounds", *v);
  if (auto v = get("tree_depth")) c.boosting.max_depth = to_int("tree_depth", *v);
  if (auto v = get("learning_rate")) c.boosting.learning_rate = to_double("learning_rate", *v);
  if (auto v = get("tree_bins")) c.boosting.max_bins = to_int("tree_bins", *v);
  if (auto v = get("tree_l2")) c.boosting.l2 = to_double("tree_l2", *v);
  // Results do not depend on the worker count, so an unset key defers to DEPSHAP_THREADS.
  c.threads = get("threads") ? to_int("threads", *get("threads")) : default_thread_count();

  // Estimator settings shared by every estimator, including the reference.
  for (SamplerSpec& s : c.estimators) {
    if (auto v = get("sigma_grid")) s.aicc.sigma_grid = to_doubles("sigma_grid", *v);
    if (auto v = get("n_aicc")) s.aicc.n_aicc = to_int("n_aicc", *v);
    if (auto v = get("aicc_denominator")) {
      s.aicc.penalty = to_enum<AiccPenalty>("aicc_denominator", *v,
                                            {{"corrected", AiccPenalty::kCorrected}, {"printed", AiccPenalty::kPrinted}});
    }
    if (auto v = get("eta")) s.eta = to_double("eta", *v);
    if (auto v = get("k_cap")) s.k_cap = to_int("k_cap", *v);
    if (auto v = get("d_star")) s.d_star = to_int("d_star", *v);
  }
  c.validate();
  return c;
}

std::string format_experiment_config(const ExperimentConfig& c) {
  std::string out;
  auto line = [&](const std::string& key, const std::string& value) { out += key + " = " + value + "\n"; };
  line("experiment", c.experiment);
  line("dimension", std::to_string(c.dimension));
  line("family", to_string(c.family));
  line("parameters", join_numbers(c.parameters));
  line("sampling", to_string(c.sampling));
  if (!c.estimators.empty()) {
    std::string labels;
    for (const SamplerSpec& s : c.estimators) labels += (labels.empty() ? "" : ", ") + s.label();
    line("estimators", labels);
  }
  line("n_train", std::to_string(c.n_train));
  line("n_test", std::to_string(c.n_test));
  line("batches", std::to_string(c.batches));
  line("noise_sd", format_number(c.noise_sd));
  line("k", std::to_string(c.k));
  line("seed", std::to_string(c.seed));
  line("truth", to_string(c.truth));
  line("n_mc", std::to_string(c.n_mc));
  line("quadrature_points", std::to_string(c.quadrature.points));
  line("quadrature_half_width", format_number(c.quadrature.half_width));
  line("quadrature_tolerance", format_number(c.quadrature.tolerance));
  line("psi_variant", c.psi_variant == PsiVariant::kInverse ? "inverse" : "printed");
  line("tree_rounds", std::to_string(c.boosting.rounds));
  line("tree_depth", std::to_string(c.boosting.max_depth));
  line("learning_rate", format_number(c.boosting.learning_rate));
  line("tree_bins", std::to_string(c.boosting.max_bins));
  line("tree_l2", format_number(c.boosting.l2));
  if (!c.estimators.empty()) {
    const SamplerSpec& s = c.estimators.front();
    line("sigma_grid", join_numbers(s.aicc.sigma_grid));
    line("n_aicc", std::to_string(s.aicc.n_aicc));
    line("aicc_denominator", s.aicc.penalty == AiccPenalty::kCorrected ? "corrected" : "printed");
    line("eta", format_number(s.eta));
    line("k_cap", std::to_string(s.k_cap));
    line("d_star", std::to_string(s.d_star));
  }
  line("threads", std::to_string(c.threads));
  return out;
}

}  // namespace depshap
