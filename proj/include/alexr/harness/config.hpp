#pragma once

// Declarative experiment configuration (JSON). A config names a problem
// builder with its parameters, a list of solvers, seeds and output options.
// Numeric solver tunables may be given as lists; they expand into one solver
// per grid point. Every field is echoed with its resolved value in the
// manifest, which is itself a valid config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "alexr/algorithms/presets.hpp"
#include "alexr/algorithms/run.hpp"
#include "alexr/harness/records.hpp"
#include "alexr/instances/data_io.hpp"
#include "alexr/instances/gdro.hpp"
#include "alexr/instances/hard.hpp"
#include "alexr/instances/pauc.hpp"
#include "alexr/instances/synthetic.hpp"

namespace alexr {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Field access with paths

class FieldReader {
 public:
  FieldReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const Json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path(key), "missing required field");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(key, j_.at(key));
  }

  template <typename T>
  T require(const std::string& key) {
    return convert<T>(key, raw(key));
  }

  void ignore(const std::string& key) { used_.insert(key); }

  /// Rejects fields nobody asked for (typos).
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(path(it.key()), "unknown field");
  }

  template <typename T>
  T convert(const std::string& key, const Json& v) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path(key), "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path(key), "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path(key), "expected a number");
      return v.get<double>();
    } else {
      if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0))
        throw ConfigError(path(key), "expected a non-negative integer");
      return static_cast<T>(v.get<std::uint64_t>());
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// Problem

enum class GapKind { none, objective, distance };

inline std::string to_string(GapKind g) {
  switch (g) {
    case GapKind::none: return "none";
    case GapKind::objective: return "objective";
    case GapKind::distance: return "distance";
  }
  return "?";
}

struct ProblemSpec {
  std::string type;
  Json params = Json::object();  // resolved, defaults filled in
};

struct BuiltProblem {
  std::shared_ptr<ProblemInstance> problem;
  std::optional<HardInstance> hard;
  std::optional<double> f_star;
  std::shared_ptr<const GroupedDataset> grouped;
  std::shared_ptr<const PaucDataset> pauc;
};

namespace detail {

inline double positive(FieldReader& r, const std::string& key, double fallback) {
  const double v = r.get<double>(key, fallback);
  if (!(v > 0.0)) throw ConfigError(r.path(key), "must be > 0");
  return v;
}

inline double in_unit(FieldReader& r, const std::string& key, double fallback) {
  const double v = r.get<double>(key, fallback);
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(r.path(key), "must lie in (0,1)");
  return v;
}

inline std::size_t count(FieldReader& r, const std::string& key, std::size_t fallback) {
  const auto v = r.get<std::size_t>(key, fallback);
  if (v < 1) throw ConfigError(r.path(key), "must be >= 1");
  return v;
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path q(p);
  if (q.is_relative() && !base.empty()) q = base / q;
  return std::filesystem::absolute(q).lexically_normal().string();
}

inline Json divergence_params(FieldReader& r) {
  Json out = Json::object();
  const auto kind = r.get<std::string>("divergence", "cvar");
  if (kind != "cvar" && kind != "chi2")
    throw ConfigError(r.path("divergence"), "expected 'cvar' or 'chi2'");
  out["divergence"] = kind;
  if (kind == "cvar") out["alpha"] = in_unit(r, "alpha", 0.15);
  else r.ignore("alpha");
  out["lambda"] = positive(r, "lambda", 1.0);
  const double wd = r.get<double>("weight_decay", 0.05);
  if (!(wd >= 0.0)) throw ConfigError(r.path("weight_decay"), "must be >= 0");
  out["weight_decay"] = wd;
  out["risk_bound"] = positive(r, "risk_bound", 5.0);
  return out;
}

inline Json pauc_common(FieldReader& r) {
  Json out = Json::object();
  out["alpha"] = in_unit(r, "alpha", 0.5);
  const auto s = r.get<std::string>("surrogate", "squared_hinge");
  if (s != "squared_hinge" && s != "logistic")
    throw ConfigError(r.path("surrogate"), "expected 'squared_hinge' or 'logistic'");
  out["surrogate"] = s;
  const double wd = r.get<double>("weight_decay", 0.0);
  if (!(wd >= 0.0)) throw ConfigError(r.path("weight_decay"), "must be >= 0");
  out["weight_decay"] = wd;
  return out;
}

inline void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

}  // namespace detail

inline const std::vector<std::string>& problem_types() {
  static const std::vector<std::string> types{"hard_smooth",    "hard_nonsmooth", "gdro_synthetic",
                                              "gdro_csv",       "pauc_synthetic", "pauc_libsvm"};
  return types;
}

/// Validates the problem section and fills in defaults. Relative data paths are
/// resolved against `base`.
inline ProblemSpec parse_problem(const Json& j, const std::string& path,
                                 const std::filesystem::path& base = {}) {
  FieldReader r(j, path);
  ProblemSpec spec;
  spec.type = r.require<std::string>("type");
  Json& p = spec.params;
  if (spec.type == "hard_smooth") {
    p["n"] = detail::count(r, "n", 100);
    p["nu"] = detail::in_unit(r, "nu", 0.3);
    p["sigma"] = detail::positive(r, "sigma", 1.0);
  } else if (spec.type == "hard_nonsmooth") {
    p["n"] = detail::count(r, "n", 100);
    p["nu"] = detail::positive(r, "nu", 0.5);
    p["beta"] = detail::positive(r, "beta", 1.0);
    const double a = r.get<double>("alpha_reg", 1.0);
    if (!(a >= 0.0)) throw ConfigError(r.path("alpha_reg"), "must be >= 0");
    p["alpha_reg"] = a;
    p["sigma"] = detail::positive(r, "sigma", 1.0);
  } else if (spec.type == "gdro_synthetic") {
    p["n_groups"] = detail::count(r, "n_groups", 20);
    p["d"] = detail::count(r, "d", 10);
    p["samples_per_group"] = detail::count(r, "samples_per_group", 200);
    const double h = r.get<double>("heterogeneity", 0.5);
    if (!(h >= 0.0)) throw ConfigError(r.path("heterogeneity"), "must be >= 0");
    p["heterogeneity"] = h;
    p["data_seed"] = r.get<std::uint64_t>("data_seed", 0);
    detail::merge(p, detail::divergence_params(r));
  } else if (spec.type == "gdro_csv") {
    p["path"] = detail::resolve_path(r.require<std::string>("path"), base);
    p["group_column"] = r.get<std::string>("group_column", "group");
    p["label_column"] = r.get<std::string>("label_column", "label");
    p["min_group_size"] = r.get<std::size_t>("min_group_size", 1);
    detail::merge(p, detail::divergence_params(r));
  } else if (spec.type == "pauc_synthetic") {
    p["n_pos"] = detail::count(r, "n_pos", 100);
    p["n_neg"] = detail::count(r, "n_neg", 400);
    p["d"] = detail::count(r, "d", 5);
    p["separation"] = r.get<double>("separation", 1.5);
    p["data_seed"] = r.get<std::uint64_t>("data_seed", 0);
    detail::merge(p, detail::pauc_common(r));
  } else if (spec.type == "pauc_libsvm") {
    p["path"] = detail::resolve_path(r.require<std::string>("path"), base);
    detail::merge(p, detail::pauc_common(r));
  } else {
    throw ConfigError(r.path("type"), "unknown problem type '" + spec.type + "'");
  }
  if (r.has("f_star")) p["f_star"] = r.get<double>("f_star", 0.0);
  r.finish();
  return spec;
}

inline BuiltProblem build_problem(const ProblemSpec& spec) {
  const Json& p = spec.params;
  BuiltProblem out;
  if (spec.type == "hard_smooth" || spec.type == "hard_nonsmooth") {
    HardInstance h = spec.type == "hard_smooth"
                         ? build_hard_smooth(p["n"].get<std::size_t>(), p["nu"].get<double>(),
                                             p["sigma"].get<double>())
                         : build_hard_nonsmooth(p["n"].get<std::size_t>(), p["nu"].get<double>(),
                                                p["beta"].get<double>(),
                                                p["alpha_reg"].get<double>(),
                                                p["sigma"].get<double>());
    out.f_star = h.f_star;
    out.problem = std::make_shared<ProblemInstance>(h.problem);
    out.hard = std::move(h);
  } else if (spec.type == "gdro_synthetic" || spec.type == "gdro_csv") {
    std::shared_ptr<GroupedDataset> data;
    if (spec.type == "gdro_synthetic") {
      Rng rng(p["data_seed"].get<std::uint64_t>());
      data = std::make_shared<GroupedDataset>(build_synthetic_gdro(
          p["n_groups"].get<std::size_t>(), p["d"].get<std::size_t>(),
          p["samples_per_group"].get<std::size_t>(), p["heterogeneity"].get<double>(), rng));
    } else {
      const auto path = p["path"].get<std::string>();
      std::ifstream in(path);
      if (!in) throw Error("cannot open data file '" + path + "'");
      CsvOptions opt;
      opt.group_column = p["group_column"].get<std::string>();
      opt.label_column = p["label_column"].get<std::string>();
      opt.min_group_size = p["min_group_size"].get<std::size_t>();
      data = std::make_shared<GroupedDataset>(load_grouped_csv(in, opt).data);
    }
    const Divergence div = p["divergence"] == "cvar"
                               ? Divergence::cvar(p["alpha"].get<double>(), p["lambda"].get<double>())
                               : Divergence::chi2(p["lambda"].get<double>());
    GdroOptions opt;
    opt.weight_decay = p["weight_decay"].get<double>();
    opt.risk_bound = p["risk_bound"].get<double>();
    out.problem = std::make_shared<ProblemInstance>(build_gdro(data, div, opt));
    out.grouped = data;
  } else if (spec.type == "pauc_synthetic" || spec.type == "pauc_libsvm") {
    std::shared_ptr<PaucDataset> data;
    if (spec.type == "pauc_synthetic") {
      SyntheticPaucParams prm;
      prm.n_pos = p["n_pos"].get<std::size_t>();
      prm.n_neg = p["n_neg"].get<std::size_t>();
      prm.d = p["d"].get<std::size_t>();
      prm.separation = p["separation"].get<double>();
      prm.alpha = p["alpha"].get<double>();
      Rng rng(p["data_seed"].get<std::uint64_t>());
      data = std::make_shared<PaucDataset>(build_synthetic_pauc(prm, rng));
    } else {
      const auto path = p["path"].get<std::string>();
      std::ifstream in(path);
      if (!in) throw Error("cannot open data file '" + path + "'");
      const LibsvmData raw = parse_libsvm(in);
      data = std::make_shared<PaucDataset>();
      data->d = raw.dim;
      data->alpha = p["alpha"].get<double>();
      const Vector dense = raw.dense();
      for (std::size_t r = 0; r < raw.size(); ++r) {
        auto& dst = raw.labels[r] > 0.0 ? data->positives : data->negatives;
        dst.insert(dst.end(), dense.begin() + static_cast<std::ptrdiff_t>(r * raw.dim),
                   dense.begin() + static_cast<std::ptrdiff_t>((r + 1) * raw.dim));
      }
    }
    PaucOptions opt;
    opt.weight_decay = p["weight_decay"].get<double>();
    const auto surrogate = p["surrogate"] == "logistic" ? PairSurrogate::logistic
                                                        : PairSurrogate::squared_hinge;
    out.problem = std::make_shared<ProblemInstance>(build_pauc(data, surrogate, opt));
    out.pauc = data;
  } else {
    throw InvalidArgument("unknown problem type '" + spec.type + "'");
  }
  if (p.contains("f_star")) out.f_star = p["f_star"].get<double>();
  return out;
}

// ---------------------------------------------------------------------------
// Solvers

enum class Preset { none, strongly_convex, convex };

inline std::string to_string(Preset p) {
  switch (p) {
    case Preset::none: return "none";
    case Preset::strongly_convex: return "strongly_convex";
    case Preset::convex: return "convex";
  }
  return "?";
}

/// One solver after grid expansion. Preset solvers derive (eta, tau, theta)
/// from epsilon and the scale knobs; the sweep re-derives them per target.
struct SolverSpec {
  std::string name;
  std::string algorithm;  // alexr | bsgd | sox | msvr | sgd_erm | sgd_uw
  Preset preset = Preset::none;
  double epsilon = 0.0;
  double theta_scale = 1.0;
  double eta_scale = 1.0;
  double tau_scale = 1.0;
  AlexrConfig alexr;
  BaselineConfig baseline;
  Json x0;  // null, number or array, as written
};

inline const std::vector<std::string>& solver_names() {
  static const std::vector<std::string> names{"alexr", "bsgd", "sox", "msvr", "sgd_erm", "sgd_uw"};
  return names;
}

namespace detail {

inline PsiMode parse_psi(FieldReader& r) {
  const auto s = r.get<std::string>("psi", "quadratic");
  if (s == "quadratic") return PsiMode::quadratic;
  if (s == "conjugate") return PsiMode::conjugate;
  if (s == "conjugate_explicit") return PsiMode::conjugate_explicit;
  throw ConfigError(r.path("psi"), "expected quadratic, conjugate or conjugate_explicit");
}

inline Averaging parse_averaging(FieldReader& r, Averaging fallback) {
  if (!r.has("averaging")) {
    r.ignore("averaging");
    return fallback;
  }
  const auto s = r.require<std::string>("averaging");
  if (s == "last") return Averaging::last;
  if (s == "uniform") return Averaging::uniform;
  throw ConfigError(r.path("averaging"), "expected 'last' or 'uniform'");
}

inline BaselineVariant parse_variant(const std::string& s) {
  if (s == "bsgd") return BaselineVariant::bsgd;
  if (s == "sox") return BaselineVariant::sox;
  if (s == "msvr") return BaselineVariant::msvr;
  if (s == "sgd_erm") return BaselineVariant::sgd_erm;
  return BaselineVariant::sgd_uw;
}

inline const std::vector<std::string>& grid_keys() {
  static const std::vector<std::string> keys{"eta",       "tau",       "theta",       "step",
                                             "gamma",     "epsilon",   "theta_scale", "eta_scale",
                                             "tau_scale"};
  return keys;
}

inline std::string grid_suffix_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

/// Expands list-valued tunables into the cartesian product, in key order.
inline std::vector<std::pair<std::string, Json>> expand_grid(const Json& entry,
                                                             const std::string& name,
                                                             const std::string& path) {
  std::vector<std::pair<std::string, Json>> cells{{name, entry}};
  for (const auto& key : grid_keys()) {
    if (!entry.contains(key) || !entry.at(key).is_array()) continue;
    const Json& values = entry.at(key);
    if (values.empty()) throw ConfigError(path + "." + key, "grid list is empty");
    std::vector<std::pair<std::string, Json>> next;
    for (const auto& [n, e] : cells)
      for (const auto& v : values) {
        if (!v.is_number()) throw ConfigError(path + "." + key, "grid entries must be numbers");
        Json copy = e;
        copy[key] = v;
        next.emplace_back(n + "_" + key + grid_suffix_value(v.get<double>()), std::move(copy));
      }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace detail

/// Parses one expanded solver entry (no lists left).
inline SolverSpec parse_solver(const Json& j, const std::string& path, const std::string& name) {
  FieldReader r(j, path);
  r.ignore("name");
  SolverSpec s;
  s.name = name;
  s.algorithm = r.require<std::string>("algorithm");
  if (std::find(solver_names().begin(), solver_names().end(), s.algorithm) == solver_names().end())
    throw ConfigError(r.path("algorithm"), "unknown solver '" + s.algorithm + "'");
  if (r.has("seed")) throw ConfigError(r.path("seed"), "seeds are set at the experiment level");
  const std::size_t S = detail::count(r, "S", 1);
  const std::size_t B = detail::count(r, "B", 1);
  const std::size_t T = r.get<std::size_t>("T", 1000);
  if (r.has("x0")) {
    s.x0 = r.raw("x0");
    if (!s.x0.is_number() && !s.x0.is_array())
      throw ConfigError(r.path("x0"), "expected a number or an array");
  }

  if (s.algorithm == "alexr") {
    auto& c = s.alexr;
    c.S = S;
    c.B = B;
    c.T = T;
    c.psi_mode = detail::parse_psi(r);
    const auto preset = r.get<std::string>("preset", "none");
    if (preset == "strongly_convex") s.preset = Preset::strongly_convex;
    else if (preset == "convex") s.preset = Preset::convex;
    else if (preset != "none")
      throw ConfigError(r.path("preset"), "expected none, strongly_convex or convex");
    if (s.preset == Preset::none) {
      for (const char* k : {"epsilon", "theta_scale", "eta_scale", "tau_scale"})
        if (r.has(k)) throw ConfigError(r.path(k), "only meaningful with a preset");
      c.eta = detail::positive(r, "eta", 1.0);
      c.tau = detail::positive(r, "tau", 1.0);
      c.theta = r.get<double>("theta", 0.0);
      if (!(c.theta >= 0.0 && c.theta <= 1.0))
        throw ConfigError(r.path("theta"), "must lie in [0,1]");
      c.averaging = detail::parse_averaging(r, Averaging::last);
    } else {
      for (const char* k : {"eta", "tau"})
        if (r.has(k)) throw ConfigError(r.path(k), "conflicts with preset; use the scale knobs");
      s.epsilon = detail::positive(r, "epsilon", 1e-2);
      if (s.preset == Preset::strongly_convex) {
        if (r.has("theta")) throw ConfigError(r.path("theta"), "conflicts with preset");
        s.theta_scale = detail::positive(r, "theta_scale", 1.0);
        c.averaging = detail::parse_averaging(r, Averaging::last);
      } else {
        s.eta_scale = detail::positive(r, "eta_scale", 1.0);
        s.tau_scale = detail::positive(r, "tau_scale", 1.0);
        c.theta = r.get<double>("theta", 0.0);
        if (!(c.theta >= 0.0 && c.theta <= 1.0))
          throw ConfigError(r.path("theta"), "must lie in [0,1]");
        c.averaging = detail::parse_averaging(r, Averaging::uniform);
      }
    }
  } else {
    auto& c = s.baseline;
    c.variant = detail::parse_variant(s.algorithm);
    c.S = S;
    c.B = B;
    c.T = T;
    c.step = detail::positive(r, "step", 0.1);
    const double gamma_default = c.variant == BaselineVariant::bsgd ? 1.0 : 0.1;
    c.gamma = r.get<double>("gamma", gamma_default);
    if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError(r.path("gamma"), "must lie in (0,1]");
    c.allow_subgradient = r.get<bool>("allow_subgradient", false);
    c.averaging = detail::parse_averaging(r, Averaging::last);
  }
  r.finish();
  return s;
}

inline Vector resolve_x0(const Json& x0, std::size_t dim, const std::string& path) {
  if (x0.is_null()) return {};
  if (x0.is_number()) return Vector(dim, x0.get<double>());
  Vector v;
  for (const auto& e : x0) {
    if (!e.is_number()) throw ConfigError(path, "x0 entries must be numbers");
    v.push_back(e.get<double>());
  }
  if (v.size() != dim)
    throw ConfigError(path, "x0 has " + std::to_string(v.size()) + " entries, problem has " +
                                std::to_string(dim));
  return v;
}

/// Concrete solver configuration for one seed. `epsilon` overrides the
/// preset target when set.
inline SolverConfig resolve_solver(const SolverSpec& s, const ProblemInstance& p,
                                   std::uint64_t seed,
                                   std::optional<double> epsilon = std::nullopt) {
  const Vector x0 = resolve_x0(s.x0, p.dim(), s.name + ".x0");
  if (s.algorithm != "alexr") {
    BaselineConfig c = s.baseline;
    c.seed = seed;
    c.x0 = x0;
    return c;
  }
  AlexrConfig c = s.alexr;
  const double eps = epsilon.value_or(s.epsilon);
  if (s.preset == Preset::strongly_convex) {
    const AlexrConfig pre =
        strongly_convex_preset_for(p, c.S, c.B, eps, s.theta_scale, c.psi_mode);
    c.eta = pre.eta;
    c.tau = pre.tau;
    c.theta = pre.theta;
  } else if (s.preset == Preset::convex) {
    const AlexrConfig pre = convex_preset(eps, c.S, c.B, s.eta_scale, s.tau_scale, c.theta);
    c.eta = pre.eta;
    c.tau = pre.tau;
  }
  c.seed = seed;
  c.x0 = x0;
  return c;
}

inline Json solver_to_json(const SolverSpec& s) {
  Json j = Json::object();
  j["name"] = s.name;
  j["algorithm"] = s.algorithm;
  if (s.algorithm == "alexr") {
    const auto& c = s.alexr;
    j["S"] = c.S;
    j["B"] = c.B;
    j["T"] = c.T;
    j["psi"] = to_string(c.psi_mode);
    j["preset"] = to_string(s.preset);
    if (s.preset == Preset::none) {
      j["eta"] = c.eta;
      j["tau"] = c.tau;
      j["theta"] = c.theta;
    } else {
      j["epsilon"] = s.epsilon;
      if (s.preset == Preset::strongly_convex) {
        j["theta_scale"] = s.theta_scale;
      } else {
        j["eta_scale"] = s.eta_scale;
        j["tau_scale"] = s.tau_scale;
        j["theta"] = c.theta;
      }
    }
    j["averaging"] = to_string(c.averaging);
  } else {
    const auto& c = s.baseline;
    j["S"] = c.S;
    j["B"] = c.B;
    j["T"] = c.T;
    j["step"] = c.step;
    j["gamma"] = c.gamma;
    j["allow_subgradient"] = c.allow_subgradient;
    j["averaging"] = to_string(c.averaging);
  }
  if (!s.x0.is_null()) j["x0"] = s.x0;
  return j;
}

// ---------------------------------------------------------------------------
// Experiment

struct SweepSpec {
  std::vector<double> epsilons;
  std::size_t budget = 100000;
  std::string solver;  // name of the (preset) solver to sweep
  std::string mode = "solve";  // solve | planted
  double planted_constant = 1.0;
  double planted_exponent = 2.0;
  std::size_t check_every = 10;
};

struct ExperimentConfig {
  std::string name = "experiment";
  ProblemSpec problem;
  std::vector<SolverSpec> solvers;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t eval_every = 100;
  RecordFormat format = RecordFormat::csv;
  std::string gap = "auto";
  std::size_t workers = 1;
  bool record_wall_time = false;
  std::optional<SweepSpec> sweep;
};

inline SweepSpec parse_sweep(const Json& j, const std::string& path) {
  FieldReader r(j, path);
  SweepSpec s;
  const Json& eps = r.raw("epsilons");
  if (!eps.is_array()) throw ConfigError(r.path("epsilons"), "expected a list");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const std::string at = r.path("epsilons") + "[" + std::to_string(k) + "]";
    if (!eps[k].is_number() || !(eps[k].get<double>() > 0.0))
      throw ConfigError(at, "must be a positive number");
    s.epsilons.push_back(eps[k].get<double>());
    if (k > 0 && !(s.epsilons[k] < s.epsilons[k - 1]))
      throw ConfigError(at, "epsilon list must be strictly decreasing");
  }
  if (s.epsilons.empty()) throw ConfigError(r.path("epsilons"), "list is empty");
  s.budget = detail::count(r, "budget", 100000);
  s.solver = r.get<std::string>("solver", "");
  s.mode = r.get<std::string>("mode", "solve");
  if (s.mode != "solve" && s.mode != "planted")
    throw ConfigError(r.path("mode"), "expected 'solve' or 'planted'");
  s.planted_constant = detail::positive(r, "planted_constant", 1.0);
  s.planted_exponent = detail::positive(r, "planted_exponent", 2.0);
  s.check_every = detail::count(r, "check_every", 10);
  r.finish();
  return s;
}

inline ExperimentConfig parse_config(const Json& j, const std::filesystem::path& base = {}) {
  FieldReader r(j, "");
  ExperimentConfig cfg;
  cfg.name = r.get<std::string>("name", "experiment");
  if (cfg.name.empty() || cfg.name.find_first_of("/\\") != std::string::npos || cfg.name[0] == '.')
    throw ConfigError("name", "must be a plain, non-empty file name");
  cfg.problem = parse_problem(r.raw("problem"), "problem", base);

  const Json& solvers = r.raw("solvers");
  if (!solvers.is_array() || solvers.empty())
    throw ConfigError("solvers", "expected a non-empty list");
  std::set<std::string> names;
  for (std::size_t k = 0; k < solvers.size(); ++k) {
    const std::string path = "solvers[" + std::to_string(k) + "]";
    const Json& entry = solvers[k];
    if (!entry.is_object()) throw ConfigError(path, "expected an object");
    std::string base_name;
    if (entry.contains("name")) {
      if (!entry["name"].is_string()) throw ConfigError(path + ".name", "expected a string");
      base_name = entry["name"].get<std::string>();
    } else if (entry.contains("algorithm") && entry["algorithm"].is_string()) {
      base_name = entry["algorithm"].get<std::string>();
    } else {
      throw ConfigError(path + ".algorithm", "missing required field");
    }
    if (base_name.empty() || base_name.find_first_of("/\\,\"") != std::string::npos)
      throw ConfigError(path + ".name", "must be non-empty without / \\ , or quotes");
    for (auto& [name, cell] : detail::expand_grid(entry, base_name, path)) {
      if (!names.insert(name).second) throw ConfigError(path + ".name", "duplicate solver name '" + name + "'");
      cfg.solvers.push_back(parse_solver(cell, path, name));
    }
  }

  if (r.has("seeds")) {
    const Json& seeds = r.raw("seeds");
    if (!seeds.is_array() || seeds.empty()) throw ConfigError("seeds", "expected a non-empty list");
    cfg.seeds.clear();
    for (std::size_t k = 0; k < seeds.size(); ++k) {
      if (!seeds[k].is_number_unsigned())
        throw ConfigError("seeds[" + std::to_string(k) + "]", "expected a non-negative integer");
      cfg.seeds.push_back(seeds[k].get<std::uint64_t>());
    }
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size())
      throw ConfigError("seeds", "duplicate seed");
  }
  cfg.eval_every = detail::count(r, "eval_every", 100);
  const auto fmt = r.get<std::string>("format", "csv");
  if (fmt == "csv") cfg.format = RecordFormat::csv;
  else if (fmt == "json_lines") cfg.format = RecordFormat::json_lines;
  else throw ConfigError("format", "expected 'csv' or 'json_lines'");
  cfg.gap = r.get<std::string>("gap", "auto");
  if (cfg.gap != "auto" && cfg.gap != "none" && cfg.gap != "objective" && cfg.gap != "distance")
    throw ConfigError("gap", "expected auto, none, objective or distance");
  cfg.workers = detail::count(r, "workers", 1);
  cfg.record_wall_time = r.get<bool>("record_wall_time", false);
  r.ignore("resolved");
  if (r.has("sweep")) {
    cfg.sweep = parse_sweep(r.raw("sweep"), "sweep");
    if (!cfg.sweep->solver.empty() &&
        std::none_of(cfg.solvers.begin(), cfg.solvers.end(),
                     [&](const SolverSpec& s) { return s.name == cfg.sweep->solver; }))
      throw ConfigError("sweep.solver", "no solver named '" + cfg.sweep->solver + "'");
  }
  r.finish();
  return cfg;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
}

inline ExperimentConfig load_config(const std::string& path) {
  const auto base = std::filesystem::path(path).parent_path();
  return parse_config(read_json_file(path), base);
}

/// The resolved config; parse_config(manifest) reproduces the experiment.
inline Json config_to_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  j["name"] = cfg.name;
  Json prob = Json::object();
  prob["type"] = cfg.problem.type;
  for (auto it = cfg.problem.params.begin(); it != cfg.problem.params.end(); ++it)
    prob[it.key()] = it.value();
  j["problem"] = prob;
  Json solvers = Json::array();
  for (const auto& s : cfg.solvers) solvers.push_back(solver_to_json(s));
  j["solvers"] = solvers;
  j["seeds"] = cfg.seeds;
  j["eval_every"] = cfg.eval_every;
  j["format"] = to_string(cfg.format);
  j["gap"] = cfg.gap;
  j["workers"] = cfg.workers;
  j["record_wall_time"] = cfg.record_wall_time;
  if (cfg.sweep) {
    Json s = Json::object();
    s["epsilons"] = cfg.sweep->epsilons;
    s["budget"] = cfg.sweep->budget;
    s["solver"] = cfg.sweep->solver;
    s["mode"] = cfg.sweep->mode;
    s["planted_constant"] = cfg.sweep->planted_constant;
    s["planted_exponent"] = cfg.sweep->planted_exponent;
    s["check_every"] = cfg.sweep->check_every;
    j["sweep"] = s;
  }
  return j;
}

/// Gap measure for a built problem; "auto" picks distance for the smooth hard
/// instance, objective when an optimal value is known, none otherwise.
inline GapKind resolve_gap(const std::string& gap, const BuiltProblem& bp) {
  if (gap == "none") return GapKind::none;
  if (gap == "distance") {
    if (!bp.hard) throw ConfigError("gap", "distance gap needs a hard instance with known x_*");
    return GapKind::distance;
  }
  if (gap == "objective") {
    if (!bp.f_star) throw ConfigError("gap", "objective gap needs a known optimal value (problem.f_star)");
    return GapKind::objective;
  }
  if (bp.hard && bp.hard->mode == HardMode::smooth) return GapKind::distance;
  if (bp.f_star) return GapKind::objective;
  return GapKind::none;
}

}  // namespace alexr
