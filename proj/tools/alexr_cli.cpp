// alexr: run experiments, rate sweeps and data generation from JSON configs.
//
//   alexr run <config> --out DIR
//   alexr sweep-rate <config> --out DIR
//   alexr validate <config>
//   alexr emit-synthetic <gdro|pauc> [key=value ...] --out DIR
//
// Exit status: 0 success, 1 validation error, 2 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alexr/harness/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kFailure = 2;

struct Failure {
  int code;
  std::string message;
};

alexr::ExperimentConfig load(const std::string& path) {
  try {
    return alexr::load_config(path);
  } catch (const alexr::ConfigError& e) {
    throw Failure{kInvalid, std::string("invalid config: ") + e.what()};
  } catch (const alexr::Error& e) {
    throw Failure{kInvalid, std::string("invalid config: ") + e.what()};
  }
}

alexr::BuiltProblem build(const alexr::ExperimentConfig& cfg) {
  try {
    return alexr::build_problem(cfg.problem);
  } catch (const alexr::ParseError& e) {
    throw Failure{kInvalid, std::string("invalid data: ") + e.what()};
  } catch (const alexr::InvalidArgument& e) {
    throw Failure{kInvalid, std::string("invalid problem: ") + e.what()};
  }
}

/// Problem construction and per-solver validation without running anything.
void check(const alexr::ExperimentConfig& cfg) {
  const auto bp = build(cfg);
  try {
    alexr::resolve_gap(cfg.gap, bp);
    for (const auto& s : cfg.solvers) {
      const auto sc = alexr::resolve_solver(s, *bp.problem, cfg.seeds.front());
      std::visit([&](const auto& c) { c.validate(*bp.problem); }, sc);
    }
    if (cfg.sweep && cfg.sweep->mode == "solve" &&
        alexr::resolve_gap(cfg.gap, bp) == alexr::GapKind::none)
      throw alexr::ConfigError("gap", "a rate sweep needs a gap measure");
  } catch (const alexr::ConfigError& e) {
    throw Failure{kInvalid, std::string("invalid config: ") + e.what()};
  } catch (const alexr::Error& e) {
    throw Failure{kInvalid, std::string("invalid config: ") + e.what()};
  }
}

int cmd_run(const std::string& config, const std::string& out) {
  const auto cfg = load(config);
  check(cfg);
  const auto res = alexr::run_experiment(cfg, out);
  std::map<std::string, const alexr::AggregateRow*> last;
  for (const auto& a : res.aggregate) last[a.solver] = &a;
  std::printf("%s\n", res.directory.string().c_str());
  for (const auto& s : cfg.solvers) {
    const auto* a = last.at(s.name);
    std::printf("  %-32s oracles %-12llu objective %.6g  gap %.6g\n", s.name.c_str(),
                static_cast<unsigned long long>(a->oracle_count), a->objective_mean, a->gap_mean);
  }
  return kOk;
}

int cmd_sweep(const std::string& config, const std::string& out) {
  const auto cfg = load(config);
  if (!cfg.sweep) throw Failure{kInvalid, "invalid config: sweep: missing required field"};
  check(cfg);
  const auto res = alexr::run_sweep(cfg, out);
  std::printf("%s\n", res.directory.string().c_str());
  for (const auto& p : res.report.points) {
    if (p.converged)
      std::printf("  eps %-10g iterations %.17g\n", p.epsilon, p.iterations);
    else
      std::printf("  eps %-10g not reached within budget\n", p.epsilon);
  }
  if (!res.report.fit) throw Failure{kFailure, "rate fit failed: " + res.report.fit_error};
  std::printf("  slope %.4f  r^2 %.4f\n", res.report.fit->slope, res.report.fit->r_squared);
  return kOk;
}

int cmd_validate(const std::string& config) {
  const auto cfg = load(config);
  check(cfg);
  std::printf("ok: %zu solver(s) x %zu seed(s)\n", cfg.solvers.size(), cfg.seeds.size());
  return kOk;
}

std::map<std::string, std::string> parse_params(const std::vector<std::string>& params) {
  std::map<std::string, std::string> out;
  for (const auto& p : params) {
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0)
      throw Failure{kInvalid, "parameter '" + p + "' is not of the form key=value"};
    out[p.substr(0, eq)] = p.substr(eq + 1);
  }
  return out;
}

int cmd_emit(const std::string& instance, const std::vector<std::string>& params,
             const std::string& out_dir) {
  auto kv = parse_params(params);
  alexr::Json j = alexr::Json::object();
  for (const auto& [k, v] : kv) {
    if (k == "name") continue;
    try {
      std::size_t used = 0;
      const double num = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      if (v.find_first_of(".eE") == std::string::npos && num >= 0)
        j[k] = static_cast<std::uint64_t>(std::stoull(v));
      else
        j[k] = num;
    } catch (const std::exception&) {
      j[k] = v;
    }
  }
  const std::string name = kv.count("name") ? kv["name"] : instance;
  std::filesystem::create_directories(out_dir);
  alexr::BuiltProblem bp;
  try {
    if (instance == "gdro") {
      j["type"] = "gdro_synthetic";
    } else if (instance == "pauc") {
      j["type"] = "pauc_synthetic";
    } else {
      throw Failure{kInvalid, "unknown instance '" + instance + "' (expected gdro or pauc)"};
    }
    bp = alexr::build_problem(alexr::parse_problem(j, "params"));
  } catch (const alexr::ConfigError& e) {
    throw Failure{kInvalid, std::string("invalid parameters: ") + e.what()};
  } catch (const alexr::InvalidArgument& e) {
    throw Failure{kInvalid, std::string("invalid parameters: ") + e.what()};
  }

  if (bp.grouped) {
    const auto path = std::filesystem::path(out_dir) / (name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kFailure, "cannot write '" + path.string() + "'"};
    const auto& d = *bp.grouped;
    out << "group,label";
    for (std::size_t c = 0; c < d.d; ++c) out << ",x" << c + 1;
    out << '\n';
    for (std::size_t s = 0; s < d.n_samples(); ++s) {
      out << 'g' << d.group_of[s] << ',' << (d.labels[s] > 0 ? 1 : -1);
      for (double v : d.row(s)) out << ',' << alexr::format_double(v);
      out << '\n';
    }
    std::printf("%s\n", path.string().c_str());
  } else {
    const auto path = std::filesystem::path(out_dir) / (name + ".libsvm");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Failure{kFailure, "cannot write '" + path.string() + "'"};
    const auto& d = *bp.pauc;
    alexr::LibsvmData lib;
    lib.dim = d.d;
    auto add = [&](std::span<const double> row, double label) {
      alexr::SparseRow r;
      for (std::size_t c = 0; c < row.size(); ++c)
        if (row[c] != 0.0) r.push_back({static_cast<std::uint32_t>(c + 1), row[c]});
      lib.labels.push_back(label);
      lib.rows.push_back(std::move(r));
    };
    for (std::size_t i = 0; i < d.n_pos(); ++i) add(d.pos(i), 1.0);
    for (std::size_t i = 0; i < d.n_neg(); ++i) add(d.neg(i), -1.0);
    alexr::write_libsvm(out, lib);
    std::printf("%s\n", path.string().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compositional optimization experiments"};
  app.require_subcommand(1);
  std::string out = ".";
  std::string config;
  std::string instance;
  std::vector<std::string> params;

  auto* run = app.add_subcommand("run", "run every solver on every seed");
  run->add_option("config", config, "experiment config (JSON)")->required();
  run->add_option("--out", out, "output directory");

  auto* sweep = app.add_subcommand("sweep-rate", "fit iterations-to-epsilon against epsilon");
  sweep->add_option("config", config, "experiment config with a sweep section")->required();
  sweep->add_option("--out", out, "output directory");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("config", config, "experiment config (JSON)")->required();

  auto* emit = app.add_subcommand("emit-synthetic", "write a synthetic data set");
  emit->add_option("instance", instance, "gdro (grouped CSV) or pauc (LIBSVM)")->required();
  emit->add_option("params", params, "key=value builder parameters; name=<file stem>");
  emit->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalid;
  }

  try {
    if (*run) return cmd_run(config, out);
    if (*sweep) return cmd_sweep(config, out);
    if (*validate) return cmd_validate(config);
    if (*emit) return cmd_emit(instance, params, out);
  } catch (const Failure& f) {
    std::fprintf(stderr, "alexr: %s\n", f.message.c_str());
    return f.code;
  } catch (const alexr::ConfigError& e) {
    std::fprintf(stderr, "alexr: invalid config: %s\n", e.what());
    return kInvalid;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "alexr: %s\n", e.what());
    return kFailure;
  }
  return kFailure;
}
