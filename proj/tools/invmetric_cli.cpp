#include "invmetric.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace invmetric;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::io, "cannot write " + path);
  f << text;
}

int run(const std::string& sub, const std::string& config_path, const std::string& out, const std::string& format) {
  json cfg;
  try {
    std::ifstream f(config_path);
    if (!f) throw Error(ErrorCode::config, "cannot open config " + config_path);
    cfg = json::parse(f);
    const auto name = read<std::string>(cfg, "experiment", "config");
    if (name != sub) throw Error(ErrorCode::config, "config experiment '" + name + "' does not match subcommand '" + sub + "'");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  ExperimentReport rep;
  KernelModel model;
  try {
    rep = run_experiment(cfg, &model);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::config ? kExitConfig : kExitFail;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (sub == "kernel" && cfg.contains("model_out"))
      write_file(cfg.at("model_out").get<std::string>(), kernel_model_to_json(model).dump(2) + "\n");
    if (format == "json") {
      write_file(out, rep.to_json().dump(2) + "\n");
    } else {
      write_file(out, rep.to_csv());
      write_file(out + ".assertions.csv", rep.assertions_csv());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }

  std::cout << rep.experiment << ": " << rep.rows.size() << " rows\n";
  for (const auto& a : rep.assertions)
    std::cout << "  " << (a.passed ? "pass" : "FAIL") << "  " << a.name << "  measured=" << fmt_double(a.measured)
              << ' ' << a.relation << ' ' << fmt_double(a.bound) << (a.tolerance > 0 ? " tol=" + fmt_double(a.tolerance) : "")
              << (a.detail.empty() ? "" : "  (" + a.detail + ")") << '\n';
  return rep.passed() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invariant metrics on explicit domains in C^d"};
  app.require_subcommand(1);
  std::string config, out, format = "csv";
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"kernel", "numerical Bergman kernel against the closed form"},
      {"metric", "Bergman metric spectra and holomorphic sectional curvature"},
      {"kobayashi", "Bergman/Kobayashi comparability"},
      {"green", "pluricomplex Green function against log distance"},
      {"psh-certify", "self-bounded gradients, psh constructions, (P~_q)"},
      {"recenter", "affine recentering and squeezing radii"},
      {"compactness", "singular-value compactness table"},
      {"counterexample", "the non-invariance counterexample"},
      {"koebe", "Koebe kernel bounds on planar domains"}};
  for (const auto& [name, help] : subs) {
    auto* s = app.add_subcommand(name, help);
    s->add_option("--config", config, "JSON config")->required()->check(CLI::ExistingFile);
    s->add_option("--out", out, "output path")->required();
    s->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  return run(app.get_subcommands().front()->get_name(), config, out, format);
}
