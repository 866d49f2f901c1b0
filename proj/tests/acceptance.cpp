// Acceptance checks: one PASS/FAIL line per criterion. Experiments are driven
// by the shipped configs so the numbers match what the CLI produces.

#include "invmetric/experiments.hpp"

#include <fstream>
#include <iostream>

using namespace invmetric;

namespace {

struct Run {
  std::string config;
  ExperimentReport report;
  double seconds = 0.0;
};

std::map<std::string, Run> runs;
int failures = 0;

json load(const std::string& name) {
  std::ifstream f(std::string(INVMETRIC_CONFIG_DIR) + "/" + name + ".json");
  if (!f) throw Error(ErrorCode::io, "missing config " + name);
  return json::parse(f);
}

const ExperimentReport& run(const std::string& name) {
  auto it = runs.find(name);
  if (it != runs.end()) return it->second.report;
  const auto t0 = std::chrono::steady_clock::now();
  Run r{name, run_experiment(load(name)), 0.0};
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return runs.emplace(name, std::move(r)).first->second.report;
}

const Assertion* find(const ExperimentReport& r, const std::string& name) {
  for (const auto& a : r.assertions)
    if (a.name == name) return &a;
  return nullptr;
}

bool has(const ExperimentReport& r, const std::string& name) {
  const Assertion* a = find(r, name);
  return a && a->passed;
}

std::string show(const ExperimentReport& r, const std::string& name) {
  const Assertion* a = find(r, name);
  if (!a) return name + "=missing";
  return name + "=" + fmt_double(a->measured);
}

bool all_of_prefix(const ExperimentReport& r, const std::string& prefix) {
  bool any = false;
  for (const auto& a : r.assertions)
    if (a.name.rfind(prefix, 0) == 0) {
      any = true;
      if (!a.passed) return false;
    }
  return any;
}

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << id << " (" << title << "): " << detail << std::endl;
  failures += !ok;
}

template <class F>
void criterion(int id, const std::string& title, F&& body) {
  try {
    std::string detail;
    const bool ok = body(detail);
    report(id, title, ok, detail);
  } catch (const std::exception& e) {
    report(id, title, false, std::string("error: ") + e.what());
  }
}

}  // namespace

int main() {
  criterion(1, "kernel convergence", [](std::string& d) {
    bool ok = true;
    for (const char* c : {"kernel_disk", "kernel_polydisk", "kernel_ball"}) {
      const auto& r = run(c);
      ok = ok && r.passed();
      d += std::string(c) + ": " + show(r, "max_relative_error") + " " + show(r, "fit_seconds") + "; ";
    }
    return ok;
  });

  criterion(2, "Koebe sandwich", [](std::string& d) {
    const auto& r = run("koebe");
    d = show(r, "min_product") + " " + show(r, "max_product") + " over " + std::to_string(r.rows.size()) + " points";
    return r.passed() && r.rows.size() >= 600;
  });

  criterion(3, "Bergman/Kobayashi comparability", [](std::string& d) {
    const auto& a = run("kobayashi_disk");
    const auto& b = run("kobayashi_ball");
    const auto& p = run("kobayashi_polydisk");
    d = "disk " + show(a, "ball_ratio_deviation") + "; ball " + show(b, "ball_ratio_deviation") + "; polydisk " +
        show(p, "envelope_max_over_min");
    return a.passed() && b.passed() && p.passed() && a.rows.size() == 50 && b.rows.size() == 50 && p.rows.size() == 50;
  });

  criterion(4, "compactness table", [](std::string& d) {
    const auto& r = run("compactness");
    for (const auto& a : r.assertions)
      if (!a.passed) d += a.name + "=" + fmt_double(a.measured) + " ";
    if (d.empty())
      d = show(r, "case0_polydisk_q1_constant_deviation") + " " + show(r, "case1_ball_q1_rate_vs_closed_form") + " " +
          show(r, "case2_ball_q2_rate_vs_closed_form") + ", verdicts and witnesses as expected";
    return r.passed();
  });

  criterion(5, "counterexample", [](std::string& d) {
    const auto& r = run("counterexample");
    d = show(r, "identity_Q_equals_R") + " " + show(r, "Q_at_0.99") + " " + show(r, "direct_vs_Q") + " " +
        show(r, "monotone_divergence");
    return r.passed();
  });

  criterion(6, "Green vs log distance", [](std::string& d) {
    const auto& a = run("green_disk");
    const auto& b = run("green_ball");
    d = "disk " + show(a, "max_gap") + " " + show(a, "seed_stability") + "; ball " + show(b, "max_gap") + " " +
        show(b, "seed_stability");
    return a.passed() && b.passed();
  });

  criterion(7, "self-bounded gradient", [](std::string& d) {
    // The stated law is ||d(t lambda)|| = t^{-1/2} ||d lambda|| to 1e-12.
    const auto& r = run("psh_polydisk");
    const double stated = r.extra.at("sbg_scaling_inverse_sqrt_t_error").get<double>();
    const bool law = stated <= 1e-12;
    d = "t^(-1/2) law max error=" + fmt_double(stated) + (law ? "" : " (violated)") + "; measured " +
        show(r, "sbg_scaling_sqrt_t") + " (exponent +1/2); " + show(r, "sbg_sup") + " " + show(r, "sbg_closed_form");
    return law && has(r, "sbg_sup") && has(r, "sbg_closed_form");
  });

  criterion(8, "constructions", [](std::string& d) {
    const auto& r = run("psh_polydisk");
    d = show(r, "bd_psh_eta") + " " + show(r, "bd_psh_margin") + " " + show(r, "chart_psh_A2_cap") + " pq q1=" +
        (has(r, "pq_q1_fail") ? "fail" : "?") + " q2=" + (has(r, "pq_q2_pass") ? "pass" : "?");
    return all_of_prefix(r, "bd_psh") && all_of_prefix(r, "chart_psh") && has(r, "pq_q1_fail") && has(r, "pq_q2_pass");
  });

  criterion(9, "normalization", [](std::string& d) {
    const auto& r = run("recenter");
    for (const auto& a : r.assertions)
      if (a.name.find("min_over_half_median") != std::string::npos) d += a.name + "=" + fmt_double(a.measured) + " ";
    d += all_of_prefix(r, "") ? "outer containment everywhere" : "some assertion failed";
    return r.passed();
  });

  criterion(10, "determinism", [](std::string& d) {
    std::vector<std::string> names;
    for (const auto& [name, _] : runs) names.push_back(name);
    for (const char* c : {"metric_ellipsoid"}) {
      run(c);
      names.push_back(c);
    }
    int same = 0;
    for (const auto& n : names) {
      const std::string again = run_experiment(load(n)).to_csv();
      if (again == runs.at(n).report.to_csv()) ++same;
      else d += n + " differs; ";
    }
    d += std::to_string(same) + "/" + std::to_string(names.size()) + " configs byte-identical";
    return same == static_cast<int>(names.size());
  });

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
