// vmlab: run scenarios, rerun them in a boosted frame, print reports.
//
// Exit codes: 0 success, 2 validation, 3 runtime, 4 precondition (domain
// errors count as precondition failures). Errors go to stderr as one JSON
// record.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "vmlab/error.hpp"
#include "vmlab/scenario.hpp"

namespace {

using vmlab::scenario::Json;

int exit_code(vmlab::ErrorKind k) {
  switch (k) {
    case vmlab::ErrorKind::validation: return 2;
    case vmlab::ErrorKind::runtime: return 3;
    case vmlab::ErrorKind::precondition:
    case vmlab::ErrorKind::domain: return 4;
  }
  return 3;
}

int fail(const char* kind, const std::string& module, const std::string& op, const std::string& message, int code) {
  Json rec{{"error", kind}, {"module", module}, {"operation", op}, {"message", message}, {"exit_code", code}};
  std::cerr << rec.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vlasov-Maxwell asymptotics laboratory"};
  app.set_version_flag("--version", std::string(vmlab::scenario::version()));
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a scenario config and write its artifact directory");
  run->add_option("config", config_path, "Scenario JSON file")->required();

  std::string boost_dir;
  double phi = 0.0;
  bool phi_given = false;
  auto* boost = app.add_subcommand("boost", "Boosted-slice rerun of a stored scenario");
  boost->add_option("artifact-dir", boost_dir, "Artifact directory of a previous run")->required();
  auto* phi_opt = boost->add_option("--phi", phi, "Rapidity of the boost along e1");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Print the report of a stored run");
  report->add_option("artifact-dir", report_dir, "Artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("validation", "cli", "parse_arguments", e.what(), 2);
  }
  phi_given = phi_opt->count() > 0;

  try {
    if (*run) {
      const auto r = vmlab::scenario::run_scenario(std::filesystem::path(config_path));
      const auto& cl = r.report.at("classifier");
      std::cout << Json{{"artifact_dir", r.dir.string()}, {"verdict", cl.at("verdict")}}.dump() << std::endl;
    } else if (*boost) {
      if (!phi_given) {
        const auto c = vmlab::scenario::parse_config(vmlab::scenario::report(boost_dir).at("config"));
        phi = c.boost.phi;
      }
      const auto r = vmlab::scenario::boost_rerun(boost_dir, phi);
      std::cout << Json{{"artifact_dir", r.dir.string()},
                        {"final_relative_deviation", r.report.at("final_relative_deviation")}}
                       .dump()
                << std::endl;
    } else if (*report) {
      std::cout << vmlab::scenario::dump(vmlab::scenario::report(report_dir)) << std::endl;
    }
  } catch (const vmlab::Error& e) {
    return fail(vmlab::to_string(e.kind()), e.module(), e.op(), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return fail("runtime", "cli", "unknown", e.what(), 3);
  }
  return 0;
}
