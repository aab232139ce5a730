#include "ubisim/ubisim.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef UBISIM_SCENARIO_DIR
#define UBISIM_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using namespace ubisim;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kParse = 2, kIo = 3, kMismatch = 4 };

int exit_for(const Error& e) { return e.code() == ErrorCode::Io ? kIo : kParse; }

Scenario load(const fs::path& path) { return parse_scenario(read_file(path)); }

std::optional<ReconfigMode> parse_mode(const std::string& s) {
  if (s == "dynamic") return ReconfigMode::Dynamic;
  if (s == "static") return ReconfigMode::Static;
  return std::nullopt;
}

struct RunArgs {
  std::string scenario;
  std::string batch;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string mode;
};

RunReport run_one(const fs::path& scenario, const fs::path& out, const RunArgs& args) {
  Scenario sc = load(scenario);
  SimOptions opts;
  opts.seed = args.seed;
  if (!args.mode.empty()) opts.mode = parse_mode(args.mode);
  Simulation sim(sc, opts);
  const RunLog& log = sim.run();
  RunReport report = make_report(log);
  write_outputs(out, log, report);
  return report;
}

int cmd_run(const RunArgs& args) {
  if (!args.batch.empty()) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(args.batch, ec)) {
      if (entry.path().extension() == ".scn") files.push_back(entry.path());
    }
    if (ec) throw Error(ErrorCode::Io, "cannot list '" + args.batch + "': " + ec.message());
    std::sort(files.begin(), files.end());
    std::vector<std::future<RunReport>> jobs;
    for (const auto& f : files) {
      jobs.push_back(std::async(std::launch::async, [&, f] { return run_one(f, fs::path(args.out) / f.stem(), args); }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const RunReport r = jobs[i].get();
      std::cout << files[i].stem().string() << " detected=" << r.detection.detected << '/' << r.detection.injected
                << '\n';
    }
    return kOk;
  }
  const RunReport r = run_one(args.scenario, args.out, args);
  std::cout << "detected=" << r.detection.detected << '/' << r.detection.injected << " plans=" << r.plans
            << " out=" << args.out << '\n';
  return kOk;
}

int cmd_repro(int table, const std::string& scenario) {
  const fs::path path = scenario.empty() ? fs::path(UBISIM_SCENARIO_DIR) / "table3.scn" : fs::path(scenario);
  const Table actual = reproduce_table(table, load(path));
  std::cout << format_table(actual);
  const auto diff = diff_tables(published_table(table), actual);
  if (diff.empty()) return kOk;
  for (const auto& d : diff) std::cout << "- " << d << '\n';
  std::cerr << "error: Mismatch: table " << table << " differs in " << diff.size() << " cell(s)\n";
  return kMismatch;
}

int cmd_validate(const std::string& scenario) {
  const Scenario sc = load(scenario);
  std::cout << "ok services=" << sc.services.size() << " nodes=" << sc.nodes.size() << " edges=" << sc.edges.size()
            << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustered device network simulator with overload detection and correction"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run a scenario and write trace and reports");
  auto* scenario_opt = run->add_option("--scenario", run_args.scenario, "Scenario file");
  auto* batch_opt = run->add_option("--batch", run_args.batch, "Directory of scenarios, run concurrently");
  scenario_opt->excludes(batch_opt);
  run->add_option("--seed", run_args.seed, "Override the scenario seed");
  run->add_option("--out", run_args.out, "Output directory")->capture_default_str();
  run->add_option("--mode", run_args.mode, "Reconfiguration mode")->check(CLI::IsMember({"dynamic", "static"}));

  int table = 0;
  std::string repro_scenario;
  auto* repro = app.add_subcommand("repro", "Reproduce a published table");
  repro->add_option("--table", table, "Table number")->required()->check(CLI::IsMember({2, 3}));
  repro->add_option("--scenario", repro_scenario, "Scenario to use instead of the bundled one");

  std::string validate_scenario;
  auto* validate = app.add_subcommand("validate", "Parse and check a scenario");
  validate->add_option("--scenario", validate_scenario, "Scenario file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    std::cerr << "error: Usage: " << msg << '\n';
    return kUsage;
  }

  try {
    if (*run) {
      if (run_args.scenario.empty() && run_args.batch.empty()) {
        std::cerr << "error: Usage: run needs --scenario or --batch\n";
        return kUsage;
      }
      return cmd_run(run_args);
    }
    if (*repro) return cmd_repro(table, repro_scenario);
    if (*validate) return cmd_validate(validate_scenario);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << '\n';
    return kIo;
  }
  return kUsage;
}
