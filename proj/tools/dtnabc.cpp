// Command-line front end: run, dtn-build, report.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "dtnabc/runner.hpp"

namespace {

enum Exit { ok = 0, validation = 1, runtime = 2 };

dtnabc::ExperimentConfig load(const std::string& path) {
  auto c = dtnabc::load_config(path);
  dtnabc::require_valid(c);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Absorbing-boundary Schrödinger and TDHF experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 0;
  app.add_option("--threads", threads, "Eigen worker threads (0: library default)")->check(CLI::NonNegativeNumber);

  std::string config, out;
  bool force = false;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("--config", config, "experiment JSON")->required();
  run->add_option("--out", out, "output directory")->required();
  run->add_flag("--force", force, "rebuild kernel caches that do not match");

  auto* build = app.add_subcommand("dtn-build", "Fill the DtN kernel cache for a config's ABC nodes");
  build->add_option("--config", config, "experiment JSON")->required();
  build->add_flag("--force", force, "rebuild kernel caches that do not match");

  std::vector<std::string> files;
  auto* rep = app.add_subcommand("report", "Summarize observable CSVs or run directories");
  rep->add_option("files", files, "observables.csv files or run directories");
  rep->add_option("--out", out, "also write the table to DIR/report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::validation;
  }
  if (threads > 0) Eigen::setNbThreads(threads);

  try {
    if (*run) {
      const auto c = load(config);
      dtnabc::RunOptions opt;
      opt.out_dir = out;
      opt.force = force;
      opt.log = &std::cerr;
      const auto r = dtnabc::run_experiment(c, opt);
      if (!r.series.t.empty()) {
        std::cout << c.name << ": " << r.series.t.size() << " rows, N(0) = " << r.series.N.front()
                  << ", N(T) = " << r.series.N.back();
        const double e = r.series.max_abs_error();
        if (std::isfinite(e)) std::cout << ", max |N - N_ref| = " << e;
        if (r.density_error) std::cout << ", density error = " << *r.density_error;
        std::cout << '\n';
      }
    } else if (*build) {
      dtnabc::dtn_build(load(config), force, &std::cout);
    } else if (*rep) {
      const std::string table = dtnabc::format_report(dtnabc::report(files));
      std::cout << table;
      if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream(std::filesystem::path(out) / "report.csv") << table;
      }
    }
  } catch (const dtnabc::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return Exit::runtime;
  }
  return Exit::ok;
}
