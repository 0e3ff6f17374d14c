#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "circstab/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Linear stability of circular vortex sheets"};
  std::string config_path;
  circstab::RunOverrides ov;
  std::string command, out, format;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--command", command, "Override the configured command");
  app.add_option("--out", out, "Output file (default: stdout)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--threads", threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--strict", ov.strict, "Reject unknown configuration keys");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (!command.empty()) ov.command = command;
  if (!out.empty()) ov.out = out;
  if (!format.empty()) ov.format = format;
  if (threads > 0) ov.threads = threads;

  const circstab::RunResult res = circstab::run_file(config_path, ov);
  if (res.exit_code == 0 && !res.out_path.empty()) {
    std::ofstream f(res.out_path, std::ios::binary);
    if (!f) {
      std::cerr << "cannot write " << res.out_path << '\n';
      return 3;
    }
    f << res.output;
  } else if (res.exit_code == 0) {
    std::cout << res.output;
  } else {
    std::cerr << res.output;
  }
  return res.exit_code;
}
