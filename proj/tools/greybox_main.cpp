#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "greybox/commands.hpp"

namespace {

int fail(const char* kind, const std::exception& e, int code) {
  std::fprintf(stderr, "error (%s): %s\n", kind, e.what());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grey-box system identification toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string solver_name;
  long long seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "integrate the model at the guess and write the trajectory"},
      {"check", "run the derivative conformance checks"},
      {"identify", "fit the free decision variables to the data"},
      {"validate", "simulate an estimate against a held-out window"},
      {"sweep", "compare both solvers across perturbed guesses and tolerances"},
  };
  for (const auto& [name, description] : commands) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "override the sweep/check seed")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out_path, "override the report output path");
    sub->add_option("--solver", solver_name, "override the solver")
        ->check(CLI::IsMember({"analytic", "fd"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    greybox::RunConfig cfg = greybox::RunConfig::from_file(config_path);
    if (sub->count("--seed") > 0) {
      cfg.sweep.seed = static_cast<std::uint64_t>(seed);
      cfg.check.seed = static_cast<std::uint64_t>(seed);
    }
    if (sub->count("--out") > 0) cfg.output = out_path;
    if (sub->count("--solver") > 0) {
      cfg.solver = solver_name == "analytic" ? greybox::SolverKind::analytic
                                             : greybox::SolverKind::fd_baseline;
    }
    return greybox::dispatch_command(sub->get_name(), cfg);
  } catch (const greybox::ConfigError& e) {
    return fail("config", e, 2);
  } catch (const greybox::DimensionError& e) {
    return fail("config", e, 2);
  } catch (const greybox::NumericalError& e) {
    return fail("numerical", e, 3);
  } catch (const greybox::DataError& e) {
    return fail("data", e, 4);
  } catch (const std::exception& e) {
    return fail("internal", e, 1);
  }
}
