#include <CLI11.hpp>

#include <exception>
#include <iostream>

#include "common.hpp"

int main(int argc, char** argv) {
  using namespace gradkrig::cli;
  apply_thread_cap();

  CLI::App app{"gradkrig: scalable Gaussian process regression with derivatives"};
  app.require_subcommand(1);

  register_fit(app);
  register_predict(app);
  register_terrain(app);
  register_precond_study(app);
  register_benchmark_mvm(app);
  register_active_subspace(app);
  register_bo(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify_exception(e);
  }
  return kExitOk;
}
