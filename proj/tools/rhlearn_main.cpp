#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "rhlearn/experiment.hpp"
#include "rhlearn/selftest.hpp"

namespace {

// Exit codes: 0 success, 2 config error, 3 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int run_one(const std::string& config_path, const std::string& out_dir, std::mutex& io_mutex) {
  rhlearn::ExperimentConfig cfg;
  try {
    cfg = rhlearn::parse_config_file(config_path);
  } catch (const rhlearn::Error& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfig;
  }

  const std::string stem = std::filesystem::path(config_path).stem().string();
  try {
    const rhlearn::ExperimentResult res = rhlearn::run_experiment(cfg, out_dir, stem);
    std::scoped_lock lock(io_mutex);
    if (res.exit_code != 0) {
      std::cerr << config_path << ": run failed after " << res.steps_completed
                << " steps: " << res.error << "\n";
      return kExitNumerical;
    }
    std::cout << config_path << ": " << res.steps_completed << " steps -> " << res.csv_path
              << "\n";
    if (res.metrics) {
      std::cout << "  peak = " << rhlearn::format_double(res.metrics->peak)
                << ", tail_max = " << rhlearn::format_double(res.metrics->tail_max)
                << ", first_k_below = " << res.metrics->first_k_below << "\n";
    }
    return kExitOk;
  } catch (const rhlearn::ParseError& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const rhlearn::ValidationError& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const rhlearn::DimensionMismatch& e) {
    // inconsistent dimensions in config-declared matrices
    std::scoped_lock lock(io_mutex);
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitConfig;
  } catch (const rhlearn::Error& e) {
    std::scoped_lock lock(io_mutex);
    std::cerr << config_path << ": " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Receding-horizon learning simulator"};
  app.require_subcommand(1);

  std::vector<std::string> config_paths;
  std::string out_dir = ".";
  int jobs = 1;

  CLI::App* run = app.add_subcommand("run", "Run closed-loop experiments from config files");
  run->add_option("--config", config_paths, "Experiment config file (repeatable)")
      ->required()
      ->expected(-1);
  run->add_option("--out", out_dir, "Output directory for CSV and summary files");
  run->add_option("--jobs", jobs, "Number of configs to run in parallel")
      ->check(CLI::PositiveNumber);

  CLI::App* self = app.add_subcommand("selftest", "Run the built-in property suite");

  CLI11_PARSE(app, argc, argv);

  if (self->parsed()) {
    const int failures = rhlearn::selftest(std::cout);
    if (failures > 0) {
      std::cerr << failures << " selftest check(s) failed\n";
      return kExitNumerical;
    }
    return kExitOk;
  }

  std::mutex io_mutex;
  std::atomic<int> worst{kExitOk};
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(config_paths.size())));

  auto worker = [&]() {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= config_paths.size()) break;
      const int code = run_one(config_paths[idx], out_dir, io_mutex);
      int expected = worst.load();
      while (code > expected && !worst.compare_exchange_weak(expected, code)) {
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return worst.load();
}
