#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vrem/data.hpp"
#include "vrem/errors.hpp"
#include "vrem/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDiverged = 2;
constexpr int kExitCheckFailed = 3;

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int report(const vrem::ExperimentResult& res, const std::string& dir) {
  std::cout << res.runs.size() << " runs written to " << dir << " (" << res.diverged
            << " diverged)\n";
  return res.divergence_exceeded ? kExitDiverged : kExitOk;
}

// Defaults follow the multivariate comparison protocol: g = 12, p = 20,
// b = 100, gamma = 5e-3 (1 for iem), two warm-up epochs of Online EM.
vrem::ExperimentConfig compare_defaults() {
  vrem::ExperimentConfig c;
  c.name = "compare";
  c.model = vrem::ModelKind::kGmm;
  c.g = 12;
  c.data.source = "multivariate-mixture";
  c.data.n = 5000;
  c.data.g = 12;
  c.data.p = 20;
  c.data.separation = 6.0;
  c.b = 100;
  c.step = "constant:0.005";
  c.step_override[vrem::Algorithm::kIem] = "constant:1";
  c.warm_epochs = 2;
  c.sampling = vrem::SamplingMode::kWithReplacement;
  c.init = vrem::InitMethod::kKmeansSeed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variance-reduced stochastic EM toolkit"};
  app.require_subcommand(1);
  unsigned jobs = 1;
  app.add_option("--jobs,-j", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* run = app.add_subcommand("run", "Run one experiment config");
  std::string config_path, output_override;
  run->add_option("--config,-c", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run->add_option("--output,-o", output_override, "Output directory (overrides the config)");

  auto* cx = app.add_subcommand("complexity", "First-hitting-time scaling study");
  vrem::ComplexitySettings cs;
  std::string cx_algo = "spider-em", cx_grid = "1000,10000,100000", cx_out;
  cx->add_option("--algo", cx_algo, "Algorithm");
  cx->add_option("--n", cx_grid, "Comma-separated sample sizes");
  cx->add_option("--trials", cs.trials, "Trials per n")->check(CLI::PositiveNumber);
  cx->add_option("--epsilon", cs.epsilon, "Target for ||h||^2");
  cx->add_option("--gamma", cs.gamma, "Constant step size");
  cx->add_option("--cap-epochs", cs.cap_epochs, "Per-trial epoch cap");
  cx->add_option("--b", cs.b, "Minibatch size (0: ceil(sqrt(n)/20))");
  cx->add_option("--k-in", cs.k_in, "Inner loop length (0: ceil(n/b))");
  cx->add_option("--seed", cs.seed, "Base seed");
  cx->add_option("--out", cx_out, "CSV path (default stdout)");

  auto* cmp = app.add_subcommand("compare", "Algorithm grid with per-epoch quantiles");
  std::string cmp_algos = "em,online-em,iem,fiem,sem-vr,spider-em", cmp_out = "out/compare";
  std::string cmp_config, cmp_quant = "0.1,0.25,0.5,0.75,0.9";
  std::uint64_t cmp_epochs = 150, cmp_seeds = 40;
  cmp->add_option("--algos", cmp_algos, "Comma-separated algorithms");
  cmp->add_option("--epochs", cmp_epochs, "Epoch budget per run");
  cmp->add_option("--seeds", cmp_seeds, "Number of seeds (1..N)")->check(CLI::PositiveNumber);
  cmp->add_option("--config", cmp_config, "Base config (default: multivariate fixture)")
      ->check(CLI::ExistingFile);
  cmp->add_option("--output,-o", cmp_out, "Output directory");
  cmp->add_option("--quantiles", cmp_quant, "Quantile levels");

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic dataset");
  vrem::DataSpec ds;
  std::string gen_out, gen_format;
  gen->add_option("--generator", ds.source,
                  "scalar-mixture | multivariate-mixture | image-like");
  gen->add_option("--n", ds.n, "Rows");
  gen->add_option("--g", ds.g, "Components");
  gen->add_option("--p", ds.p, "Dimension");
  gen->add_option("--separation", ds.separation, "Mean radius");
  gen->add_option("--d", ds.d, "Columns (image-like)");
  gen->add_option("--zero-columns", ds.zero_columns, "Forced-zero columns (image-like)");
  gen->add_option("--latent", ds.latent, "Latent dimension (image-like)");
  gen->add_option("--seed", ds.seed, "Seed");
  gen->add_flag("--remove-constant", ds.remove_constant, "Drop constant columns");
  gen->add_option("--pca", ds.pca, "Project on the top principal components");
  gen->add_option("--out,-o", gen_out, "Output path")->required();
  gen->add_option("--format", gen_format, "csv | packed-binary (default: from extension)");

  auto* chk = app.add_subcommand("check", "Invariant suites");
  std::string suite = "all";
  chk->add_option("--suite", suite, "sampler | equivalence | gradient | all");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const std::int64_t offset = vrem::seed_offset_from_env();

    if (*run) {
      vrem::ExperimentConfig cfg = vrem::load_config(config_path);
      if (!output_override.empty()) cfg.output = output_override;
      vrem::apply_seed_offset(cfg, offset);
      return report(vrem::run_experiment(cfg, jobs), cfg.output);
    }

    if (*cx) {
      cs.algorithm = vrem::algorithm_from_string(cx_algo);
      cs.seed += static_cast<std::uint64_t>(offset);
      std::vector<std::size_t> grid;
      for (const auto& item : split(cx_grid)) grid.push_back(std::stoull(item));
      const auto est = vrem::estimate_complexity(cs, grid, jobs);
      if (cx_out.empty()) {
        vrem::write_complexity_csv(std::cout, est);
      } else {
        std::ofstream out(cx_out);
        vrem::write_complexity_csv(out, est);
      }
      return kExitOk;
    }

    if (*cmp) {
      vrem::ExperimentConfig cfg = cmp_config.empty() ? compare_defaults()
                                                      : vrem::load_config(cmp_config);
      cfg.output = cmp_out;
      cfg.algorithms.clear();
      for (const auto& a : split(cmp_algos)) cfg.algorithms.push_back(vrem::algorithm_from_string(a));
      cfg.epochs = cmp_epochs;
      cfg.k_max = cfg.k_out = 0;
      cfg.seeds.clear();
      for (std::uint64_t s = 1; s <= cmp_seeds; ++s) cfg.seeds.push_back(s);
      vrem::apply_seed_offset(cfg, offset);
      const auto res = vrem::run_experiment(cfg, jobs);
      std::vector<double> levels;
      for (const auto& q : split(cmp_quant)) levels.push_back(std::stod(q));
      if (cfg.seeds.size() >= 2) {
        for (vrem::Algorithm a : cfg.algorithms) {
          std::vector<std::string> files;
          for (const auto& r : res.runs)
            if (r.algorithm == a) files.push_back((std::filesystem::path(cfg.output) / r.trace_file).string());
          std::ofstream q(std::filesystem::path(cfg.output) /
                          (std::string("quantiles_") + vrem::to_string(a) + ".csv"));
          vrem::write_quantiles_csv(q, vrem::summarize_quantiles(files, levels));
        }
      }
      return report(res, cfg.output);
    }

    if (*gen) {
      ds.seed += static_cast<std::uint64_t>(offset);
      if (ds.source == "file") throw vrem::ConfigError("generator", "expected a generator name");
      const vrem::RawDataset raw = vrem::build_raw_data(ds);
      const auto fmt = gen_format.empty() ? vrem::data_format_from_path(gen_out)
                                          : vrem::data_format_from_string(gen_format);
      vrem::save_dataset(raw, gen_out, fmt);
      std::cout << raw.rows() << "x" << raw.cols() << " -> " << gen_out << "\n";
      return kExitOk;
    }

    if (*chk) {
      bool ok = true;
      for (const auto& r : vrem::run_check_suite(suite)) {
        std::printf("%s %-55s max deviation %.3e (tol %.1e)%s%s\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.max_deviation, r.tolerance, r.detail.empty() ? "" : "  ",
                    r.detail.c_str());
        ok = ok && r.passed;
      }
      return ok ? kExitOk : kExitCheckFailed;
    }
  } catch (const vrem::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vrem::ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const vrem::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
