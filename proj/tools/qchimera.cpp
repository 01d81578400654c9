#include "qchimera/experiments.hpp"

#include <boost/program_options.hpp>

#include <iostream>

namespace po = boost::program_options;
using namespace qchimera;

namespace {

constexpr int kOk = 0, kUsage = 1, kConfig = 2, kNumerical = 3;

int run_one(ExperimentConfig c, const Overrides& ov, const std::string& kind_expected, bool dump_system) {
  ov.apply(c);
  if (!kind_expected.empty() && c.kind != kind_expected)
    throw ConfigError("config describes a '" + c.kind + "' experiment, not '" + kind_expected + "'");
  c.validate();
  RunContext ctx(c);
  try {
    run_experiment(c, ctx);
    if (dump_system && c.kind != "classical" && c.profile != "file") {
      const auto sys = solve_biorthogonal(build_hamiltonian(c.chain()));
      write_system(ctx.file("system.json"), sys);
    }
  } catch (const RequestError&) {
    ctx.finish("request_error");
    throw;
  } catch (const ConfigError&) {
    ctx.finish("config_error");
    throw;
  } catch (const IngestionError& e) {
    ctx.finish("ingestion_error");
    throw ConfigError(e.what());
  } catch (const NumericalError& e) {
    ctx.diagnostics(e.what());
    throw;
  }
  ctx.finish();
  std::cout << c.name << ": " << ctx.dir().string() << '\n';
  return kOk;
}

} // namespace

int main(int argc, char** argv) {
  po::options_description opts("options");
  opts.add_options()
    ("help,h", "show help")
    ("version", "print version")
    ("config", po::value<std::string>(), "experiment config (.ini)")
    ("out", po::value<std::string>(), "output directory")
    ("seed", po::value<std::uint64_t>(), "random seed")
    ("chi", po::value<double>(), "target eigenvalue")
    ("pattern", po::value<std::string>(), "initial-state pattern over u, d, *")
    ("side", po::value<std::string>(), "left | right")
    ("profile", po::value<std::string>(), "uniform | linear | sine | file")
    ("dump-system", "also write the eigensystem (system.json + .bin)")
    ("configs", po::value<std::string>()->default_value("configs"), "preset directory for 'all'");
  po::options_description hidden;
  hidden.add_options()("command", po::value<std::string>(), "subcommand");
  po::options_description all;
  all.add(opts).add(hidden);
  po::positional_options_description pos;
  pos.add("command", 1);

  po::variables_map vm;
  try {
    po::store(po::command_line_parser(argc, argv).options(all).positional(pos).run(), vm);
    po::notify(vm);
  } catch (const po::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  auto usage = [&](std::ostream& os) {
    os << "usage: qchimera <eigenstate-report|scatter|lsd|survival|classical|all> [options]\n" << opts;
  };
  if (vm.count("version")) {
    std::cout << "qchimera " << kVersion << '\n';
    return kOk;
  }
  if (vm.count("help") || !vm.count("command")) {
    usage(vm.count("help") ? std::cout : std::cerr);
    return vm.count("help") ? kOk : kUsage;
  }

  Overrides ov;
  if (vm.count("out")) ov.out = vm["out"].as<std::string>();
  if (vm.count("seed")) ov.seed = vm["seed"].as<std::uint64_t>();
  if (vm.count("chi")) ov.chi = vm["chi"].as<double>();
  if (vm.count("pattern")) ov.pattern = vm["pattern"].as<std::string>();
  if (vm.count("side")) ov.side = vm["side"].as<std::string>();
  if (vm.count("profile")) ov.profile = vm["profile"].as<std::string>();
  const bool dump = vm.count("dump-system") > 0;
  const std::string cmd = vm["command"].as<std::string>();

  try {
    if (cmd == "all") {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(vm["configs"].as<std::string>()))
        if (e.path().extension() == ".ini") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      if (files.empty()) throw ConfigError("no .ini presets found");
      const fs::path root = ov.out.value_or("out");
      int status = kOk;
      for (const auto& f : files) {
        Overrides o = ov;
        auto c = load_config(f);
        o.out = root / c.name;
        try {
          run_one(std::move(c), o, "", dump);
        } catch (const NumericalError& e) {
          std::cerr << f.filename().string() << ": numerical failure: " << e.what() << '\n';
          status = kNumerical;
        } catch (const ConfigError& e) {
          std::cerr << f.filename().string() << ": " << e.what() << '\n';
          status = kConfig;
        }
      }
      return status;
    }
    static const std::vector<std::string> kinds{"eigenstate-report", "scatter", "lsd", "survival", "classical"};
    if (std::find(kinds.begin(), kinds.end(), cmd) == kinds.end()) {
      std::cerr << "error: unknown subcommand '" << cmd << "'\n";
      usage(std::cerr);
      return kUsage;
    }
    if (!vm.count("config")) throw ConfigError("--config is required");
    return run_one(load_config(vm["config"].as<std::string>()), ov, cmd, dump);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
