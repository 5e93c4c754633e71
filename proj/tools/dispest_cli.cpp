// dispest: displacement-estimation front end.
//
// Subcommands:
//   cfi                closed-form and numeric Fisher information, optional CRB
//   simulate           seeded Monte Carlo experiment against the CRB
//   loss-grid          optimized determinant-ratio grid over (eta1, eta2), CSV
//   amplitude-compare  Fock vs squeezed amplitude information vs energy, CSV
//
// JSON results are wrapped in an envelope {tool, version, command, argv, seed,
// timestamp, payload}; everything except the timestamp is bit-reproducible for
// fixed flags and seed. Grid subcommands print bare CSV to stdout, or with
// --out write the CSV to a file and print an envelope carrying its FNV-1a
// checksum. Exit codes: 0 ok, 2 usage, 3 statistically degenerate result,
// 4 unphysical request.

#include <cerrno>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iostream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "dispest/dispest.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, v);
  return buf;
}

std::string format_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ordered_json matrix_json(const Eigen::Matrix2d& m) {
  return ordered_json::array({ordered_json::array({m(0, 0), m(0, 1)}),
                              ordered_json::array({m(1, 0), m(1, 1)})});
}

ordered_json envelope(const std::string& command, std::uint64_t seed,
                      const std::vector<std::string>& argv, ordered_json payload) {
  ordered_json env;
  env["tool"] = "dispest";
  env["version"] = kVersion;
  env["command"] = command;
  env["argv"] = argv;
  env["seed"] = seed;
  env["timestamp"] = iso_timestamp();
  env["payload"] = std::move(payload);
  return env;
}

void print_envelope(const ordered_json& env) { std::cout << env.dump(2) << "\n"; }

std::uint64_t resolve_seed(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
  if (seed_opt->count() > 0) return seed_flag;
  if (const char* env = std::getenv("DISPEST_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || std::strchr(env, '-') != nullptr || errno == ERANGE) {
      throw CLI::ValidationError("DISPEST_SEED", "must be an unsigned 64-bit integer");
    }
    return v;
  }
  return 1;
}

// Emit CSV directly, or with --out write it to a file and print an envelope
// embedding the byte checksum so consumers can verify the round trip.
int emit_csv(const std::string& command, std::uint64_t seed, const std::vector<std::string>& argv,
             const std::string& csv, std::size_t rows, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << csv;
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out || !(out << csv)) {
    std::cerr << "dispest: cannot write " << out_path << "\n";
    return 2;
  }
  out.close();
  ordered_json payload;
  payload["path"] = out_path;
  payload["rows"] = rows;
  payload["csv_fnv1a64"] = hex64(fnv1a64(csv));
  print_envelope(envelope(command, seed, argv, std::move(payload)));
  return 0;
}

struct CfiArgs {
  std::string protocol;
  double r = 0.0;
  int n = 0;
  double w1 = 0.5;
  std::string chart = "cart";
  double alpha = 0.0;
  long long probes = 0;
  bool has_r = false, has_n = false, has_w1 = false, has_alpha = false;
};

int run_cfi(const CfiArgs& a, std::uint64_t seed, const std::vector<std::string>& argv) {
  using namespace dispest;
  ordered_json payload;
  payload["protocol"] = a.protocol;

  if (a.protocol == "fock") {
    if (!a.has_n) throw CLI::ValidationError("cfi", "--protocol fock requires --n");
    if (a.has_r || a.has_w1 || a.chart == "polar") {
      throw CLI::ValidationError("cfi", "--r/--w1/--chart polar do not apply to fock");
    }
    const double c = cfi_fock_amplitude(a.n);
    payload["n"] = a.n;
    payload["chart"] = "amplitude";
    payload["fisher_information"] = c;
    if (a.probes > 0) payload["crb"] = 1.0 / (c * static_cast<double>(a.probes));
    print_envelope(envelope("cfi", seed, argv, std::move(payload)));
    return 0;
  }

  if (!a.has_r) throw CLI::ValidationError("cfi", "--protocol " + a.protocol + " requires --r");
  if (a.has_n) throw CLI::ValidationError("cfi", "--n applies only to fock");
  payload["r"] = a.r;

  FisherMatrix info = (a.protocol == "entangled") ? cfi_entangled(a.r) : cfi_separable(a.r, a.w1);
  if (a.protocol == "entangled" && a.has_w1) {
    throw CLI::ValidationError("cfi", "--w1 applies only to separable");
  }
  if (a.protocol == "separable") payload["w1"] = a.w1;

  if (a.chart == "polar") {
    if (!a.has_alpha) throw CLI::ValidationError("cfi", "--chart polar requires --alpha");
    if (!(a.alpha > 0.0)) throw CLI::ValidationError("cfi", "--alpha must be positive");
    payload["chart"] = "polar";
    payload["alpha"] = a.alpha;
    if (a.protocol == "entangled") {
      info = polar_transform(info, 0.0, a.alpha);
      payload["fisher_matrix"] = matrix_json(info.matrix());
    } else {
      if (a.w1 != 0.5) {
        throw CLI::ValidationError("cfi", "the polar chart is computed at balanced weights only");
      }
      info = cfi_separable_polar(a.r, a.alpha);
      payload["fisher_matrix"] = matrix_json(info.matrix());
      const FisherMatrix photon =
          cfi_separable_polar_photon_form(mean_photons_for_squeezing(a.r), a.alpha);
      payload["photon_form"]["fisher_matrix"] = matrix_json(photon.matrix());
      payload["photon_form"]["note"] =
          "alternative closed form 2(n+1+sqrt(n^2+n)) diag(1, alpha^2); its prefactor is "
          "e^{2r}+1, one unit above the quadrature result";
    }
  } else {
    payload["chart"] = "cartesian";
    payload["fisher_matrix"] = matrix_json(info.matrix());
  }

  if (a.probes > 0) payload["crb"] = matrix_json(crb(info, a.probes).bound);
  print_envelope(envelope("cfi", seed, argv, std::move(payload)));
  return 0;
}

struct SimulateArgs {
  std::string protocol;
  double r = 1.0;
  double w1 = 0.5;
  double mu = 0.0, nu = 0.0;
  long long probes = 0;
  int repeats = 0;
  std::string split = "random";
  bool emit_estimates = false;
};

int run_simulate(const SimulateArgs& a, std::uint64_t seed, const std::vector<std::string>& argv) {
  using namespace dispest;
  ExperimentConfig config;
  config.protocol = (a.protocol == "entangled") ? ProtocolKind::Entangled : ProtocolKind::Separable;
  config.r = a.r;
  config.w1 = a.w1;
  config.truth = DisplacementParams{a.mu, a.nu};
  config.probes = a.probes;
  config.repeats = a.repeats;
  config.split = (a.split == "random") ? SplitMode::Random : SplitMode::Fixed;
  config.seed = seed;

  const ExperimentRecord record = run_experiment(config);

  ordered_json payload;
  payload["config"] = {{"protocol", a.protocol}, {"r", a.r},       {"w1", a.w1},
                       {"mu", a.mu},             {"nu", a.nu},     {"probes", a.probes},
                       {"repeats", a.repeats},   {"split", a.split}, {"seed", seed}};
  payload["failures"] = record.failures;
  payload["empirical_cov"] = matrix_json(record.empirical_cov);
  payload["crb"] = matrix_json(record.crb);
  payload["variance_ratio"] =
      ordered_json::array({record.variance_ratio(0), record.variance_ratio(1)});
  if (a.emit_estimates) {
    ordered_json rows = ordered_json::array();
    for (const auto& e : record.estimates) rows.push_back(ordered_json::array({e(0), e(1)}));
    payload["estimates"] = std::move(rows);
  }
  print_envelope(envelope("simulate", seed, argv, std::move(payload)));
  return (2 * record.failures > record.config.repeats) ? 3 : 0;
}

int run_loss_grid(double vs, double va, int res, const std::string& out_path, std::uint64_t seed,
                  const std::vector<std::string>& argv) {
  const dispest::LossGrid grid = dispest::loss_grid(vs, va, res);
  std::string csv = "eta1,eta2,ratio,t1_opt,t2_opt\n";
  for (const auto& cell : grid.cells) {
    csv += format_g(cell.eta1) + "," + format_g(cell.eta2) + "," + format_g(cell.ratio) + "," +
           format_g(cell.params.t1) + "," + format_g(cell.params.t2) + "\n";
  }
  return emit_csv("loss-grid", seed, argv, csv, grid.cells.size(), out_path);
}

int run_amplitude_compare(int nmax, double eta, const std::string& out_path, std::uint64_t seed,
                          const std::vector<std::string>& argv) {
  const auto rows = dispest::amplitude_comparison(nmax, eta);
  std::string csv = "energy,fock_fi,squeezed_fi,fock_fi_ideal,squeezed_fi_ideal\n";
  for (const auto& row : rows) {
    csv += std::to_string(row.energy) + "," + format_g(row.fock) + "," + format_g(row.squeezed) +
           "," + format_g(row.fock_ideal) + "," + format_g(row.squeezed_ideal) + "\n";
  }
  return emit_csv("amplitude-compare", seed, argv, csv, rows.size(), out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Displacement-estimation protocols: Fisher information, Monte Carlo, loss analysis"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --seed appear after the subcommand name
  std::uint64_t seed_flag = 1;
  CLI::Option* seed_opt =
      app.add_option("--seed", seed_flag, "Master seed (default: DISPEST_SEED env or 1)");

  CfiArgs cfi;
  CLI::App* cmd_cfi = app.add_subcommand("cfi", "Fisher information and CRB");
  cmd_cfi->add_option("--protocol", cfi.protocol, "Protocol")
      ->required()
      ->check(CLI::IsMember({"entangled", "separable", "fock"}));
  CLI::Option* opt_r = cmd_cfi->add_option("--r", cfi.r, "Squeezing parameter");
  CLI::Option* opt_n = cmd_cfi->add_option("--n", cfi.n, "Photon number (fock)");
  CLI::Option* opt_w1 = cmd_cfi->add_option("--w1", cfi.w1, "Branch-1 weight (separable)");
  cmd_cfi->add_option("--chart", cfi.chart, "Parameter chart")
      ->check(CLI::IsMember({"cart", "polar"}));
  CLI::Option* opt_alpha = cmd_cfi->add_option("--alpha", cfi.alpha, "Displacement amplitude (polar)");
  cmd_cfi->add_option("--probes", cfi.probes, "Probe count for the CRB")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  CLI::App* cmd_sim = app.add_subcommand("simulate", "Seeded Monte Carlo experiment");
  cmd_sim->add_option("--protocol", sim.protocol, "Protocol")
      ->required()
      ->check(CLI::IsMember({"entangled", "separable"}));
  cmd_sim->add_option("--r", sim.r, "Squeezing parameter");
  cmd_sim->add_option("--w1", sim.w1, "Branch-1 weight (separable)");
  cmd_sim->add_option("--mu", sim.mu, "True x displacement");
  cmd_sim->add_option("--nu", sim.nu, "True p displacement");
  cmd_sim->add_option("--probes", sim.probes, "Probes per repetition")->required();
  cmd_sim->add_option("--repeats", sim.repeats, "Repetitions")->required();
  cmd_sim->add_option("--split", sim.split, "Branch assignment")
      ->check(CLI::IsMember({"random", "fixed"}));
  cmd_sim->add_flag("--emit-estimates", sim.emit_estimates, "Include per-repetition estimates");

  double vs = std::exp(-2.0) * 0.5, va = std::exp(2.0) * 0.5;
  int res = 101;
  std::string grid_out;
  CLI::App* cmd_grid = app.add_subcommand("loss-grid", "Determinant-ratio grid over (eta1, eta2)");
  cmd_grid->add_option("--vs", vs, "Squeezed quadrature variance");
  cmd_grid->add_option("--va", va, "Anti-squeezed quadrature variance");
  cmd_grid->add_option("--res", res, "Grid resolution per axis")->check(CLI::Range(2, 2001));
  cmd_grid->add_option("--out", grid_out, "Write CSV here and print a checksum envelope");

  int nmax = 10;
  double eta = 0.95;
  std::string amp_out;
  CLI::App* cmd_amp = app.add_subcommand("amplitude-compare", "Fock vs squeezed amplitude information");
  cmd_amp->add_option("--nmax", nmax, "Largest probe energy")->check(CLI::Range(1, 100000));
  cmd_amp->add_option("--eta", eta, "Transmissivity");
  cmd_amp->add_option("--out", amp_out, "Write CSV here and print a checksum envelope");

  std::vector<std::string> echo(argv + 1, argv + argc);
  try {
    app.parse(argc, argv);
    const std::uint64_t seed = resolve_seed(seed_opt, seed_flag);
    if (app.got_subcommand(cmd_cfi)) {
      cfi.has_r = opt_r->count() > 0;
      cfi.has_n = opt_n->count() > 0;
      cfi.has_w1 = opt_w1->count() > 0;
      cfi.has_alpha = opt_alpha->count() > 0;
      return run_cfi(cfi, seed, echo);
    }
    if (app.got_subcommand(cmd_sim)) return run_simulate(sim, seed, echo);
    if (app.got_subcommand(cmd_grid)) return run_loss_grid(vs, va, res, grid_out, seed, echo);
    if (app.got_subcommand(cmd_amp)) return run_amplitude_compare(nmax, eta, amp_out, seed, echo);
    return 2;
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const dispest::PhysicalityError& e) {
    std::cerr << "dispest: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "dispest: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "dispest: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "dispest: " << e.what() << "\n";
    return 1;
  }
}
