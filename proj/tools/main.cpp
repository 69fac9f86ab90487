#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "discbench/diagnostics.hpp"
#include "discbench/errors.hpp"
#include "discbench/gaussprob.hpp"
#include "discbench/gswalk.hpp"
#include "discbench/instances.hpp"
#include "discbench/matrix_io.hpp"
#include "discbench/moments.hpp"
#include "discbench/parallel.hpp"
#include "discbench/rng.hpp"
#include "discbench/truncation.hpp"

namespace {

using nlohmann::json;
using namespace discbench;

constexpr int kMaxTries = 10000;

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");
  return cfg;
}

// Flag beats config beats fallback. Config keys use the long flag name
// without dashes.
template <class T>
T merged(const CLI::Option* opt, const T& flag_value, const json& cfg,
         const std::string& key, const T& fallback) {
  if (opt != nullptr && opt->count() > 0) return flag_value;
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  }
  return fallback;
}

std::uint64_t required_seed(const CLI::Option* opt, std::uint64_t flag_value,
                            const json& cfg) {
  if (opt->count() > 0) return flag_value;
  if (cfg.contains("seed")) {
    try {
      return cfg.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key 'seed': ") + e.what());
    }
  }
  throw ConfigError("seed is required (--seed or config key \"seed\"); "
                    "runs never seed themselves from the clock");
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << body;
  if (!out) throw IoError("write failed: " + path);
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  if (v.size() % 2 == 1) return v[m];
  return 0.5 * (v[m - 1] + v[m]);
}

// Options shared by every subcommand; each one stores the parsed values and
// the CLI11 handles needed for the flag-beats-config rule.
struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int workers = 0;
  bool as_json = false;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* workers_opt = nullptr;
  CLI::Option* json_opt = nullptr;

  void attach(CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file; flags win");
    seed_opt = sub->add_option("--seed", seed, "run seed (mandatory)");
    out_opt = sub->add_option("--out", out, "output path");
    workers_opt = sub->add_option("--workers", workers, "worker threads");
    json_opt = sub->add_flag("--json", as_json, "machine-readable stdout");
  }

  // Resolved values once the config file is available.
  json cfg;
  std::uint64_t rseed = 0;
  std::string rout;
  int rworkers = 1;
  bool rjson = false;

  void resolve() {
    cfg = load_config(config_path);
    rseed = required_seed(seed_opt, seed, cfg);
    rout = merged(out_opt, out, cfg, "out", std::string());
    rworkers = merged(workers_opt, workers, cfg, "workers", default_workers());
    if (rworkers < 1) throw ConfigError("workers must be >= 1");
    rjson = json_opt->count() > 0 ? as_json
                                  : cfg.value("json", false);
  }
};

KomlosMatrix instance_from(const Common& c, const CLI::Option* kind_opt,
                           const std::string& kind_flag,
                           const CLI::Option* d_opt, int d_flag,
                           const CLI::Option* n_opt, int n_flag,
                           const CLI::Option* matrix_opt,
                           const std::string& matrix_flag,
                           std::string* kind_out, int defaults_d,
                           int defaults_n) {
  const std::string matrix_path =
      matrix_opt ? merged(matrix_opt, matrix_flag, c.cfg, "matrix",
                          std::string())
                 : std::string();
  if (!matrix_path.empty()) {
    if (kind_out) *kind_out = "file:" + matrix_path;
    return komlos_from_matrix(read_matrix_text(matrix_path));
  }
  const std::string kind = merged(kind_opt, kind_flag, c.cfg, "kind",
                                  std::string("random_unit_columns"));
  const int d = merged(d_opt, d_flag, c.cfg, "d", defaults_d);
  const int n = merged(n_opt, n_flag, c.cfg, "n", defaults_n);
  if (kind_out) *kind_out = kind;
  return make_instance(kind, d, n, derive_seed(c.rseed, 1));
}

// ---------------------------------------------------------------------------
// gen: write an instance (optionally smoothed) as a matrix text file.

int run_gen(Common& c, const CLI::Option* kind_opt, const std::string& kind_flag,
            const CLI::Option* d_opt, int d_flag, const CLI::Option* n_opt,
            int n_flag, const CLI::Option* sigma_opt, double sigma_flag) {
  c.resolve();
  std::string kind;
  const KomlosMatrix base = instance_from(c, kind_opt, kind_flag, d_opt, d_flag,
                                          n_opt, n_flag, nullptr, "", &kind,
                                          8, 512);
  const double sigma = merged(sigma_opt, sigma_flag, c.cfg, "sigma", 0.0);
  if (c.rout.empty()) throw ConfigError("gen needs --out");
  if (sigma > 0.0) {
    const SmoothedMatrix a =
        add_noise(base, NoiseConfig{sigma, derive_seed(c.rseed, 2)});
    write_matrix_text(c.rout, a.entries);
  } else {
    write_matrix_text(c.rout, base.entries);
  }
  if (c.rjson) {
    json rep{{"kind", kind},
             {"d", base.d()},
             {"n", base.n()},
             {"sigma", sigma},
             {"seed", c.rseed},
             {"out", c.rout}};
    std::cout << rep.dump(2) << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------------------
// walk: K stacked-walk draws; per-sample norms CSV plus a summary JSON.

int run_walk(Common& c, const CLI::Option* kind_opt, const std::string& kind_flag,
             const CLI::Option* d_opt, int d_flag, const CLI::Option* n_opt,
             int n_flag, const CLI::Option* matrix_opt,
             const std::string& matrix_flag, const CLI::Option* samples_opt,
             std::int64_t samples_flag) {
  c.resolve();
  std::string kind;
  const KomlosMatrix m =
      instance_from(c, kind_opt, kind_flag, d_opt, d_flag, n_opt, n_flag,
                    matrix_opt, matrix_flag, &kind, 8, 512);
  const std::int64_t samples =
      merged(samples_opt, samples_flag, c.cfg, "samples", std::int64_t{100});
  if (samples < 1) throw ConfigError("walk needs samples >= 1");

  std::vector<StackedSample> slots(static_cast<std::size_t>(samples));
  const std::uint64_t dom = derive_seed(c.rseed, 2);
  parallel_jobs(samples, c.rworkers, [&](std::int64_t i) {
    slots[static_cast<std::size_t>(i)] =
        sample_stacked(m, derive_seed(dom, static_cast<std::uint64_t>(i)));
  });

  std::ostringstream csv;
  csv << "sample,mx_norm2,mx_norminf,iterations\n";
  std::vector<double> norm2(slots.size()), norminf(slots.size());
  int iterations_max = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    norm2[i] = slots[i].disc.norm();
    norminf[i] = slots[i].disc.size() > 0
                     ? slots[i].disc.cwiseAbs().maxCoeff()
                     : 0.0;
    iterations_max = std::max(iterations_max, slots[i].iterations);
    csv << i << ',' << format_double(norm2[i]) << ','
        << format_double(norminf[i]) << ',' << slots[i].iterations << '\n';
  }

  json summary{{"kind", kind},
               {"d", m.d()},
               {"n", m.n()},
               {"samples", samples},
               {"seed", c.rseed},
               {"iterations_max", iterations_max},
               {"norm2_mean",
                std::accumulate(norm2.begin(), norm2.end(), 0.0) /
                    static_cast<double>(norm2.size())},
               {"norm2_median", median_of(norm2)},
               {"norm2_min", *std::min_element(norm2.begin(), norm2.end())},
               {"norm2_max", *std::max_element(norm2.begin(), norm2.end())},
               {"norminf_min",
                *std::min_element(norminf.begin(), norminf.end())},
               {"norminf_median", median_of(norminf)}};

  if (!c.rout.empty()) {
    write_text(c.rout, csv.str());
    write_text(c.rout + ".json", summary.dump(2) + "\n");
  }
  if (c.rjson) {
    std::cout << summary.dump(2) << "\n";
  } else if (c.rout.empty()) {
    std::cout << csv.str();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// moments: ratio sweep over an ascending list of n.

int run_moments(Common& c, const CLI::Option* kind_opt,
                const std::string& kind_flag, const CLI::Option* d_opt,
                int d_flag, const CLI::Option* ns_opt,
                const std::vector<int>& ns_flag, const CLI::Option* sigma_opt,
                double sigma_flag, const CLI::Option* delta_opt,
                double delta_flag, const CLI::Option* hs_opt,
                std::int64_t hs_flag, const CLI::Option* hb_opt, int hb_flag,
                const CLI::Option* fs_opt, std::int64_t fs_flag,
                const CLI::Option* pairs_opt, std::int64_t pairs_flag) {
  c.resolve();
  const std::string kind = merged(kind_opt, kind_flag, c.cfg, "kind",
                                  std::string("random_unit_columns"));
  const int d = merged(d_opt, d_flag, c.cfg, "d", 8);
  const std::vector<int> ns =
      merged(ns_opt, ns_flag, c.cfg, "n", std::vector<int>{256, 1024, 4096});

  SweepOptions opts;
  opts.sigma = merged(sigma_opt, sigma_flag, c.cfg, "sigma", 1.0);
  opts.Delta = merged(delta_opt, delta_flag, c.cfg, "Delta", 0.0);
  opts.hist_samples =
      merged(hs_opt, hs_flag, c.cfg, "hist_samples", std::int64_t{2000});
  opts.hist_bins = merged(hb_opt, hb_flag, c.cfg, "hist_bins", 64);
  opts.first_samples =
      merged(fs_opt, fs_flag, c.cfg, "first_samples", std::int64_t{400});
  opts.pairs = merged(pairs_opt, pairs_flag, c.cfg, "pairs", std::int64_t{1000});
  opts.workers = c.rworkers;
  opts.kind = kind;

  const std::vector<MomentReport> reports =
      moment_ratio_sweep(kind, d, ns, c.rseed, opts);
  const std::string csv = moment_csv_string(reports);

  if (!c.rout.empty()) write_text(c.rout, csv);
  if (c.rjson) {
    json rows = json::array();
    for (const MomentReport& r : reports) {
      rows.push_back(json{{"d", r.d},
                          {"n", r.n},
                          {"sigma", r.sigma},
                          {"Delta", r.Delta},
                          {"window_r", r.window_r},
                          {"window_w", r.window_w},
                          {"p_ref_log", r.p_ref_log},
                          {"first", r.first},
                          {"first_se", r.first_se},
                          {"second", r.second},
                          {"second_se", r.second_se},
                          {"ratio", r.ratio},
                          {"eventE", r.event_E_freq},
                          {"claim3_viol", r.claim3_viol},
                          {"lambda_min", r.lambda_min},
                          {"pairs", r.pairs},
                          {"seed", r.seed}});
    }
    std::cout << rows.dump(2) << "\n";
  } else if (c.rout.empty()) {
    std::cout << csv;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// verify: the diagnostic battery; exit 0 iff every check passes.

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  json data;
};

json tail_to_json(const TailReport& r) {
  json points = json::array();
  for (const TailPoint& p : r.points) {
    points.push_back(json{{"t", p.t},
                          {"empirical", p.empirical},
                          {"bound", p.bound},
                          {"ratio", p.ratio},
                          {"slack", p.slack},
                          {"ok", p.ok}});
  }
  return json{{"points", points},
              {"worst_ratio", r.worst_ratio},
              {"prefactor", r.prefactor},
              {"directions", r.directions},
              {"samples", r.samples},
              {"ok", r.ok}};
}

json mgf_to_json(const MgfReport& r) {
  json points = json::array();
  for (const MgfPoint& p : r.points) {
    points.push_back(json{{"lambda", p.lambda},
                          {"empirical", p.empirical},
                          {"bound", p.bound},
                          {"ratio", p.ratio},
                          {"ok", p.ok}});
  }
  return json{{"points", points},
              {"worst_ratio", r.worst_ratio},
              {"alpha", r.alpha},
              {"directions", r.directions},
              {"samples", r.samples},
              {"ok", r.ok}};
}

int run_verify(Common& c, const CLI::Option* kind_opt,
               const std::string& kind_flag, const CLI::Option* d_opt,
               int d_flag, const CLI::Option* n_opt, int n_flag,
               const CLI::Option* sigma_opt, double sigma_flag,
               const CLI::Option* delta_opt, double delta_flag,
               const CLI::Option* hs_opt, std::int64_t hs_flag,
               const CLI::Option* hb_opt, int hb_flag,
               const CLI::Option* samples_opt, std::int64_t samples_flag,
               const CLI::Option* pairs_opt, std::int64_t pairs_flag,
               const CLI::Option* dirs_opt, int dirs_flag, bool faulty) {
  c.resolve();
  const std::string kind = merged(kind_opt, kind_flag, c.cfg, "kind",
                                  std::string("random_unit_columns"));
  const int d = merged(d_opt, d_flag, c.cfg, "d", 8);
  const int n = merged(n_opt, n_flag, c.cfg, "n", 512);
  const double sigma = merged(sigma_opt, sigma_flag, c.cfg, "sigma", 1.0);
  const double Delta = merged(delta_opt, delta_flag, c.cfg, "Delta", 0.0);
  const std::int64_t hist_samples =
      merged(hs_opt, hs_flag, c.cfg, "hist_samples", std::int64_t{3000});
  const int hist_bins = merged(hb_opt, hb_flag, c.cfg, "hist_bins", 16);
  const std::int64_t samples =
      merged(samples_opt, samples_flag, c.cfg, "samples", std::int64_t{1500});
  const std::int64_t pairs =
      merged(pairs_opt, pairs_flag, c.cfg, "pairs", std::int64_t{1000});
  const int directions = merged(dirs_opt, dirs_flag, c.cfg, "directions", 24);
  if (d < 2) throw ConfigError("verify needs d >= 2");
  if (samples < 1000) throw ConfigError("verify needs samples >= 1000");
  if (pairs < 1000) throw ConfigError("verify needs pairs >= 1000");

  const std::uint64_t seed = c.rseed;
  const KomlosMatrix base = make_instance(kind, d, n, derive_seed(seed, 1));
  const SmoothedMatrix A =
      add_noise(base, NoiseConfig{sigma, derive_seed(seed, 2)});
  const KernelParams params = make_kernel_params(d, n, sigma, Delta);
  const NormHistogram hist =
      estimate_norm_histogram(base, static_cast<int>(hist_samples), hist_bins,
                              derive_seed(seed, 3), 3.0, c.rworkers);
  const TruncationWindow window = select_annulus(hist);

  // Shared truncated sample set. The faulty-sampler switch swaps in a
  // constant coloring while keeping the real window, which is exactly the
  // defect the tail battery is supposed to catch.
  std::vector<Eigen::VectorXd> colorings(static_cast<std::size_t>(samples));
  std::vector<Eigen::VectorXd> discs(static_cast<std::size_t>(samples));
  std::vector<double> norms(static_cast<std::size_t>(samples));
  const std::uint64_t trunc_dom = derive_seed(seed, 4);
  if (faulty) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const Eigen::VectorXd disc = base.entries * ones;
    for (std::size_t i = 0; i < colorings.size(); ++i) {
      colorings[i] = ones;
      discs[i] = disc;
      norms[i] = disc.norm();
    }
  } else {
    parallel_jobs(samples, c.rworkers, [&](std::int64_t i) {
      const TruncatedSample s = sample_truncated(
          base, window, derive_seed(trunc_dom, static_cast<std::uint64_t>(i)),
          kMaxTries);
      colorings[static_cast<std::size_t>(i)] = s.coloring.signs;
      discs[static_cast<std::size_t>(i)] = s.disc;
      norms[static_cast<std::size_t>(i)] = s.norm;
    });
  }

  std::vector<CheckResult> checks;

  {
    CheckResult r;
    r.name = "window_mass";
    const double in_range =
        static_cast<double>(hist.total - hist.overflow) /
        static_cast<double>(hist.total);
    const double floor = in_range / static_cast<double>(hist.counts.size());
    r.pass = window.mass > 0.0 && window.mass + 1e-12 >= floor;
    r.detail = "mass=" + format_double(window.mass) +
               " pigeonhole_floor=" + format_double(floor);
    r.data = json{{"mass", window.mass},
                  {"floor", floor},
                  {"r", window.r},
                  {"width", window.width}};
    checks.push_back(std::move(r));
  }

  {
    CheckResult r;
    r.name = "truncation_containment";
    std::int64_t outside = 0;
    for (double v : norms) {
      if (!(v >= window.r && v < window.r + window.width)) ++outside;
    }
    r.pass = outside == 0;
    r.detail = "outside_window=" + std::to_string(outside) + " of " +
               std::to_string(norms.size());
    r.data = json{{"outside", outside}, {"samples", samples}};
    checks.push_back(std::move(r));
  }

  const std::vector<double> tail_grid{1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0};
  {
    CheckResult r;
    r.name = "tail_x";
    const TailReport rep =
        tail_test_from_samples(colorings, directions, tail_grid,
                               1.0 / window.mass, derive_seed(seed, 5));
    r.pass = rep.ok;
    r.detail = "worst_ratio=" + format_double(rep.worst_ratio);
    r.data = tail_to_json(rep);
    checks.push_back(std::move(r));
  }
  {
    CheckResult r;
    r.name = "tail_disc";
    const TailReport rep =
        tail_test_from_samples(discs, directions, tail_grid,
                               1.0 / window.mass, derive_seed(seed, 6));
    r.pass = rep.ok;
    r.detail = "worst_ratio=" + format_double(rep.worst_ratio);
    r.data = tail_to_json(rep);
    checks.push_back(std::move(r));
  }

  {
    // Raw walk on the instance columns, no truncation: the signed sum must be
    // 1-subgaussian because every column norm is <= 1.
    CheckResult r;
    r.name = "mgf_signed_sum";
    std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(samples));
    const std::uint64_t dom = derive_seed(seed, 8);
    const Eigen::VectorXd start = Eigen::VectorXd::Zero(n);
    parallel_jobs(samples, c.rworkers, [&](std::int64_t i) {
      const Coloring x = gs_walk(
          base.entries, start, derive_seed(dom, static_cast<std::uint64_t>(i)));
      sums[static_cast<std::size_t>(i)] = base.entries * x.signs;
    });
    const MgfReport rep = mgf_test_from_samples(
        sums, directions, {0.5, 1.0, 2.0}, 1.0, derive_seed(seed, 7));
    r.pass = rep.ok;
    r.detail = "worst_ratio=" + format_double(rep.worst_ratio);
    r.data = mgf_to_json(rep);
    checks.push_back(std::move(r));
  }
  {
    // Stacked draw, no truncation; (x, Mx) jointly on columns of norm <= sqrt(2).
    CheckResult r;
    r.name = "mgf_stacked";
    std::vector<Eigen::VectorXd> joint(static_cast<std::size_t>(samples));
    const std::uint64_t dom = derive_seed(seed, 10);
    parallel_jobs(samples, c.rworkers, [&](std::int64_t i) {
      const StackedSample s =
          sample_stacked(base, derive_seed(dom, static_cast<std::uint64_t>(i)));
      Eigen::VectorXd v(n + d);
      v.head(n) = s.coloring.signs;
      v.tail(d) = s.disc;
      joint[static_cast<std::size_t>(i)] = std::move(v);
    });
    const MgfReport rep = mgf_test_from_samples(
        joint, directions, {0.5, 1.0, 1.5}, 2.0, derive_seed(seed, 9));
    r.pass = rep.ok;
    r.detail = "worst_ratio=" + format_double(rep.worst_ratio);
    r.data = mgf_to_json(rep);
    checks.push_back(std::move(r));
  }

  std::vector<PairRecord> records;
  {
    CheckResult r;
    r.name = "product_bound";
    const PairMomentResult second =
        estimate_second_moment(A, window, params, pairs, derive_seed(seed, 11),
                               c.rworkers, &records);
    r.pass = second.bound_violations == 0;
    r.detail = "violations=" + std::to_string(second.bound_violations) +
               " event_pairs=" + std::to_string(second.event_pairs);
    r.data = json{{"violations", second.bound_violations},
                  {"event_pairs", second.event_pairs},
                  {"pairs", second.pairs},
                  {"second", second.second.value},
                  {"second_se", second.second.se},
                  {"mean_product_bound", second.mean_product_bound}};
    checks.push_back(std::move(r));
  }

  {
    // Pointwise band around the reference kernel; holds deterministically,
    // so a single sample outside it is a failure.
    CheckResult r;
    r.name = "band_check";
    const double lref = log_p_ref(params, window.r);
    const double dd = params.delta * params.delta;
    std::int64_t outside = 0;
    double worst = 0.0;
    for (const Eigen::VectorXd& disc : discs) {
      const double lp = log_p_x(disc, params);
      const double band =
          2.0 * dd * params.Delta *
              (disc.lpNorm<1>() + static_cast<double>(d) * params.Delta) +
          dd * (window.r * window.width + window.width * window.width / 2.0);
      const double gap = std::abs(lp - lref);
      worst = std::max(worst, gap - band);
      if (gap > band + 1e-9) ++outside;
    }
    r.pass = outside == 0;
    r.detail = "outside_band=" + std::to_string(outside) +
               " worst_excess=" + format_double(worst);
    r.data = json{{"outside", outside}, {"worst_excess", worst}};
    checks.push_back(std::move(r));
  }

  {
    // Squared-exponential moment of the pair overlap statistic against the
    // growth envelope at scale lambda_min.
    CheckResult r;
    r.name = "exp_moment_growth";
    const double lambda = lambda_min(d, n, sigma);
    const double logd = std::log(static_cast<double>(d));
    const double c2 = lambda / std::sqrt(logd);
    const double C1 = std::log(2.0 / window.mass) / logd;
    const double bound = exp_moment_bound(C1, c2);
    std::vector<double> xs;
    xs.reserve(records.size());
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (const PairRecord& rec : records) {
      const double eps_bar = std::abs(rec.eps) * sqrt_n;
      const double theta_bar =
          window.r > 0.0 ? std::abs(rec.inner_disc) / window.r : 0.0;
      xs.push_back(eps_bar + theta_bar);
    }
    const ExpMomentReport rep = exp_moment(xs, lambda);
    r.pass = rep.overflow == 0 && rep.value <= bound + 3.0 * rep.se;
    r.detail = "value=" + format_double(rep.value) +
               " bound=" + format_double(bound) +
               " se=" + format_double(rep.se);
    r.data = json{{"value", rep.value},
                  {"se", rep.se},
                  {"bound", bound},
                  {"lambda", lambda},
                  {"C1", C1},
                  {"c2", c2},
                  {"overflow", rep.overflow}};
    checks.push_back(std::move(r));
  }

  bool all_pass = true;
  for (const CheckResult& r : checks) all_pass = all_pass && r.pass;

  json report{{"kind", kind},
              {"d", d},
              {"n", n},
              {"sigma", sigma},
              {"seed", seed},
              {"samples", samples},
              {"pairs", pairs},
              {"directions", directions},
              {"window", window_to_json(window)},
              {"pass", all_pass}};
  json jchecks = json::array();
  for (const CheckResult& r : checks) {
    jchecks.push_back(json{{"name", r.name},
                           {"pass", r.pass},
                           {"detail", r.detail},
                           {"report", r.data}});
  }
  report["checks"] = jchecks;

  if (!c.rout.empty()) write_text(c.rout, report.dump(2) + "\n");
  if (c.rjson) {
    std::cout << report.dump(2) << "\n";
  } else {
    for (const CheckResult& r : checks) {
      std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  "
                << r.detail << "\n";
    }
    std::cout << (all_pass ? "verify: all checks passed"
                           : "verify: checks failed")
              << "\n";
  }
  return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// discrepancy: weighted sampling on the smoothed matrix vs uniform baseline.

int run_discrepancy(Common& c, const CLI::Option* kind_opt,
                    const std::string& kind_flag, const CLI::Option* d_opt,
                    int d_flag, const CLI::Option* n_opt, int n_flag,
                    const CLI::Option* sigma_opt, double sigma_flag,
                    const CLI::Option* samples_opt, std::int64_t samples_flag,
                    const CLI::Option* hs_opt, std::int64_t hs_flag,
                    const CLI::Option* hb_opt, int hb_flag,
                    const std::string& dump_matrix) {
  c.resolve();
  const std::string kind =
      merged(kind_opt, kind_flag, c.cfg, "kind", std::string("repeat_unit"));
  const int d = merged(d_opt, d_flag, c.cfg, "d", 16);
  const int n = merged(n_opt, n_flag, c.cfg, "n", 2048);
  const double sigma = merged(sigma_opt, sigma_flag, c.cfg, "sigma", 1.0);
  const std::int64_t K =
      merged(samples_opt, samples_flag, c.cfg, "samples", std::int64_t{64});
  const std::int64_t hist_samples =
      merged(hs_opt, hs_flag, c.cfg, "hist_samples", std::int64_t{1000});
  const int hist_bins = merged(hb_opt, hb_flag, c.cfg, "hist_bins", 16);
  if (K < 1) throw ConfigError("discrepancy needs samples >= 1");

  const std::uint64_t seed = c.rseed;
  const KomlosMatrix base = make_instance(kind, d, n, derive_seed(seed, 1));
  const SmoothedMatrix A =
      add_noise(base, NoiseConfig{sigma, derive_seed(seed, 2)});
  if (!dump_matrix.empty()) write_matrix_text(dump_matrix, A.entries);

  // The weighted sampler runs on the smoothed matrix itself. Its columns can
  // exceed unit norm, so the walk sees A scaled by its largest column norm;
  // scaling commutes with everything reported here.
  double scale = 0.0;
  for (int j = 0; j < n; ++j) scale = std::max(scale, A.entries.col(j).norm());
  if (!(scale > 0.0)) throw ValidationError("smoothed matrix is zero");
  const KomlosMatrix scaled = komlos_from_matrix(A.entries / scale);

  const NormHistogram hist =
      estimate_norm_histogram(scaled, static_cast<int>(hist_samples), hist_bins,
                              derive_seed(seed, 3), 3.0, c.rworkers);
  const TruncationWindow window = select_annulus(hist);

  std::vector<double> weighted(static_cast<std::size_t>(K));
  const std::uint64_t gs_dom = derive_seed(seed, 4);
  parallel_jobs(K, c.rworkers, [&](std::int64_t i) {
    const TruncatedSample s = sample_truncated(
        scaled, window, derive_seed(gs_dom, static_cast<std::uint64_t>(i)),
        kMaxTries);
    weighted[static_cast<std::size_t>(i)] =
        scale * s.disc.cwiseAbs().maxCoeff();
  });

  std::vector<double> uniform(static_cast<std::size_t>(K));
  const std::uint64_t unif_dom = derive_seed(seed, 5);
  parallel_jobs(K, c.rworkers, [&](std::int64_t i) {
    RngStream rng(derive_seed(unif_dom, static_cast<std::uint64_t>(i)));
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = rng.uniform() < 0.5 ? -1.0 : 1.0;
    uniform[static_cast<std::size_t>(i)] = discrepancy(A.entries, x);
  });

  const double weighted_min =
      *std::min_element(weighted.begin(), weighted.end());
  const double weighted_median = median_of(weighted);
  const double uniform_min = *std::min_element(uniform.begin(), uniform.end());
  const double uniform_median = median_of(uniform);
  json report{{"kind", kind},
              {"d", d},
              {"n", n},
              {"sigma", sigma},
              {"seed", seed},
              {"samples", K},
              {"scale", scale},
              {"window", window_to_json(window)},
              {"weighted_min", weighted_min},
              {"weighted_median", weighted_median},
              {"uniform_min", uniform_min},
              {"uniform_median", uniform_median}};

  if (!c.rout.empty()) write_text(c.rout, report.dump(2) + "\n");
  if (c.rjson) {
    std::cout << report.dump(2) << "\n";
  } else {
    std::cout << "weighted_min=" << format_double(weighted_min)
              << " weighted_median=" << format_double(weighted_median)
              << " uniform_min=" << format_double(uniform_min)
              << " uniform_median=" << format_double(uniform_median) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"workbench for smoothed-instance coloring experiments"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "write an instance matrix to disk");
  Common gen_c;
  gen_c.attach(gen);
  std::string gen_kind;
  int gen_d = 0, gen_n = 0;
  double gen_sigma = 0.0;
  auto* gen_kind_o = gen->add_option("--kind", gen_kind, "instance kind");
  auto* gen_d_o = gen->add_option("-d,--rows", gen_d, "rows");
  auto* gen_n_o = gen->add_option("-n,--cols", gen_n, "columns");
  auto* gen_sigma_o =
      gen->add_option("--sigma", gen_sigma, "smoothing level; 0 = base only");

  // walk
  auto* walk = app.add_subcommand("walk", "sample stacked-walk colorings");
  Common walk_c;
  walk_c.attach(walk);
  std::string walk_kind, walk_matrix;
  int walk_d = 0, walk_n = 0;
  std::int64_t walk_samples = 0;
  auto* walk_kind_o = walk->add_option("--kind", walk_kind, "instance kind");
  auto* walk_d_o = walk->add_option("-d,--rows", walk_d, "rows");
  auto* walk_n_o = walk->add_option("-n,--cols", walk_n, "columns");
  auto* walk_matrix_o =
      walk->add_option("--matrix", walk_matrix, "matrix file instead of --kind");
  auto* walk_samples_o =
      walk->add_option("--samples", walk_samples, "number of draws");

  // moments
  auto* moments = app.add_subcommand("moments", "moment-ratio sweep CSV");
  Common mom_c;
  mom_c.attach(moments);
  std::string mom_kind;
  int mom_d = 0, mom_hb = 0;
  std::vector<int> mom_ns;
  double mom_sigma = 0.0, mom_Delta = 0.0;
  std::int64_t mom_hs = 0, mom_fs = 0, mom_pairs = 0;
  auto* mom_kind_o = moments->add_option("--kind", mom_kind, "instance kind");
  auto* mom_d_o = moments->add_option("-d,--rows", mom_d, "rows");
  auto* mom_ns_o = moments->add_option("-n,--cols", mom_ns, "ascending n list")
                       ->delimiter(',');
  auto* mom_sigma_o = moments->add_option("--sigma", mom_sigma, "noise level");
  auto* mom_Delta_o =
      moments->add_option("--Delta", mom_Delta, "target radius; 0 = default");
  auto* mom_hs_o =
      moments->add_option("--hist-samples", mom_hs, "histogram draws per cell");
  auto* mom_hb_o = moments->add_option("--hist-bins", mom_hb, "histogram bins");
  auto* mom_fs_o =
      moments->add_option("--first-samples", mom_fs, "first-moment draws");
  auto* mom_pairs_o =
      moments->add_option("--pairs", mom_pairs, "second-moment pairs");

  // verify
  auto* verify = app.add_subcommand("verify", "diagnostic battery");
  Common ver_c;
  ver_c.attach(verify);
  std::string ver_kind;
  int ver_d = 0, ver_n = 0, ver_hb = 0, ver_dirs = 0;
  double ver_sigma = 0.0, ver_Delta = 0.0;
  std::int64_t ver_hs = 0, ver_samples = 0, ver_pairs = 0;
  bool ver_faulty = false;
  auto* ver_kind_o = verify->add_option("--kind", ver_kind, "instance kind");
  auto* ver_d_o = verify->add_option("-d,--rows", ver_d, "rows");
  auto* ver_n_o = verify->add_option("-n,--cols", ver_n, "columns");
  auto* ver_sigma_o = verify->add_option("--sigma", ver_sigma, "noise level");
  auto* ver_Delta_o =
      verify->add_option("--Delta", ver_Delta, "target radius; 0 = default");
  auto* ver_hs_o =
      verify->add_option("--hist-samples", ver_hs, "histogram draws");
  auto* ver_hb_o = verify->add_option("--hist-bins", ver_hb, "histogram bins");
  auto* ver_samples_o =
      verify->add_option("--samples", ver_samples, "diagnostic draws");
  auto* ver_pairs_o = verify->add_option("--pairs", ver_pairs, "pair draws");
  auto* ver_dirs_o =
      verify->add_option("--directions", ver_dirs, "test directions");
  verify->add_flag("--faulty-sampler", ver_faulty,
                   "swap in a broken sampler (battery must fail)")
      ->group("");

  // discrepancy
  auto* disc = app.add_subcommand("discrepancy",
                                  "weighted vs uniform minimum search");
  Common disc_c;
  disc_c.attach(disc);
  std::string disc_kind, disc_dump;
  int disc_d = 0, disc_n = 0, disc_hb = 0;
  double disc_sigma = 0.0;
  std::int64_t disc_samples = 0, disc_hs = 0;
  auto* disc_kind_o = disc->add_option("--kind", disc_kind, "instance kind");
  auto* disc_d_o = disc->add_option("-d,--rows", disc_d, "rows");
  auto* disc_n_o = disc->add_option("-n,--cols", disc_n, "columns");
  auto* disc_sigma_o = disc->add_option("--sigma", disc_sigma, "noise level");
  auto* disc_samples_o =
      disc->add_option("--samples", disc_samples, "colorings per arm");
  auto* disc_hs_o =
      disc->add_option("--hist-samples", disc_hs, "histogram draws");
  auto* disc_hb_o = disc->add_option("--hist-bins", disc_hb, "histogram bins");
  disc->add_option("--dump-matrix", disc_dump,
                   "also write the smoothed matrix to this path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      return run_gen(gen_c, gen_kind_o, gen_kind, gen_d_o, gen_d, gen_n_o,
                     gen_n, gen_sigma_o, gen_sigma);
    }
    if (walk->parsed()) {
      return run_walk(walk_c, walk_kind_o, walk_kind, walk_d_o, walk_d,
                      walk_n_o, walk_n, walk_matrix_o, walk_matrix,
                      walk_samples_o, walk_samples);
    }
    if (moments->parsed()) {
      return run_moments(mom_c, mom_kind_o, mom_kind, mom_d_o, mom_d, mom_ns_o,
                         mom_ns, mom_sigma_o, mom_sigma, mom_Delta_o, mom_Delta,
                         mom_hs_o, mom_hs, mom_hb_o, mom_hb, mom_fs_o, mom_fs,
                         mom_pairs_o, mom_pairs);
    }
    if (verify->parsed()) {
      return run_verify(ver_c, ver_kind_o, ver_kind, ver_d_o, ver_d, ver_n_o,
                        ver_n, ver_sigma_o, ver_sigma, ver_Delta_o, ver_Delta,
                        ver_hs_o, ver_hs, ver_hb_o, ver_hb, ver_samples_o,
                        ver_samples, ver_pairs_o, ver_pairs, ver_dirs_o,
                        ver_dirs, ver_faulty);
    }
    if (disc->parsed()) {
      return run_discrepancy(disc_c, disc_kind_o, disc_kind, disc_d_o, disc_d,
                             disc_n_o, disc_n, disc_sigma_o, disc_sigma,
                             disc_samples_o, disc_samples, disc_hs_o, disc_hs,
                             disc_hb_o, disc_hb, disc_dump);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
