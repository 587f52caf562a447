#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "instance_io.hpp"
#include "invlp/sampling.hpp"

using namespace invlp;

namespace {

constexpr int kOptimal = 0, kError = 1, kPartial = 2;

struct GenArgs {
  int n = 10, H = 1, J = 5, experiments = -1, test_size = 100;
  double sigma = -1.0;
  std::uint64_t seed = 0;
  bool no_perturb = false;
  std::string out;
};

struct SolveArgs {
  std::string in, out = "-", reference, mode = "two-phase", norm = "1", resolve = "enumerate";
  std::optional<double> big_m, outlier_mad;
  std::optional<std::uint64_t> seed;
  bool no_timing = false;
};

struct OnlineArgs {
  std::string in, out = "-", space, reference, norm = "1";
  int adaptive = 0, cap = 20;
  std::optional<int> experiments, J;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  double epsilon = 1.0;
  bool no_timing = false;
};

// Signs follow the bounds that fix them; magnitudes are uniform and the result has unit 1-norm.
Vec random_reference(const IopInstance& inst, std::uint64_t seed) {
  const int n = inst.dim();
  Rng r = Rng::stream(seed, streams::reference);
  Vec c(n);
  for (int p = 0; p < n; ++p) {
    double m = r.uniform(0.01, 1.0);
    bool neg = inst.sign_upper.size() && inst.sign_upper[p] <= 0.0;
    bool pos = inst.sign_lower.size() && inst.sign_lower[p] >= 0.0;
    if (!neg && !pos) neg = r.uniform() < 0.5;
    c[p] = neg ? -m : m;
  }
  return c / c.lpNorm<1>();
}

std::uint64_t doc_seed(const io::Document& d, const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (d.generator.is_object() && d.generator.contains("seed")) return d.generator["seed"].get<std::uint64_t>();
  return 0;
}

void set_reference(io::Document& d, const std::string& how, std::uint64_t seed) {
  IopInstance& inst = d.instance;
  if (how == "true") {
    if (!d.hidden) throw std::invalid_argument("--reference true needs hidden_cost in the instance");
    inst.reference = *d.hidden;
  } else if (how == "file") {
    if (!inst.reference.size()) throw std::invalid_argument("--reference file needs reference_cost in the instance");
  } else if (how == "random") {
    inst.reference = random_reference(inst, seed);
  } else if (how.empty()) {
    if (!inst.reference.size()) inst.reference = random_reference(inst, seed);
  } else {
    throw std::invalid_argument("unknown reference '" + how + "'");
  }
}

struct Output {
  std::ofstream file;
  std::ostream* os = &std::cout;
  explicit Output(const std::string& path) {
    if (path != "-") {
      file.open(path, std::ios::binary);
      if (!file) throw std::runtime_error("cannot write " + path);
      os = &file;
    }
  }
};

void fill_metrics(std::optional<double>& pe, std::optional<double>& dv, const Vec& c, const TestSet& t) {
  if (t.points.empty() || c.size() == 0) return;
  pe = prediction_error(c, t);
  dv = dv_metric(c, t);
}

io::RunRecord record_of(const DecompositionStep& s, int step, const TestSet& test, bool timing) {
  io::RunRecord r;
  r.step = step;
  r.experiment = s.experiment;
  r.loss_prefix = s.loss_prefix;
  r.single_loss = s.single_loss;
  r.fp_feasible = s.fp_feasible;
  r.resolved = s.resolved;
  r.estimate = s.estimate;
  if (timing) r.seconds = s.seconds;
  if (s.estimate) fill_metrics(r.prediction_error, r.dv, s.estimate->c, test);
  return r;
}

void print_estimate(const char* label, const CostEstimate& e) {
  std::fprintf(stderr, "%s:", label);
  for (int p = 0; p < e.c.size(); ++p) std::fprintf(stderr, " %.6g", e.c[p]);
  std::fprintf(stderr, "%s\n", e.trivial ? " (trivial)" : "");
}

int run_gen(const std::string& kind, const GenArgs& a) {
  Generated g;
  io::Document d;
  if (kind == "customer") {
    CustomerConfig c;
    c.n = a.n;
    c.J = a.J;
    c.seed = a.seed;
    c.test_size = a.test_size;
    if (a.sigma >= 0) c.sigma = a.sigma;
    if (a.experiments >= 0) c.num_experiments = a.experiments;
    g = gen_customer(c);
    d.generator = {{"kind", kind}, {"n", c.n}, {"sigma", c.sigma}, {"J", c.J},
                   {"experiments", c.num_experiments}, {"seed", c.seed}};
  } else {
    ProductionConfig c;
    c.H = a.H;
    c.J = a.J;
    c.seed = a.seed;
    c.test_size = a.test_size;
    c.perturb = !a.no_perturb;
    if (a.sigma >= 0) c.sigma = a.sigma;
    if (a.experiments >= 0) c.num_experiments = a.experiments;
    g = gen_production(c);
    d.generator = {{"kind", kind}, {"H", c.H}, {"sigma", c.sigma}, {"J", c.J},
                   {"experiments", c.num_experiments}, {"seed", c.seed}, {"perturb", c.perturb}};
  }
  d.instance = std::move(g.instance);
  d.instance.reference = g.random_reference;
  d.hidden = g.hidden;
  d.space = std::move(g.space);
  d.test = std::move(g.test);
  io::write_document(a.out, d);
  std::fprintf(stderr, "wrote %zu experiments (n = %d) to %s\n", d.instance.experiments.size(),
               d.instance.dim(), a.out.c_str());
  return kOptimal;
}

IopOptions options_from(const std::string& resolve, const std::optional<double>& mad) {
  IopOptions o;
  if (resolve == "milp")
    o.resolve = ResolveMethod::Milp;
  else if (resolve != "enumerate")
    throw std::invalid_argument("unknown resolve method '" + resolve + "'");
  o.outlier_mad = mad;
  return o;
}

int run_solve(const SolveArgs& a) {
  io::Document d = io::read_document(a.in);
  IopInstance& inst = d.instance;
  if (inst.experiments.empty()) throw std::invalid_argument("instance has no experiments");
  inst.norm = parse_loss_norm(a.norm);
  inst.big_m = a.big_m;
  set_reference(d, a.reference, doc_seed(d, a.seed));
  IopOptions opt = options_from(a.resolve, a.outlier_mad);
  Output out(a.out);
  const int n = inst.dim();

  if (a.mode == "two-phase") {
    TwoPhaseResult r = two_phase(inst, opt);
    std::vector<io::EstimateRow> rows;
    for (const auto& e : r.estimates) {
      io::EstimateRow row{e, r.phase1_loss, r.complete, {}, {}};
      fill_metrics(row.prediction_error, row.dv, e.c, d.test);
      rows.push_back(row);
    }
    io::write_estimates(*out.os, rows, n);
    std::fprintf(stderr, "phase-1 loss %.10g, %zu optima, %zu estimates%s\n", r.phase1_loss,
                 r.optima.size(), r.estimates.size(), r.complete ? "" : " (partial)");
    for (const auto& e : r.estimates) print_estimate("estimate", e);
    return r.complete && !r.estimates.empty() ? kOptimal : kPartial;
  }
  if (a.mode == "decompose") {
    DecompositionResult r = decomposition_solve(inst, opt);
    std::vector<io::RunRecord> rows;
    for (std::size_t l = 0; l < r.steps.size(); ++l) {
      DecompositionStep s = r.steps[l];
      if (l + 1 == r.steps.size()) s.estimate = r.estimate;
      rows.push_back(record_of(s, static_cast<int>(l) + 1, d.test, !a.no_timing));
    }
    io::write_records(*out.os, rows, n);
    std::fprintf(stderr, "loss %.10g, %d joint re-solves%s\n", r.projection.total_loss, r.resolves,
                 r.partial ? " (partial)" : "");
    print_estimate("estimate", r.estimate);
    return r.partial ? kPartial : kOptimal;
  }
  throw std::invalid_argument("unknown mode '" + a.mode + "'");
}

int run_online(const OnlineArgs& a) {
  io::Document d = io::read_document(a.in);
  IopInstance& inst = d.instance;
  inst.norm = parse_loss_norm(a.norm);
  const std::uint64_t seed = doc_seed(d, a.seed);
  set_reference(d, a.reference, seed);
  Output out(a.out);
  const int n = inst.dim();
  std::vector<io::RunRecord> rows;

  if (a.adaptive <= 0) {
    if (inst.experiments.empty()) throw std::invalid_argument("instance has no experiments");
    DecompositionResult r = online_run(inst);
    for (std::size_t l = 0; l < r.steps.size(); ++l)
      rows.push_back(record_of(r.steps[l], static_cast<int>(l) + 1, d.test, !a.no_timing));
    io::write_records(*out.os, rows, n);
    std::fprintf(stderr, "loss %.10g, %d joint re-solves%s\n", r.projection.total_loss, r.resolves,
                 r.partial ? " (partial)" : "");
    print_estimate("estimate", r.estimate);
    return r.partial ? kPartial : kOptimal;
  }

  ParameterSpace space;
  if (!a.space.empty())
    space = io::read_space(a.space);
  else if (d.space)
    space = *d.space;
  else
    throw std::invalid_argument("--adaptive needs a parameter space (--space or parameter_space)");
  if (space.dim() != n) throw std::invalid_argument("parameter space dimension differs from the instance");
  if (!d.hidden) throw std::invalid_argument("--adaptive needs hidden_cost to synthesize observations");
  auto gen_value = [&](const char* key, double fallback) {
    return d.generator.is_object() && d.generator.contains(key) ? d.generator[key].get<double>() : fallback;
  };
  AdaptiveConfig cfg;
  cfg.S = a.adaptive;
  cfg.seed = seed;
  cfg.experiments = a.experiments.value_or(static_cast<int>(gen_value("experiments", 30)));
  cfg.J = a.J.value_or(static_cast<int>(gen_value("J", 5)));
  cfg.sigma = a.sigma.value_or(gen_value("sigma", 0.01));
  cfg.eta.epsilon = a.epsilon;
  cfg.eta.cap = a.cap;
  cfg.eta.ascent_seed = seed;
  if (cfg.experiments < 1 || cfg.J < 1 || cfg.sigma < 0)
    throw std::invalid_argument("experiments and J must be positive, sigma nonnegative");

  IopInstance base = inst;
  base.experiments.clear();
  bool partial = false;
  int step = 0;
  adaptive_online(base, space, *d.hidden, cfg, {}, [&](const AdaptiveStep& s, const OnlineState& st) {
    io::RunRecord r = record_of(s.step, ++step, d.test, !a.no_timing);
    r.eta = s.eta;
    rows.push_back(r);
    partial = st.partial();
  });
  io::write_records(*out.os, rows, n);
  if (!rows.empty() && rows.back().estimate) print_estimate("estimate", *rows.back().estimate);
  return partial ? kPartial : kOptimal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inverse linear optimisation from noisy optimal solutions"};
  app.require_subcommand(1);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic instance");
  gen->require_subcommand(1);
  auto* cust = gen->add_subcommand("customer", "Customer preference instances");
  auto* prod = gen->add_subcommand("production", "Production planning instances");
  cust->add_option("--n", ga.n, "Number of products")->check(CLI::PositiveNumber);
  prod->add_option("--H", ga.H, "Number of periods")->check(CLI::PositiveNumber);
  prod->add_flag("--no-perturb", ga.no_perturb, "Use nominal data in every scenario");
  for (auto* sc : {cust, prod}) {
    sc->add_option("--sigma", ga.sigma, "Noise standard deviation");
    sc->add_option("--J", ga.J, "Observations per experiment");
    sc->add_option("--experiments", ga.experiments, "Number of experiments");
    sc->add_option("--seed", ga.seed, "Random seed");
    sc->add_option("--test-size", ga.test_size, "Test points for the error metrics");
    sc->add_option("--out", ga.out, "Output JSON")->required();
  }

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Estimate the cost vector of an instance");
  solve->add_option("--in", sa.in, "Instance JSON")->required();
  solve->add_option("--out", sa.out, "Output CSV, - for stdout");
  solve->add_option("--reference", sa.reference, "random | file | true")
      ->check(CLI::IsMember({"random", "file", "true"}));
  solve->add_option("--mode", sa.mode, "two-phase | decompose")->check(CLI::IsMember({"two-phase", "decompose"}));
  solve->add_option("--norm", sa.norm, "Loss norm: 1 | inf");
  solve->add_option("--big-m", sa.big_m, "Big-M for the multiplier bounds")->check(CLI::PositiveNumber);
  solve->add_option("--resolve", sa.resolve, "Joint solves: enumerate | milp");
  solve->add_option("--outlier-mad", sa.outlier_mad, "Drop samples beyond k * MAD");
  solve->add_option("--seed", sa.seed, "Seed of the random reference");
  solve->add_flag("--no-timing", sa.no_timing, "Leave the seconds column empty");

  OnlineArgs oa;
  auto* online = app.add_subcommand("online", "Process experiments one at a time");
  online->add_option("--in", oa.in, "Instance JSON")->required();
  online->add_option("--out", oa.out, "Output CSV, - for stdout");
  online->add_option("--adaptive", oa.adaptive, "Candidates per step; 0 replays the stored experiments");
  online->add_option("--space", oa.space, "Parameter space JSON");
  online->add_option("--experiments", oa.experiments, "Experiments to select");
  online->add_option("--J", oa.J, "Observations per selected experiment");
  online->add_option("--sigma", oa.sigma, "Noise of the synthesized observations");
  online->add_option("--seed", oa.seed, "Seed for selection and noise");
  online->add_option("--epsilon", oa.epsilon, "Scale of the distance box")->check(CLI::PositiveNumber);
  online->add_option("--cap", oa.cap, "Largest generator count scored exactly");
  online->add_option("--reference", oa.reference, "random | file | true")
      ->check(CLI::IsMember({"random", "file", "true"}));
  online->add_option("--norm", oa.norm, "Loss norm: 1 | inf");
  online->add_flag("--no-timing", oa.no_timing, "Leave the seconds column empty");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kError;
  }

  try {
    if (gen->parsed()) return run_gen(cust->parsed() ? "customer" : "production", ga);
    if (solve->parsed()) return run_solve(sa);
    return run_online(oa);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kError;
  }
}
