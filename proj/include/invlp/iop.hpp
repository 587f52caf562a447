#pragma once

#include <optional>
#include <string>
#include <vector>

#include "invlp/lp.hpp"
#include "invlp/milp.hpp"
#include "invlp/qp.hpp"

namespace invlp {

// All data use the minimisation convention: the forward problem is min c'x s.t. A x <= b.

enum class LossNorm { L1, Inf };

// Accepts "1", "l1", "inf", "linf"; "2" is rejected since it would need a mixed-integer QP.
LossNorm parse_loss_norm(const std::string& s);
const char* to_string(LossNorm n);

struct ExperimentData {
  int id = 0;
  Polytope poly;
  std::vector<Vec> observations;
};

struct IopInstance {
  std::vector<ExperimentData> experiments;
  Vec reference;                   // c-bar; may be empty when only phase 1 is wanted
  LossNorm norm = LossNorm::L1;
  Vec sign_lower, sign_upper;      // bounds on c-hat, empty for none
  std::optional<double> big_m;

  int dim() const;
  // Throws std::invalid_argument on inconsistent dimensions or non-finite data.
  void validate() const;
};

// P1 works on rows scaled to unit 2-norm and bounds every slack by its exact range, so M only
// has to dominate the multipliers of unit rows against a unit 1-norm cost. Returns 1e4.
double default_big_m(const IopInstance& inst, const std::vector<int>& subset);

struct VertexProjection {
  std::vector<int> subset;                // indices into instance.experiments
  std::vector<Vec> x;                     // one vertex per subset entry
  std::vector<std::vector<int>> active;   // T(x_i)
  std::vector<double> loss;
  double total_loss = 0.0;
  Vec c;                                  // a unit 1-norm cost certifying the projection
  MilpStatus status = MilpStatus::NoSolution;
  double big_m = 0.0;
  int big_m_escalations = 0;
  double big_m_usage = 0.0;  // largest needed multiplier (unit rows) divided by M
  long nodes = 0;

  bool optimal() const { return status == MilpStatus::Optimal; }
  bool found() const { return status == MilpStatus::Optimal || status == MilpStatus::IncumbentOnly; }
};

// Intersection of per-experiment cones {-a_t : t in T(x_i)} and the sign bounds.
struct AdmissibleCone {
  std::vector<ConeGenerators> cones;
  Vec lower, upper;

  int dim() const;
  bool contains(const Vec& v, double tol = Tolerances::feasibility) const;
};

AdmissibleCone admissible_cone(const IopInstance& inst, const VertexProjection& proj);
ConeGenerators cone_of_vertex(const Polytope& poly, const std::vector<int>& active);

struct CostEstimate {
  Vec c;
  double distance2 = 0.0;  // ||c-bar - c||^2
  int projection = 0;      // index of the phase-1 optimum that produced it
  bool trivial = false;    // c = 0: the reference admits nothing better
};

// How joint P1 problems are solved (two_phase, and the decomposition after an FP conflict).
enum class ResolveMethod {
  Enumerate,  // best-first search over per-experiment vertex rankings, MILP once max_tuples is hit
  Milp,       // joint P1 as one MILP
};

struct IopOptions {
  MilpBudget budget = MilpBudget::from_env();
  ResolveMethod resolve = ResolveMethod::Enumerate;
  long max_tuples = 20000;
  double tie_tol = 1e-7;        // losses within tie_tol * (1 + |r|) count as equal
  int max_optima = 1000;        // cap on enumerated phase-1 optima
  bool strengthen = true;       // valid bound rows and primal heuristics in P1
  std::optional<double> outlier_mad;  // drop samples beyond k * MAD when set
};

// Index layout of a built P1 model.
struct P1Model {
  MilpModel milp;
  std::vector<int> subset;
  int n = 0;
  double big_m = 0.0;
  std::vector<int> c, cplus, cminus, w;
  std::vector<std::vector<int>> x, s, lam, z;
  // per experiment: loss = loss_const[i] + sum loss_val * var
  std::vector<std::vector<int>> loss_idx;
  std::vector<std::vector<double>> loss_val;
  std::vector<double> loss_const;
};

P1Model build_p1(const IopInstance& inst, const std::vector<int>& subset, double big_m);

// Adds sum_i sum_{t not in T(x_i)} z_it >= 1: at least one experiment moves to another vertex.
void add_integer_cut(P1Model& model, const VertexProjection& proj);

// Lower bound rows loss_i >= r_i; valid when r_i is the single-experiment optimum.
void add_loss_floor(P1Model& model, int position, double floor);

// loss_i >= floor_i + (value - floor_i) z_it for every row t outside `active`: moving experiment
// `position` off the vertex with active set `active` costs at least `value` (kInf: impossible).
struct SecondBest {
  int position = 0;
  std::vector<int> active;
  double value = kInf;
};

struct Phase1Options {
  IopOptions iop;
  std::optional<VertexProjection> warm_start;
  std::vector<VertexProjection> cuts;   // previously found optima to exclude
  double cutoff = kInf;                 // only accept losses <= cutoff
  std::vector<double> floors;           // single-experiment optima, per subset entry
  std::vector<SecondBest> second_best;  // needs floors
  std::vector<Vec> seed_costs;          // candidate costs tried before branching
};

// Best single-experiment loss over vertices with an active row outside `active`.
double second_best_loss(const IopInstance& inst, int experiment, const std::vector<int>& active,
                        double floor, const IopOptions& options = {});

VertexProjection solve_phase1(const IopInstance& inst, const std::vector<int>& subset,
                              const Phase1Options& options = {});

double loss_eval(const std::vector<Vec>& x, const IopInstance& inst, const std::vector<int>& subset);
double experiment_loss(const Vec& x, const ExperimentData& e, LossNorm norm);

MilpModel build_fp(const AdmissibleCone& cone);
// True iff the intersection holds a point with unit 1-norm; the point is written to witness.
bool solve_fp(const AdmissibleCone& cone, Vec* witness = nullptr, const MilpBudget& budget = {});

CostEstimate solve_phase2(const IopInstance& inst, const AdmissibleCone& cone, int projection = 0);

struct TwoPhaseResult {
  std::vector<CostEstimate> estimates;        // all minimisers, in discovery order
  std::vector<VertexProjection> optima;       // all phase-1 optima found
  double phase1_loss = 0.0;
  bool complete = true;                       // false when a budget stopped the enumeration
};

TwoPhaseResult two_phase(const IopInstance& inst, const IopOptions& options = {});

struct DecompositionStep {
  int experiment = 0;          // -1 when nothing under the sign bounds fits it
  double loss_prefix = 0.0;    // total phase-1 loss over experiments processed so far
  double single_loss = 0.0;    // this experiment's own optimum
  bool fp_feasible = true;
  bool resolved = false;       // a joint re-solve happened at this step
  std::optional<CostEstimate> estimate;  // filled by online_run
  double seconds = 0.0;
};

struct DecompositionResult {
  VertexProjection projection;
  AdmissibleCone cone;
  CostEstimate estimate;
  int resolves = 0;
  bool partial = false;
  std::vector<DecompositionStep> steps;
};

DecompositionResult decomposition_solve(const IopInstance& inst, const IopOptions& options = {});

// Same sequence as decomposition_solve with a phase-2 estimate after every experiment.
DecompositionResult online_run(const IopInstance& inst, const std::vector<int>& order = {},
                               const IopOptions& options = {});

// Admissible vertices of each experiment in order of loss, produced on demand by single-experiment
// P1 solves with cuts, and a best-first search over their tuples for the joint optimum.
class VertexRanking {
 public:
  explicit VertexRanking(IopOptions options = {}) : opt_(std::move(options)) {}
  // Registers the next experiment of the instance with its single-experiment optimum.
  void push(VertexProjection best);
  void pop();
  int size() const { return static_cast<int>(lists_.size()); }
  // k-th best (0-based); nullptr when experiment i has fewer, when it would lose more than
  // `limit`, or when a solve failed (see failed()).
  const VertexProjection* get(const IopInstance& inst, int i, int k, double limit = kInf);
  bool failed() const { return failed_; }

  struct Result {
    std::vector<VertexProjection> optima;  // all tuples within the tie tolerance of the best
    bool complete = true;   // false when max_tuples, max_optima or an unfinished solve cut it short
  };
  // The experiments registered so far form the joint problem; optima come out in discovery order.
  Result search(const IopInstance& inst, int max_optima);

 private:
  // Lower bound on the loss of the next entry of experiment i.
  double next_bound(const IopInstance& inst, int i);

  IopOptions opt_;
  std::vector<std::vector<VertexProjection>> lists_;
  std::vector<char> exhausted_;
  std::vector<double> next_lb_;  // the next entry is known to lose more than this
  std::vector<Vec> plane_loss_;  // per row: least loss with that row tight, empty until needed
  bool failed_ = false;
};

// Incremental form of online_run for callers that choose experiments as they go.
class OnlineState {
 public:
  // Experiments already in `base` are ignored; estimates are refreshed after every step
  // only when estimate_each is set.
  OnlineState(const IopInstance& base, IopOptions options = {}, bool estimate_each = true);
  // Appends the experiment and updates projection, cone and estimate.
  const DecompositionStep& add(ExperimentData e);
  const IopInstance& instance() const { return inst_; }
  const VertexProjection& projection() const { return proj_; }
  const AdmissibleCone& cone() const { return cone_; }
  const CostEstimate& estimate() const { return est_; }
  int resolves() const { return resolves_; }
  bool partial() const { return partial_; }
  const std::vector<DecompositionStep>& steps() const { return steps_; }

 private:
  IopInstance inst_;
  IopOptions opt_;
  VertexProjection proj_;
  AdmissibleCone cone_;
  CostEstimate est_;
  std::vector<double> floors_;
  VertexRanking ranking_;
  std::vector<DecompositionStep> steps_;
  int resolves_ = 0;
  bool partial_ = false;
  bool estimate_each_ = true;
};

// Drops observations with a coordinate further than k * MAD from the coordinate median.
ExperimentData trim_outliers(const ExperimentData& e, double k);

}  // namespace invlp
