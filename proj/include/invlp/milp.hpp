#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "invlp/simplex.hpp"

namespace invlp {

// Minimisation model with continuous and binary variables and ranged rows.
struct MilpModel {
  struct Row {
    std::vector<int> idx;
    std::vector<double> val;
    double lo = -kInf;
    double hi = kInf;
  };

  std::vector<double> obj;
  double obj_offset = 0.0;
  std::vector<double> lb, ub;
  std::vector<char> binary;
  std::vector<std::string> names;
  std::vector<Row> rows;
  std::optional<std::vector<double>> incumbent;

  int add_var(double lo, double hi, double cost = 0.0, std::string name = {});
  int add_binary(double cost = 0.0, std::string name = {});
  int add_row(std::vector<int> idx, std::vector<double> val, double lo, double hi);
  int add_le(std::vector<int> idx, std::vector<double> val, double rhs) {
    return add_row(std::move(idx), std::move(val), -kInf, rhs);
  }
  int add_ge(std::vector<int> idx, std::vector<double> val, double rhs) {
    return add_row(std::move(idx), std::move(val), rhs, kInf);
  }
  int add_eq(std::vector<int> idx, std::vector<double> val, double rhs) {
    return add_row(std::move(idx), std::move(val), rhs, rhs);
  }

  int num_vars() const { return static_cast<int>(obj.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  int num_binaries() const;

  double objective(const std::vector<double>& x) const;
  // Largest bound, row or integrality violation, rows measured relative to 1 + |rhs|.
  double max_violation(const std::vector<double>& x) const;
};

enum class MilpStatus { Optimal, Infeasible, IncumbentOnly, NoSolution };

const char* to_string(MilpStatus s);

struct MilpBudget {
  long node_limit = std::numeric_limits<long>::max();
  double time_limit = std::numeric_limits<double>::infinity();  // seconds

  // INVLP_NODE_LIMIT / INVLP_TIME_LIMIT override the defaults when set.
  static MilpBudget from_env();
};

struct MilpOptions {
  MilpBudget budget;
  double int_tol = 1e-6;
  double feas_tol = 1e-7;
  double rel_gap = 1e-9;
  double abs_gap = 1e-9;
  // Nodes whose bound exceeds the cutoff are discarded; with no solution at or
  // below it the status is Infeasible.
  double cutoff = std::numeric_limits<double>::infinity();
  // Called with the relaxation at branching nodes; may return a full assignment.
  std::function<std::optional<std::vector<double>>(const std::vector<double>&)> heuristic;
  int heuristic_depth = 1 << 30;
};

struct MilpSolution {
  MilpStatus status = MilpStatus::NoSolution;
  std::vector<double> x;
  double objective = std::numeric_limits<double>::infinity();
  double best_bound = -std::numeric_limits<double>::infinity();
  long nodes = 0;
  long lp_iterations = 0;
  double seconds = 0.0;

  bool has_solution() const {
    return status == MilpStatus::Optimal || status == MilpStatus::IncumbentOnly;
  }
};

MilpSolution solve_milp(const MilpModel& model, const MilpOptions& options = {});

}  // namespace invlp
