#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "invlp/datagen.hpp"
#include "invlp/iop.hpp"
#include "json.hpp"

namespace invlp::io {

using nlohmann::json;

// Everything an instance file can carry. Costs follow the minimisation convention.
struct Document {
  IopInstance instance;  // reference is reference_cost when present
  std::optional<Vec> hidden;
  std::optional<ParameterSpace> space;
  TestSet test;
  json generator;  // seed, sigma, J and kind of the generating run; null otherwise
};

// Floats with 17 significant digits, so values survive a write/read cycle bit for bit.
std::string dump(const json& j);
json to_json(const Document& d);
Document from_json(const json& j);
json space_to_json(const ParameterSpace& s);
ParameterSpace space_from_json(const json& j);

Document read_document(const std::string& path);
void write_document(const std::string& path, const Document& d);
// A bare parameter-space object or any document holding "parameter_space".
ParameterSpace read_space(const std::string& path);

std::string format_double(double v);

// One row per processed experiment.
struct RunRecord {
  int step = 0;
  int experiment = 0;
  double loss_prefix = 0.0;
  double single_loss = 0.0;
  bool fp_feasible = true;
  bool resolved = false;
  std::optional<double> prediction_error, dv, eta;
  std::optional<double> seconds;
  std::optional<CostEstimate> estimate;
};

// step,experiment,loss_prefix,single_loss,fp_feasible,resolved,trivial,distance2,
// prediction_error,dv,eta,seconds,c1..cn. Missing values are empty cells.
void write_records(std::ostream& out, const std::vector<RunRecord>& rows, int n);

struct EstimateRow {
  CostEstimate estimate;
  double phase1_loss = 0.0;
  bool complete = true;
  std::optional<double> prediction_error, dv;
};

// estimate,projection,phase1_loss,complete,trivial,distance2,prediction_error,dv,c1..cn
void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows, int n);

}  // namespace invlp::io
