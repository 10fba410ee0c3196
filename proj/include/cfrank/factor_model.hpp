#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cfrank/matrix.hpp"

namespace cfrank {

/// One line of a training log.
struct EpochRecord {
  int epoch = 0;
  double objective = 0.0;
  double metric = 0.0;  // validation metric, NaN when none was computed
  double seconds = 0.0;
  double metric2 = std::numeric_limits<double>::quiet_NaN();  // second validation metric

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Learned factors. Prediction for (i, j) is <U[i], V[j]>.
struct FactorModel {
  std::string algorithm;  // mf | grmf | grwmf | cofactor | primal-cr | primal-crpp | sql-rank
  Matrix user_factors;    // n x r
  Matrix item_factors;    // m x r
  std::optional<Matrix> side_factors;  // V' for Co-Factor
  std::vector<EpochRecord> log;

  std::size_t n_users() const noexcept { return user_factors.rows(); }
  std::size_t n_items() const noexcept { return item_factors.rows(); }
  std::size_t rank() const noexcept { return item_factors.cols(); }

  double predict(std::size_t user, std::size_t item) const {
    return dot(user_factors.row(user), item_factors.row(item));
  }
  /// Scores of every item for one user.
  std::vector<double> scores(std::size_t user) const;
};

/// Text format: "CF-MODEL v1" header, mode tag, "n m r", then U rows, V rows
/// and an optional V' section, values written so they reload bit-exactly.
void save_model(std::ostream& out, const FactorModel& model);
FactorModel load_model(std::istream& in);
void save_model_file(const std::string& path, const FactorModel& model);
FactorModel load_model_file(const std::string& path);

/// Tab-separated "epoch objective metric seconds metric2" lines after a '#' header.
void save_log(std::ostream& out, const std::vector<EpochRecord>& log);
std::vector<EpochRecord> load_log(std::istream& in);

}  // namespace cfrank
