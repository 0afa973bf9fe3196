#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace kmdr {

using Index = Eigen::Index;

struct CensoredObservation {
  double y = 0.0;   // observed duration min(T, C)
  int delta = 1;    // 1 = event observed, 0 = censored
  std::vector<double> x;
};

// Validated right-censored sample (y_i, delta_i, x_i), i = 0..n-1.
// Immutable after construction.
class CensoredSample {
 public:
  // Throws ValidationError / EmptyInputError when the invariants fail:
  // n >= 1, y >= 0 and finite, delta in {0,1}, x finite, at least one event.
  CensoredSample(Eigen::VectorXd y, Eigen::VectorXi delta, Eigen::MatrixXd x,
                 std::vector<std::string> covariate_names = {});

  static CensoredSample from_observations(
      std::span<const CensoredObservation> obs,
      std::vector<std::string> covariate_names = {});

  Index n() const { return y_.size(); }
  Index k() const { return x_.cols(); }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::VectorXi& delta() const { return delta_; }
  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  CensoredObservation observation(Index i) const;
  Index events() const { return delta_.sum(); }

 private:
  Eigen::VectorXd y_;
  Eigen::VectorXi delta_;
  Eigen::MatrixXd x_;
  std::vector<std::string> names_;
};

// Sample sorted by duration. At tied durations events precede censorings;
// within the same (y, delta) group original row order is kept.
struct OrderedSample {
  std::vector<Index> order;  // order[i] = original row of the i-th order statistic
  Eigen::VectorXd y;         // Y_{i:n}
  Eigen::VectorXi delta;     // delta_[i:n]
  Eigen::MatrixXd x;         // X_[i:n] rows

  Index n() const { return y.size(); }
  Index k() const { return x.cols(); }
};

OrderedSample order_sample(const CensoredSample& s);

struct CsvColumns {
  std::string duration;
  std::string event;
  std::vector<std::string> covariates;  // empty: intercept-only model
};

// Header names of a CSV file.
std::vector<std::string> csv_header(const std::filesystem::path& path);

// Comma-delimited, header row required, decimal point only.
CensoredSample load_csv(const std::filesystem::path& path, const CsvColumns& cols);

}  // namespace kmdr
