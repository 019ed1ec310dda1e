#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bciflow/errors.hpp"

namespace bciflow::sig {

/// A fixed-length real-valued time series, one row per channel. The time
/// axis is the final (column) axis.
struct Signal {
  Eigen::MatrixXd data;  // channels x length
  double freq = 250.0;   // Hz

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index length() const { return data.cols(); }
};

/// Throws ShapeMismatch/InvalidParams unless the signal has at least one
/// sample per channel and only finite values.
void validate(const Signal& signal);

struct Dataset {
  std::vector<Signal> samples;
  std::vector<int> labels;

  std::size_t size() const { return samples.size(); }
};

/// CSV with a header row; values written in 6-decimal fixed notation.
/// Columns are label,ch0_t0,...,ch{C-1}_t{L-1}; the sampling frequency is
/// not part of the format and defaults to 250 Hz on load.
std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& text, double freq = 250.0);

/// One accuracy row per grid point, 6-decimal fixed CSV with a header.
struct AccuracyTable {
  std::string param_name = "param";
  std::vector<std::pair<double, double>> rows;  // (param, accuracy)

  std::string to_csv() const;
};

}  // namespace bciflow::sig
