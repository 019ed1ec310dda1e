#include "bciflow/signal.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace bciflow::sig {

namespace {

std::string fixed6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

}  // namespace

void validate(const Signal& signal) {
  if (signal.data.rows() < 1 || signal.data.cols() < 1) {
    raise(Errc::ShapeMismatch, "signal needs at least one channel and one sample");
  }
  if (!signal.data.allFinite()) {
    raise(Errc::InvalidParams, "signal contains non-finite values");
  }
}

std::string dataset_to_csv(const Dataset& dataset) {
  if (dataset.samples.size() != dataset.labels.size()) {
    raise(Errc::ShapeMismatch, "dataset has " + std::to_string(dataset.samples.size()) +
                                   " samples but " + std::to_string(dataset.labels.size()) +
                                   " labels");
  }
  std::ostringstream out;
  if (dataset.samples.empty()) {
    out << "label\n";
    return out.str();
  }
  const Eigen::Index channels = dataset.samples.front().channels();
  const Eigen::Index length = dataset.samples.front().length();
  out << "label";
  for (Eigen::Index c = 0; c < channels; ++c) {
    for (Eigen::Index t = 0; t < length; ++t) {
      out << ",ch" << c << "_t" << t;
    }
  }
  out << "\n";
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const Signal& signal = dataset.samples[i];
    if (signal.channels() != channels || signal.length() != length) {
      raise(Errc::ShapeMismatch, "sample " + std::to_string(i) + " has a different shape");
    }
    out << dataset.labels[i];
    for (Eigen::Index c = 0; c < channels; ++c) {
      for (Eigen::Index t = 0; t < length; ++t) {
        out << ',' << fixed6(signal.data(c, t));
      }
    }
    out << "\n";
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text, double freq) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    raise(Errc::ParseError, "dataset CSV is empty");
  }
  // Infer the shape from the last header column, chC_tT.
  Eigen::Index channels = 0, length = 0;
  std::size_t value_columns = 0;
  {
    std::size_t pos = line.rfind(',');
    if (pos != std::string::npos) {
      const std::string last = line.substr(pos + 1);
      Eigen::Index c = 0, t = 0;
      if (std::sscanf(last.c_str(), "ch%ld_t%ld", &c, &t) == 2) {
        channels = c + 1;
        length = t + 1;
        value_columns = static_cast<std::size_t>(channels * length);
      } else {
        raise(Errc::ParseError, "bad dataset header column '" + last + "'");
      }
    }
  }
  Dataset dataset;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    if (!std::getline(row, cell, ',')) {
      raise(Errc::ParseError, "dataset line " + std::to_string(line_no) + " is empty");
    }
    Signal signal;
    signal.freq = freq;
    signal.data.resize(channels, length);
    dataset.labels.push_back(std::stoi(cell));
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      if (count >= value_columns) {
        raise(Errc::ParseError, "dataset line " + std::to_string(line_no) + " has extra columns");
      }
      signal.data(static_cast<Eigen::Index>(count) / length,
                  static_cast<Eigen::Index>(count) % length) = std::stod(cell);
      ++count;
    }
    if (count != value_columns) {
      raise(Errc::ParseError, "dataset line " + std::to_string(line_no) + " has " +
                                  std::to_string(count) + " values, expected " +
                                  std::to_string(value_columns));
    }
    dataset.samples.push_back(std::move(signal));
  }
  return dataset;
}

std::string AccuracyTable::to_csv() const {
  std::ostringstream out;
  out << param_name << ",accuracy\n";
  for (const auto& [param, acc] : rows) {
    out << fixed6(param) << ',' << fixed6(acc) << "\n";
  }
  return out.str();
}

}  // namespace bciflow::sig
