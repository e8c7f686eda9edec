#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace ssvb {

using Matrix = Eigen::MatrixXd;  // column-major; CAVI iterates over columns
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// n observations of (x_i, y_i) with binary labels.
struct Dataset {
  Matrix X;  // n x p
  Vector y;  // entries in {0, 1}

  Index n() const { return X.rows(); }
  Index p() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1 || X.cols() < 1)
      throw std::invalid_argument("Dataset: need n >= 1 and p >= 1");
    if (y.size() != X.rows())
      throw std::invalid_argument("Dataset: y length " +
                                  std::to_string(y.size()) +
                                  " does not match X rows " +
                                  std::to_string(X.rows()));
    if (!X.allFinite())
      throw std::invalid_argument("Dataset: X contains non-finite entries");
    for (Index i = 0; i < y.size(); ++i) {
      if (y[i] != 0.0 && y[i] != 1.0)
        throw std::invalid_argument("Dataset: y[" + std::to_string(i) +
                                    "] = " + std::to_string(y[i]) +
                                    " is not in {0,1}");
    }
  }
};

inline void check_theta(const Dataset& data, const Vector& theta) {
  if (theta.size() != data.p())
    throw std::invalid_argument("coefficient vector has length " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(data.p()));
}

}  // namespace ssvb
