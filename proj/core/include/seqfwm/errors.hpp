#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace seqfwm {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A frequency or wavelength lies outside the validity range of a model.
class RangeError : public Error {
 public:
  RangeError(const std::string& what, double bound) : Error(what), bound_(bound) {}
  double bound() const noexcept { return bound_; }

 private:
  double bound_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, std::vector<double> residuals)
      : Error(what), residuals_(std::move(residuals)) {}
  /// Remaining |delta_beta * L| per target, rad.
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Step-size control gave up; carries the position and step where it happened.
class StiffnessError : public Error {
 public:
  StiffnessError(const std::string& what, double z, double step)
      : Error(what), z_(z), step_(step) {}
  double z() const noexcept { return z_; }
  double step() const noexcept { return step_; }

 private:
  double z_;
  double step_;
};

class AliasingError : public Error {
 public:
  AliasingError(const std::string& what, double edge_fraction)
      : Error(what), edge_fraction_(edge_fraction) {}
  double edge_fraction() const noexcept { return edge_fraction_; }

 private:
  double edge_fraction_;
};

}  // namespace seqfwm
