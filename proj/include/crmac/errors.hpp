#pragma once

#include <stdexcept>
#include <string>

namespace crmac {

/// Parameter failed validation. The message starts with the offending field name.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Argument outside the mathematical domain of a function (e.g. Q^-1(0)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalInstabilityError : public std::runtime_error {
 public:
  NumericalInstabilityError(const std::string& what, double value)
      : std::runtime_error(what), value_(value) {}
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Stationary solve failed to reach the residual target.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Chain has more than one closed communicating class.
class NonErgodicError : public std::runtime_error {
 public:
  NonErgodicError(const std::string& what, std::size_t closed_classes)
      : std::runtime_error(what), closed_classes_(closed_classes) {}
  std::size_t closed_classes() const noexcept { return closed_classes_; }

 private:
  std::size_t closed_classes_;
};

class FixedPointError : public std::runtime_error {
 public:
  FixedPointError(const std::string& what, double previous, double last)
      : std::runtime_error(what), previous_(previous), last_(last) {}
  double previous() const noexcept { return previous_; }
  double last() const noexcept { return last_; }

 private:
  double previous_;
  double last_;
};

/// Empirical estimate requested from statistics that cannot support it.
class EstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two inputs that must describe the same configuration do not.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace crmac
