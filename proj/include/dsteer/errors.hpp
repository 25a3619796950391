/*
 Copyright 2026 The dsteer Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef DSTEER_ERRORS_HPP_
#define DSTEER_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace dsteer {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes are incompatible.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Step or layer index outside its valid range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment or component configuration. `field` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// A Jacobian determinant vanished or changed sign. `step` is -1 when unknown.
class SingularityError : public Error {
 public:
  SingularityError(const std::string& message, int step = -1)
      : Error(step >= 0 ? message + " (step " + std::to_string(step) + ")" : message),
        step_(step) {}

  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Fixed-point iteration did not reach tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& message, double residual)
      : Error(message + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(int step, std::string term)
      : Error("non-finite " + term + " at training step " + std::to_string(step)),
        step_(step),
        term_(std::move(term)) {}

  int step() const noexcept { return step_; }
  const std::string& term() const noexcept { return term_; }

 private:
  int step_;
  std::string term_;
};

}  // namespace dsteer

#endif  // DSTEER_ERRORS_HPP_
