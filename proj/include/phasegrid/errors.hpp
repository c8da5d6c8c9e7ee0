// Copyright 2026 The phasegrid Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PHASEGRID_ERRORS_HPP
#define PHASEGRID_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace phasegrid {

/// All likelihood products vanished; the posterior cannot be normalized.
class DegeneratePosterior : public std::runtime_error {
 public:
  explicit DegeneratePosterior(const std::string& what) : std::runtime_error(what) {}
};

/// Covariance could not be made positive definite even after regularization.
class SingularCovariance : public std::runtime_error {
 public:
  explicit SingularCovariance(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid run configuration; the CLI maps this to exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace phasegrid

#endif  // PHASEGRID_ERRORS_HPP
