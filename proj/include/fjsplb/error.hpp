// Copyright 2026 The fjsplb Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace fjsplb {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid generator / training / CLI configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Instance (or other document) violates its invariants.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Malformed document; the message carries the location.
class ParseError : public Error {
public:
    using Error::Error;
};

// Caller broke a precondition (ineligible action, shape mismatch, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class InfeasibleKittingError : public Error {
public:
    using Error::Error;
};

// NaN / Inf encountered in network math.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace fjsplb
