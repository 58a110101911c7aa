// Copyright 2026 The cellbus Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellbus {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// bus
class DuplicateDomain : public Error { using Error::Error; };
class DomainMissing : public Error { using Error::Error; };
class InvalidTopic : public Error { using Error::Error; };
class InvalidQos : public Error { using Error::Error; };
class EndpointClosed : public Error { using Error::Error; };

// messages
class UnknownSchema : public Error { using Error::Error; };
class SchemaConflict : public Error { using Error::Error; };
class UnknownNested : public Error { using Error::Error; };
class InvalidSchema : public Error { using Error::Error; };
class DecodeError : public Error { using Error::Error; };
class NoEchoField : public Error { using Error::Error; };
class FieldAccessError : public Error { using Error::Error; };

// bridge
class SelfBridge : public Error { using Error::Error; };

// hub / scenario
class ConfigError : public Error { using Error::Error; };
class UnresolvedReference : public Error {
 public:
  explicit UnresolvedReference(std::string name)
      : Error("unresolved reference: " + name), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class ParseError : public Error {
 public:
  ParseError(std::string file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(std::move(file)),
        line_(line) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// controller
class ModelError : public Error { using Error::Error; };
class InitialForbidden : public Error { using Error::Error; };
class OperationStuck : public Error {
 public:
  explicit OperationStuck(std::string operation)
      : Error("operation stuck: " + operation), operation_(std::move(operation)) {}
  const std::string& operation() const { return operation_; }

 private:
  std::string operation_;
};

// trace
class TraceCorrupt : public Error { using Error::Error; };

}  // namespace cellbus
