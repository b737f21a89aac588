// Copyright 2026 The xcevo Authors.
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


#ifndef XCEVO_EXPORT_H_
#define XCEVO_EXPORT_H_

// best.json: each factor's program in the text format plus named trained
// parameters and the J values it was scored with.

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xcevo/functional.h"

namespace xcevo {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FunctionalExport {
  FunctionalForm form{Program(EmptySchema()), Program(EmptySchema()),
                      Program(EmptySchema())};
  std::vector<double> params;  // flat layout of `form`
  std::optional<double> j_train;
  std::optional<double> j_val;
  std::optional<double> j_test;
};

std::string ExportJson(const FunctionalExport& e);

// Throws ExportError for malformed JSON, bad programs (with line/column),
// missing or unknown parameter names.
FunctionalExport ImportJson(std::string_view text);

FunctionalExport LoadFunctionalFile(const std::string& path);
void SaveFunctionalFile(const FunctionalExport& e, const std::string& path);

}  // namespace xcevo

#endif  // XCEVO_EXPORT_H_
