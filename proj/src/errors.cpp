// Copyright 2026 The treaty-escrow Authors.
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


#include "tescrow/errors.hpp"

namespace tescrow {

std::string_view error_name(const std::exception& e) noexcept {
    if (dynamic_cast<const SuiteError*>(&e)) return "SuiteError";
    if (dynamic_cast<const BoundsError*>(&e)) return "BoundsError";
    if (dynamic_cast<const InvalidKey*>(&e)) return "InvalidKey";
    if (dynamic_cast<const EncodingError*>(&e)) return "EncodingError";
    if (dynamic_cast<const FormatError*>(&e)) return "FormatError";
    if (dynamic_cast<const DeclarationError*>(&e)) return "DeclarationError";
    if (dynamic_cast<const NotASite*>(&e)) return "NotASite";
    if (dynamic_cast<const IsASite*>(&e)) return "IsASite";
    if (dynamic_cast<const IntegrityError*>(&e)) return "IntegrityError";
    if (dynamic_cast<const ProtocolViolation*>(&e)) return "ProtocolViolation";
    return "Error";
}

}  // namespace tescrow
