//
// Copyright (C) 2026 The clod Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "clod/error.hpp"

namespace clod {

void throw_invalid(const std::string& what) { throw InvalidInput(what); }

}  // namespace clod
