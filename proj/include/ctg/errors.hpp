// Copyright (c) 2026 The ctg authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ctg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoFailure : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

}  // namespace ctg
