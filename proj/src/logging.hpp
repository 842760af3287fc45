// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <spdlog/spdlog.h>

namespace ecsp::log {

/// stderr logger; level comes from ECSP_LOG (trace|debug|info|warn|error|off), default warn.
spdlog::logger& get();

}  // namespace ecsp::log
