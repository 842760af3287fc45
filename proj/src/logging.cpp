// Copyright 2026 The ECSP Authors
// SPDX-License-Identifier: Apache-2.0

#include "logging.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>

namespace ecsp::log {

spdlog::logger& get() {
    static std::shared_ptr<spdlog::logger> logger = [] {
        auto sink = std::make_shared<spdlog::sinks::stderr_sink_mt>();
        auto l = std::make_shared<spdlog::logger>("ecsp", sink);
        l->set_pattern("[%l] %v");
        auto level = spdlog::level::warn;
        if (const char* env = std::getenv("ECSP_LOG"); env && *env) level = spdlog::level::from_str(env);
        l->set_level(level);
        return l;
    }();
    return *logger;
}

}  // namespace ecsp::log
