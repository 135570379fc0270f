// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>

#include "vidrefine/model.hpp"

namespace vidrefine {

struct ConfigFile {
    RunConfig run;
    PhysicsContext context;
};

/// Reads a run config: a JSON object mirroring RunConfig field for field,
/// plus an optional "physics_context" object. A relative mock_fixture is
/// resolved against the config's directory. Errors are ValidationError and
/// cite "<path>:<line>:<column>" for JSON syntax problems.
ConfigFile load_config(const std::filesystem::path& path);

ConfigFile parse_config(const Json& j, const std::filesystem::path& base_dir = {});

}  // namespace vidrefine
