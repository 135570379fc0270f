// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/config.hpp"

#include <fstream>
#include <sstream>

#include "vidrefine/convergence.hpp"
#include "vidrefine/error.hpp"

namespace fs = std::filesystem;

namespace vidrefine {

ConfigFile parse_config(const Json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    Json run = j;
    ConfigFile out;
    if (auto it = run.find("physics_context"); it != run.end()) {
        if (!it->is_null()) {
            if (!it->is_object()) throw ValidationError("physics_context must be an object");
            out.context = it->get<PhysicsContext>();
        } else {
            out.context = PhysicsContext::defaults();
        }
        run.erase(it);
    } else {
        out.context = PhysicsContext::defaults();
    }
    try {
        out.run = run.get<RunConfig>();
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("config has a field of the wrong type: ") + e.what());
    }
    if (!out.run.mock_fixture.empty()) {
        fs::path fixture(out.run.mock_fixture);
        if (fixture.is_relative() && !base_dir.empty()) fixture = base_dir / fixture;
        out.run.mock_fixture = fs::absolute(fixture).lexically_normal().string();
    }
    validate(out.run);
    validate(out.context);
    if (!is_known_metric(out.run.convergence_metric))
        throw ValidationError("unknown convergence_metric \"" + out.run.convergence_metric + "\"");
    return out;
}

ConfigFile load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t pos = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i < pos; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ValidationError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": malformed JSON");
    }
    try {
        return parse_config(j, path.parent_path());
    } catch (const MissingPlaceholder& e) {
        throw ValidationError(path.string() + ": " + e.what());
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace vidrefine
