// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "vidrefine/digest.hpp"
#include "vidrefine/error.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

bool has_scheme(const std::string& ref) {
    const auto pos = ref.find("://");
    if (pos == std::string::npos || pos == 0) return false;
    for (std::size_t i = 0; i < pos; ++i) {
        const char c = ref[i];
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) return false;
    }
    return true;
}

}  // namespace

std::vector<std::string> Dataset::ids() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.id);
    return out;
}

std::optional<fs::path> local_path(const std::string& ref, const fs::path& base_dir) {
    std::string p = ref;
    if (p.rfind("file://", 0) == 0)
        p = p.substr(7);
    else if (has_scheme(p))
        return std::nullopt;
    fs::path path(p);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    return path;
}

Dataset parse_dataset(std::istream& in, const std::string& source_name, const fs::path& base_dir) {
    Dataset ds{{}, base_dir};
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    auto fail = [&](const std::string& what) -> void {
        throw ValidationError(source_name + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Sample s;
        try {
            s = Json::parse(line).get<Sample>();
            validate(s);
        } catch (const Json::exception& e) {
            fail(std::string("malformed JSON: ") + e.what());
        } catch (const ValidationError& e) {
            fail(e.what());
        }
        if (!seen.insert(s.id).second) fail("duplicate sample id \"" + s.id + "\"");
        if (auto p = local_path(s.prefix_video, base_dir); p && !fs::exists(*p))
            fail("prefix_video \"" + s.prefix_video + "\" does not resolve to an existing file");
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

Dataset load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open dataset " + path.string());
    return parse_dataset(in, path.string(), path.parent_path());
}

void write_dataset(const fs::path& path, const std::vector<Sample>& samples) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    for (const auto& s : samples) out << Json(s).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::string dataset_digest(const std::vector<Sample>& samples) {
    std::ostringstream os;
    for (const auto& s : samples) os << Json(s).dump() << '\n';
    return sha256_hex(os.str());
}

VideoArtifact reference_artifact(const std::string& ref, const fs::path& base_dir, double duration_s, double fps) {
    VideoArtifact v;
    v.uri = ref;
    v.duration_s = duration_s;
    v.fps = fps;
    v.producer_iteration = 0;
    auto p = local_path(ref, base_dir);
    v.checksum = (p && fs::is_regular_file(*p)) ? sha256_file(*p) : sha256_hex(ref);
    return v;
}

VideoArtifact prefix_artifact(const Sample& sample, const fs::path& base_dir, double fps) {
    return reference_artifact(sample.prefix_video, base_dir, 3.0, fps);
}

}  // namespace vidrefine
