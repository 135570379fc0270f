// SPDX-License-Identifier: Apache-2.0

#include "vidrefine/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vidrefine/digest.hpp"
#include "vidrefine/error.hpp"

namespace fs = std::filesystem;

namespace vidrefine {
namespace {

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
    throw IoError(what + " " + path.string() + ": " + std::strerror(errno));
}

void fsync_dir(const fs::path& dir) {
    const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
    if (fd < 0) return;
    ::fsync(fd);
    ::close(fd);
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

RunLayout RunLayout::for_run(const fs::path& root, std::string_view run_id) {
    return RunLayout{root / "runs" / std::string(run_id)};
}

fs::path RunLayout::iteration_dir(std::string_view sample_id, int k) const {
    return samples_dir() / std::string(sample_id) / ("iter_" + std::to_string(k));
}

fs::path RunLayout::prompt_file(std::string_view sample_id, int k) const {
    return iteration_dir(sample_id, k) / "prompt.txt";
}

fs::path RunLayout::critique_file(std::string_view sample_id, int k) const {
    return iteration_dir(sample_id, k) / "critique.txt";
}

fs::path RunLayout::video_ref_file(std::string_view sample_id, int k) const {
    return iteration_dir(sample_id, k) / "video.ref";
}

void atomic_write(const fs::path& path, std::string_view contents) {
    static std::atomic<unsigned long> counter{0};
    const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                                std::to_string(counter++));
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) io_fail("cannot write into directory", dir);
    std::size_t off = 0;
    while (off < contents.size()) {
        const auto n = ::write(fd, contents.data() + off, contents.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int saved = errno;
            ::close(fd);
            ::unlink(tmp.c_str());
            errno = saved;
            io_fail("write failed for", tmp);
        }
        off += static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0 || ::close(fd) != 0) {
        ::unlink(tmp.c_str());
        io_fail("cannot flush", tmp);
    }
    if (::rename(tmp.c_str(), path.c_str()) != 0) {
        const int saved = errno;
        ::unlink(tmp.c_str());
        errno = saved;
        io_fail("cannot replace", path);
    }
    fsync_dir(dir);
}

void write_manifest(const RunManifest& manifest, const fs::path& run_dir) {
    const Json body = manifest;
    const std::string dumped = body.dump();
    const Json envelope{{"schema_version", kManifestSchemaVersion},
                        {"checksum", sha256_hex(dumped)},
                        {"manifest", body}};
    atomic_write(run_dir / "manifest.json", envelope.dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& run_dir) {
    const auto path = run_dir / "manifest.json";
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw CorruptManifest(e.what());
    }
    Json envelope;
    try {
        envelope = Json::parse(text);
    } catch (const Json::exception& e) {
        throw CorruptManifest(path.string() + ": not valid JSON (" + e.what() + ")");
    }
    if (!envelope.is_object() || !envelope.contains("manifest") || !envelope.contains("checksum"))
        throw CorruptManifest(path.string() + ": missing manifest envelope");
    if (envelope.value("schema_version", 0) != kManifestSchemaVersion)
        throw CorruptManifest(path.string() + ": unsupported schema_version");
    const auto& body = envelope["manifest"];
    if (sha256_hex(body.dump()) != envelope.value("checksum", std::string()))
        throw CorruptManifest(path.string() + ": checksum mismatch");
    try {
        return body.get<RunManifest>();
    } catch (const std::exception& e) {
        throw CorruptManifest(path.string() + ": schema violation (" + e.what() + ")");
    }
}

RunInputs read_run_inputs(const RunLayout& layout) {
    Json inputs;
    try {
        inputs = Json::parse(read_file(layout.inputs()));
    } catch (const Json::exception& e) {
        throw CorruptManifest(layout.inputs().string() + ": " + e.what());
    } catch (const IoError& e) {
        throw CorruptManifest(e.what());
    }
    std::ifstream in(layout.dataset());
    if (!in) throw CorruptManifest("missing " + layout.dataset().string());
    const fs::path base = inputs.value("dataset_base_dir", std::string());
    RunInputs out{parse_dataset(in, layout.dataset().string(), base), {}};
    try {
        out.context = inputs.at("physics_context").get<PhysicsContext>();
    } catch (const std::exception& e) {
        throw CorruptManifest(layout.inputs().string() + ": " + e.what());
    }
    return out;
}

RunStore::RunStore(RunLayout layout, RunManifest manifest)
    : layout_(std::move(layout)), manifest_(std::move(manifest)) {}

RunStore::RunStore(RunStore&& other) noexcept
    : layout_(std::move(other.layout_)), manifest_(std::move(other.manifest_)) {}

RunStore RunStore::create(const fs::path& run_dir, const RunManifest& initial, const Dataset& dataset,
                          const PhysicsContext& ctx) {
    RunLayout layout{run_dir};
    if (fs::exists(layout.manifest()))
        throw CollisionError("run directory " + run_dir.string() + " already holds a run; resume it instead");
    make_dirs(layout.samples_dir());
    std::ostringstream ds;
    for (const auto& s : dataset.samples) ds << Json(s).dump() << '\n';
    atomic_write(layout.dataset(), ds.str());
    const auto base_dir =
        dataset.base_dir.empty() ? std::string() : fs::absolute(dataset.base_dir).lexically_normal().string();
    const Json inputs{{"dataset_base_dir", base_dir},
                      {"physics_context", ctx}};
    atomic_write(layout.inputs(), inputs.dump(2) + "\n");
    write_manifest(initial, run_dir);
    return RunStore(std::move(layout), initial);
}

RunStore RunStore::open(const fs::path& run_dir) {
    RunLayout layout{run_dir};
    auto manifest = read_manifest(run_dir);
    return RunStore(std::move(layout), std::move(manifest));
}

RunManifest RunStore::snapshot() const {
    std::lock_guard lock(mu_);
    return manifest_;
}

void RunStore::write_iteration_files(const std::string& sample_id, const IterationRecord& rec) const {
    make_dirs(layout_.iteration_dir(sample_id, rec.index));
    atomic_write(layout_.prompt_file(sample_id, rec.index), rec.prompt.text + "\n");
    atomic_write(layout_.critique_file(sample_id, rec.index), rec.critique.text + "\n");
    const Json ref{{"uri", rec.video.uri}, {"checksum", rec.video.checksum}};
    atomic_write(layout_.video_ref_file(sample_id, rec.index), ref.dump() + "\n");
}

void RunStore::record_iteration(const SampleResult& partial) {
    std::lock_guard lock(mu_);
    if (!partial.iterations.empty()) write_iteration_files(partial.sample_id, partial.iterations.back());
    manifest_.results[partial.sample_id] = partial;
    write_manifest(manifest_, layout_.run_dir);
}

void RunStore::record_result(const SampleResult& result) {
    std::lock_guard lock(mu_);
    manifest_.results[result.sample_id] = result;
    write_manifest(manifest_, layout_.run_dir);
}

void RunStore::record_manifest(const RunManifest& manifest) {
    std::lock_guard lock(mu_);
    manifest_ = manifest;
    write_manifest(manifest_, layout_.run_dir);
}

}  // namespace vidrefine
