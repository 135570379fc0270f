// SPDX-License-Identifier: Apache-2.0

#include <thread>

#include "doctest.h"
#include "test_support.hpp"
#include "vidrefine/store.hpp"

using namespace vidrefine;
using namespace vidrefine::testing;
namespace fs = std::filesystem;

namespace {

RunManifest sample_manifest(const Dataset& ds) {
    RunManifest m;
    m.run_id = "r1";
    m.dataset_digest = dataset_digest(ds.samples);
    m.created_at = utc_now_iso();
    return m;
}

SampleResult partial_result(const std::string& id, int iterations) {
    SampleResult r;
    r.sample_id = id;
    for (int k = 1; k <= iterations; ++k) {
        IterationRecord rec;
        rec.index = k;
        rec.prompt = Prompt::make("prompt " + std::to_string(k), k);
        rec.critique = Critique{"critique " + std::to_string(k), k,
                                k == 1 ? CritiqueKind::initial_prediction : CritiqueKind::inconsistency_report};
        rec.video = VideoArtifact{"mock://v" + std::to_string(k), 5, 24, k, sha256_hex(std::to_string(k))};
        r.iterations.push_back(rec);
    }
    return r;
}

}  // namespace

TEST_CASE("run layout paths") {
    const auto layout = RunLayout::for_run("out", "r1");
    CHECK(layout.run_dir == fs::path("out/runs/r1"));
    CHECK(layout.prompt_file("s1", 2) == fs::path("out/runs/r1/samples/s1/iter_2/prompt.txt"));
    CHECK(layout.critique_file("s1", 2) == fs::path("out/runs/r1/samples/s1/iter_2/critique.txt"));
    CHECK(layout.video_ref_file("s1", 2) == fs::path("out/runs/r1/samples/s1/iter_2/video.ref"));
    CHECK(layout.manifest() == fs::path("out/runs/r1/manifest.json"));
    CHECK(layout.run_id() == "r1");
}

TEST_CASE("a fresh run holds inputs and an empty manifest") {
    TempDir tmp;
    const auto ds = mock_dataset(2);
    const auto m = sample_manifest(ds);
    auto store = RunStore::create(tmp / "r1", m, ds, PhysicsContext::defaults());
    CHECK(fs::is_directory(tmp / "r1/samples"));
    CHECK(fs::is_empty(tmp / "r1/samples"));
    CHECK(read_manifest(tmp / "r1") == m);

    const auto inputs = read_run_inputs(store.layout());
    CHECK(inputs.dataset.samples == ds.samples);
    CHECK(inputs.context == PhysicsContext::defaults());

    const auto envelope = Json::parse(read_text(tmp / "r1/manifest.json"));
    CHECK(envelope.at("schema_version") == kManifestSchemaVersion);
    CHECK(envelope.at("checksum") == sha256_hex(envelope.at("manifest").dump()));
}

TEST_CASE("creating over an existing run is a collision") {
    TempDir tmp;
    const auto ds = mock_dataset(1);
    RunStore::create(tmp / "r1", sample_manifest(ds), ds, PhysicsContext::defaults());
    CHECK_THROWS_AS(RunStore::create(tmp / "r1", sample_manifest(ds), ds, PhysicsContext::defaults()), CollisionError);
}

TEST_CASE("iteration files are written alongside the manifest") {
    TempDir tmp;
    const auto ds = mock_dataset(1);
    auto store = RunStore::create(tmp / "r1", sample_manifest(ds), ds, PhysicsContext::defaults());
    auto partial = partial_result("s1", 1);
    store.record_iteration(partial);
    partial = partial_result("s1", 2);
    store.record_iteration(partial);

    const auto& layout = store.layout();
    CHECK(read_text(layout.prompt_file("s1", 2)) == "prompt 2\n");
    CHECK(read_text(layout.critique_file("s1", 1)) == "critique 1\n");
    const auto ref = Json::parse(read_text(layout.video_ref_file("s1", 2)));
    CHECK(ref.at("uri") == "mock://v2");
    CHECK(ref.at("checksum") == sha256_hex("2"));
    CHECK(read_manifest(tmp / "r1").results.at("s1") == partial);
    CHECK(store.snapshot().results.at("s1") == partial);
}

TEST_CASE("damaged manifests are reported as corrupt") {
    TempDir tmp;
    const auto ds = mock_dataset(1);
    RunStore::create(tmp / "r1", sample_manifest(ds), ds, PhysicsContext::defaults());
    const auto path = tmp / "r1/manifest.json";
    const auto good = read_text(path);

    SUBCASE("truncated") { write_text(path, good.substr(0, good.size() - 10)); }
    SUBCASE("checksum mismatch") {
        auto j = Json::parse(good);
        j["manifest"]["run_id"] = "tampered";
        write_text(path, j.dump());
    }
    SUBCASE("wrong schema version") {
        auto j = Json::parse(good);
        j["schema_version"] = 99;
        write_text(path, j.dump());
    }
    SUBCASE("missing") { fs::remove(path); }
    CHECK_THROWS_AS(read_manifest(tmp / "r1"), CorruptManifest);
    CHECK_THROWS_AS(RunStore::open(tmp / "r1"), CorruptManifest);
}

TEST_CASE("readers never observe a torn manifest") {
    TempDir tmp;
    const auto ds = mock_dataset(4);
    auto store = RunStore::create(tmp / "r1", sample_manifest(ds), ds, PhysicsContext::defaults());
    std::atomic<bool> done{false};
    std::atomic<int> reads{0};
    std::thread reader([&] {
        while (!done) {
            CHECK_NOTHROW(read_manifest(tmp / "r1"));
            ++reads;
        }
    });
    for (int round = 1; round <= 4; ++round)
        for (const auto& s : ds.samples) store.record_iteration(partial_result(s.id, round));
    done = true;
    reader.join();
    CHECK(reads > 0);
    CHECK(read_manifest(tmp / "r1").results.size() == 4);
}

TEST_CASE("an unwritable location raises IoError naming the directory") {
    TempDir tmp;
    write_text(tmp / "blocker", "a regular file");
    const auto ds = mock_dataset(1);
    const auto target = tmp / "blocker" / "r1";
    try {
        RunStore::create(target, sample_manifest(ds), ds, PhysicsContext::defaults());
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find((tmp / "blocker").string()) != std::string::npos);
    }
}

TEST_CASE("atomic_write replaces content") {
    TempDir tmp;
    atomic_write(tmp / "f.txt", "one");
    atomic_write(tmp / "f.txt", "two");
    CHECK(read_text(tmp / "f.txt") == "two");
    std::size_t entries = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(tmp.path())) ++entries;
    CHECK(entries == 1);
}
