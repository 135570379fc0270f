// SPDX-License-Identifier: Apache-2.0

#include <random>
#include <sstream>

#include "doctest.h"
#include "test_support.hpp"
#include "vidrefine/config.hpp"
#include "vidrefine/dataset.hpp"
#include "vidrefine/error.hpp"
#include "vidrefine/model.hpp"

using namespace vidrefine;
using vidrefine::testing::TempDir;
using vidrefine::testing::write_text;

TEST_CASE("render_analyst_input substitutes every placeholder") {
    PhysicsContext ctx{"gravity pulls down", "predict 5s", "{B}|{I}|{description}"};
    CHECK(render_analyst_input(ctx, "ball on ledge") == "gravity pulls down|predict 5s|ball on ledge");
    CHECK(render_analyst_input(ctx, "ball on ledge") == render_analyst_input(ctx, "ball on ledge"));
}

TEST_CASE("render_analyst_input rejects missing or repeated placeholders") {
    CHECK_THROWS_AS(render_analyst_input({"b", "i", "{I}|{description}"}, "x"), MissingPlaceholder);
    CHECK_THROWS_AS(render_analyst_input({"b", "i", "{B}|{I}"}, "x"), MissingPlaceholder);
    CHECK_THROWS_AS(render_analyst_input({"b", "i", "{B}{B}|{I}|{description}"}, "x"), MissingPlaceholder);
}

TEST_CASE("substituted text is not rescanned for placeholders") {
    PhysicsContext ctx{"mentions {I}", "and {description}", "{B} / {I} / {description}"};
    CHECK(render_analyst_input(ctx, "{B}") == "mentions {I} / and {description} / {B}");
}

TEST_CASE("default physics context is a valid template") {
    const auto ctx = PhysicsContext::defaults();
    CHECK_NOTHROW(validate(ctx));
    const auto out = render_analyst_input(ctx, "a cup tips over");
    CHECK(out.find("a cup tips over") != std::string::npos);
    CHECK(out.find("{B}") == std::string::npos);
}

TEST_CASE("Prompt::make trims and counts code points") {
    const auto p = Prompt::make("  héllo wörld \n", 2);
    CHECK(p.text == "héllo wörld");
    CHECK(p.char_count == 11);
    CHECK(p.iteration == 2);
    CHECK_NOTHROW(validate(p, 11));
    CHECK_THROWS_AS(validate(p, 10), ValidationError);
    CHECK_THROWS_AS(validate(Prompt::make("   ", 1), 100), ValidationError);
}

TEST_CASE("critique kind is tied to iteration one") {
    CHECK_NOTHROW(validate(Critique{"t", 1, CritiqueKind::initial_prediction}));
    CHECK_NOTHROW(validate(Critique{"t", 2, CritiqueKind::inconsistency_report}));
    CHECK_THROWS_AS(validate(Critique{"t", 2, CritiqueKind::initial_prediction}), ValidationError);
    CHECK_THROWS_AS(validate(Critique{"t", 1, CritiqueKind::inconsistency_report}), ValidationError);
    CHECK_THROWS_AS(validate(Critique{"", 1, CritiqueKind::initial_prediction}), ValidationError);
}

TEST_CASE("video artifacts need positive duration and fps") {
    VideoArtifact v{"mock://v", 5.0, 24.0, 1, "abc"};
    CHECK_NOTHROW(validate(v));
    v.duration_s = 0;
    CHECK_THROWS_AS(validate(v), ValidationError);
    v.duration_s = 5;
    v.fps = -1;
    CHECK_THROWS_AS(validate(v), ValidationError);
}

TEST_CASE("run config defaults and bounds") {
    RunConfig cfg;
    CHECK(cfg.max_iterations == 4);
    CHECK(cfg.convergence_threshold == 0.9);
    CHECK(cfg.max_prompt_chars == 1000);
    CHECK(cfg.max_concurrent_samples == 4);
    CHECK(cfg.retry.max_attempts == 3);
    CHECK(cfg.retry.base_backoff_ms == 500);
    CHECK(cfg.duration_s == 5.0);
    CHECK(cfg.fps == 24.0);
    CHECK_NOTHROW(validate(cfg));

    auto bad = cfg;
    bad.convergence_threshold = 1.5;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = cfg;
    bad.max_concurrent_samples = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
}

TEST_CASE("sample result invariants") {
    RunConfig cfg;
    IterationRecord rec;
    rec.index = 1;
    rec.prompt = Prompt::make("p", 1);
    rec.critique = {"t", 1, CritiqueKind::initial_prediction};
    rec.video = {"mock://v", 5, 24, 1, "c"};
    rec.started_at = "2026-01-01T00:00:00.000Z";
    rec.finished_at = "2026-01-01T00:00:01.000Z";

    SampleResult r;
    r.sample_id = "s";
    r.iterations = {rec};
    r.status = SampleStatus::complete;
    r.final_video = rec.video;
    CHECK_NOTHROW(validate(r, cfg));

    SUBCASE("final video must be the last iteration's") {
        r.final_video->uri = "mock://other";
        CHECK_THROWS_AS(validate(r, cfg), ValidationError);
    }
    SUBCASE("converged needs similarity at or above threshold") {
        r.converged = true;
        r.convergence_similarity = 0.5;
        CHECK_THROWS_AS(validate(r, cfg), ValidationError);
        r.convergence_similarity = 0.95;
        CHECK_NOTHROW(validate(r, cfg));
    }
    SUBCASE("indices must line up") {
        r.iterations[0].video.producer_iteration = 2;
        CHECK_THROWS_AS(validate(r, cfg), ValidationError);
    }
    SUBCASE("finished before started") {
        r.iterations[0].finished_at = "2025-01-01T00:00:00.000Z";
        CHECK_THROWS_AS(validate(r, cfg), ValidationError);
    }
    SUBCASE("too many iterations") {
        cfg.max_iterations = 0;
        CHECK_THROWS_AS(validate(r, cfg), ValidationError);
    }
}

namespace {

std::string random_text(std::mt19937_64& rng) {
    static const std::vector<std::string> pieces = {"a", "Ball", " ", "\n", "é", "\"", "\\", "{B}", "😀", "x_y", "\t"};
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    std::string s;
    for (int i = len(rng); i > 0; --i) s += pieces[pick(rng)];
    return s;
}

RunManifest random_manifest(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> real(0.0, 1.0);
    std::uniform_int_distribution<int> small(0, 4);
    RunManifest m;
    m.run_id = "run-" + std::to_string(rng() % 1000);
    m.config.convergence_threshold = real(rng);
    m.config.seed = rng();
    m.config.analyst = EndpointSpec{"https://a.example/v1", random_text(rng), 1234, "KEY_VAR", 10};
    m.dataset_digest = std::to_string(rng());
    m.created_at = "2026-10-16T00:00:00.000Z";
    m.completed = rng() % 2;
    for (int s = small(rng); s > 0; --s) {
        SampleResult r;
        r.sample_id = "s" + std::to_string(s);
        for (int k = 1; k <= small(rng); ++k) {
            IterationRecord rec;
            rec.index = k;
            rec.prompt = Prompt::make(random_text(rng), k);
            rec.critique = {random_text(rng), k, k == 1 ? CritiqueKind::initial_prediction : CritiqueKind::inconsistency_report};
            rec.video = {"mock://" + random_text(rng), 5.0, 23.976, k, std::to_string(rng())};
            rec.adapter_meta = {{"generate_ms", std::to_string(rng() % 100)}, {"model", random_text(rng)}};
            r.iterations.push_back(rec);
        }
        r.converged = rng() % 2;
        if (rng() % 2) r.convergence_similarity = real(rng);
        if (!r.iterations.empty()) r.final_video = r.iterations.back().video;
        r.status = static_cast<SampleStatus>(rng() % 3);
        if (rng() % 2) r.failure_reason = random_text(rng);
        if (rng() % 2) r.next_prompt = Prompt::make(random_text(rng), 9);
        m.results[r.sample_id] = r;
    }
    return m;
}

}  // namespace

TEST_CASE("manifest JSON round trip is lossless (property)") {
    std::mt19937_64 rng(20261016);
    for (int i = 0; i < 500; ++i) {
        const auto m = random_manifest(rng);
        const Json encoded = m;
        const auto decoded = Json::parse(encoded.dump()).get<RunManifest>();
        REQUIRE(decoded == m);
    }
}

TEST_CASE("without_timestamps drops wall-clock and latency fields only") {
    std::mt19937_64 rng(7);
    auto m = random_manifest(rng);
    while (m.results.empty() || m.results.begin()->second.iterations.empty()) m = random_manifest(rng);
    const auto stripped = without_timestamps(Json(m));
    CHECK_FALSE(stripped.contains("created_at"));
    const auto& rec = stripped["results"].begin().value()["iterations"][0];
    CHECK_FALSE(rec.contains("started_at"));
    CHECK_FALSE(rec["adapter_meta"].contains("generate_ms"));
    CHECK(rec["adapter_meta"].contains("model"));
}

TEST_CASE("dataset parsing cites the failing line") {
    TempDir dir;
    write_text(dir / "clip.mp4", "x");
    const std::string good = R"({"id":"a","prefix_video":"clip.mp4","description":"d"})";

    auto parse = [&](const std::string& text) {
        std::istringstream in(text);
        return parse_dataset(in, "d.jsonl", dir.path());
    };

    CHECK(parse(good + "\n\n" + R"({"id":"b","prefix_video":"mock://x","description":"e","ground_truth":"g"})").samples.size() == 2);

    auto message_of = [&](const std::string& text) {
        try {
            parse(text);
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message_of(good + "\n{not json}\n").rfind("d.jsonl:2:", 0) == 0);
    CHECK(message_of(good + "\n" + good + "\n").find("d.jsonl:2: duplicate sample id") == 0);
    CHECK(message_of(R"({"id":"","prefix_video":"clip.mp4","description":"d"})").rfind("d.jsonl:1:", 0) == 0);
    CHECK(message_of(R"({"id":"a","prefix_video":"missing.mp4","description":"d"})").find("does not resolve") !=
          std::string::npos);
    CHECK(message_of(R"({"id":"a","prefix_video":"clip.mp4","description":"  "})").find("description") !=
          std::string::npos);
    CHECK(message_of(R"({"id":"../up","prefix_video":"clip.mp4","description":"d"})").find("may only contain") !=
          std::string::npos);
    CHECK(message_of(R"({"id":"a","prefix_video":"clip.mp4","description":"d","extra":1})").find("unknown key") !=
          std::string::npos);
}

TEST_CASE("dataset digest ignores formatting") {
    TempDir dir;
    write_text(dir / "a.jsonl", R"({"id":"a","prefix_video":"mock://x","description":"d"})" "\n");
    write_text(dir / "b.jsonl", R"(  {"description": "d",  "prefix_video": "mock://x", "id": "a"}  )" "\n\n");
    CHECK(dataset_digest(load_dataset(dir / "a.jsonl").samples) == dataset_digest(load_dataset(dir / "b.jsonl").samples));
}

TEST_CASE("prefix artifacts hash file content when local") {
    TempDir dir;
    write_text(dir / "clip.mp4", "abc");
    Sample s{"a", "clip.mp4", "d", {}};
    const auto v = prefix_artifact(s, dir.path(), 24.0);
    // SHA-256("abc"), FIPS 180-2 test vector.
    CHECK(v.checksum == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(v.duration_s == 3.0);
    CHECK(v.producer_iteration == 0);
    s.prefix_video = "mock://remote/clip";
    CHECK(prefix_artifact(s, dir.path(), 24.0).checksum == sha256_hex("mock://remote/clip"));
}

TEST_CASE("config file parsing") {
    TempDir dir;
    write_text(dir / "c.json", R"({"max_iterations": 3, "mock": true, "mock_fixture": "fx.json",
        "physics_context": {"knowledge_base": "KB", "instructions": "IN", "template": "{B}{I}{description}"}})");
    const auto cfg = load_config(dir / "c.json");
    CHECK(cfg.run.max_iterations == 3);
    CHECK(cfg.run.convergence_threshold == 0.9);
    CHECK(cfg.run.mock_fixture == (dir / "fx.json").string());
    CHECK(cfg.context.knowledge_base == "KB");

    write_text(dir / "bad.json", "{\n  \"max_iterations\": 3,\n  oops\n}");
    try {
        load_config(dir / "bad.json");
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("bad.json:3:") != std::string::npos);
    }
    write_text(dir / "typo.json", R"({"max_iteration": 3})");
    CHECK_THROWS_AS(load_config(dir / "typo.json"), ValidationError);
    write_text(dir / "metric.json", R"({"convergence_metric": "cosine"})");
    CHECK_THROWS_AS(load_config(dir / "metric.json"), ValidationError);
    write_text(dir / "theta.json", R"({"convergence_threshold": -0.1})");
    CHECK_THROWS_AS(load_config(dir / "theta.json"), ValidationError);
}
