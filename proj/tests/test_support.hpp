// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "vidrefine/adapters.hpp"
#include "vidrefine/dataset.hpp"
#include "vidrefine/digest.hpp"
#include "vidrefine/scripted.hpp"

namespace vidrefine::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("vidrefine-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

/// Rewriter whose output is computed by a function of the critique.
class FnRewriter final : public Rewriter {
public:
    explicit FnRewriter(std::function<std::string(const Critique&)> fn) : fn_(std::move(fn)) {}
    Prompt rewrite(const Critique& critique, int max_chars) override {
        calls.fetch_add(1);
        return finish_prompt(fn_(critique), critique, max_chars);
    }
    std::string model_id() const override { return "fn-rewriter"; }
    std::atomic<int> calls{0};

private:
    std::function<std::string(const Critique&)> fn_;
};

/// Scripted generator that counts its calls.
class CountingGenerator final : public Generator {
public:
    VideoArtifact generate(const GeneratorRequest& req) override {
        calls.fetch_add(1);
        return inner_.generate(req);
    }
    std::string model_id() const override { return "counting-generator"; }
    std::atomic<int> calls{0};

private:
    ScriptedGenerator inner_;
};

/// Analyst that echoes the prior description (predict and critique).
inline std::shared_ptr<ScriptedAnalyst> echo_analyst() {
    return std::make_shared<ScriptedAnalyst>(Json{{"default_predict", "{description}"},
                                                  {"default_critique", "{description}"}});
}

/// Samples with mock:// prefixes so no files are needed.
inline Dataset mock_dataset(int n) {
    Dataset ds;
    for (int i = 1; i <= n; ++i) {
        Sample s;
        s.id = "s" + std::to_string(i);
        s.prefix_video = "mock://prefix/" + s.id;
        s.description = "scene " + std::to_string(i) + " where a ball rolls off a ledge";
        ds.samples.push_back(s);
    }
    return ds;
}

inline Json mock_fixture_json() {
    // Sample s2 needs three generations, s3 runs out of budget, s1 converges
    // immediately.
    Json rules = Json::array();
    rules.push_back(Json{{"mode", "critique"}, {"uri_prefix", "mock://mock://prefix/s2/"}, {"iteration", 2},
                         {"output", "second take on scene two"}});
    rules.push_back(Json{{"mode", "critique"}, {"uri_prefix", "mock://mock://prefix/s2/"}, {"iteration", 3},
                         {"output", "third take for scene two differs"}});
    for (int k = 2; k <= 6; ++k)
        rules.push_back(Json{{"mode", "critique"},
                             {"uri_prefix", "mock://mock://prefix/s3/"},
                             {"iteration", k},
                             {"output", "variant" + std::to_string(k) + " alpha" + std::to_string(k)}});
    return Json{{"analyst", Json{{"default_predict", "{description}"}, {"default_critique", "{description}"}, {"rules", rules}}},
                {"rewriter", Json{{"mode", "identity"}}}};
}

}  // namespace vidrefine::testing
