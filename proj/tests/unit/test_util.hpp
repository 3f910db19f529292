#pragma once

#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <string>

#include "rblab/trainer.hpp"

namespace rblab::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        path_ = std::filesystem::temp_directory_path() /
                ("rblab_" + std::string(info->test_suite_name()) + "_" + info->name() + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

/// Easy/hard task shrunk so a run takes milliseconds.
inline ExperimentConfig tiny_config(std::uint64_t seed, std::uint64_t steps = 40) {
    ExperimentConfig c;
    c.name = "tiny";
    c.dataset.n_inputs = 16;
    c.dataset.features =
        FeatureLayout().add(FeatureKind::Linear, 0.5, 2, 3, "easy").add(FeatureKind::Xor2, 0.5, 1, 3, "hard").build();
    c.dataset.sizes = {128, 64, 64};
    c.mlp.input_dim = 16;
    c.mlp.hidden_sizes = {16, 8};
    c.mlp.output_dim = 2;
    c.optimizer = OptimizerSpec::defaults(OptimizerKind::Adam, 1e-2);
    c.max_steps = steps;
    c.eval_every = 5;
    c.seed = seed;
    return c;
}

}  // namespace rblab::testing
