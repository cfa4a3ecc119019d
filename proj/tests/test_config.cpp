#include <gtest/gtest.h>

#include "any3d/config.hpp"
#include "any3d/error.hpp"

using namespace any3d;
using nlohmann::json;

TEST(Config, DefaultsValidate) { EXPECT_NO_THROW(PipelineConfig{}.validate()); }

TEST(Config, JsonRoundtrip) {
    PipelineConfig c;
    c.seed = 77;
    c.voxel.g = 0.02;
    c.voxel.rule = RepresentativeRule::SeededRandom;
    c.fusion_dims = {16, 8, 32};
    c.gate = -50.0;
    c.mix = datapipe::SourceMix::single("MapAnything");
    c.synth.trajectories = 3;
    const auto j = c.to_json();
    const auto back = PipelineConfig::from_json(json::parse(j.dump()));
    EXPECT_EQ(back.to_json().dump(), j.dump());
    EXPECT_EQ(back.voxel.rule, RepresentativeRule::SeededRandom);
    EXPECT_EQ(back.fusion_dims, c.fusion_dims);
}

TEST(Config, PartialDocumentKeepsDefaults) {
    const auto c = PipelineConfig::from_json(json::parse(R"({"voxel": {"g": 0.005}})"));
    EXPECT_EQ(c.voxel.g, 0.005);
    EXPECT_EQ(c.camera, PipelineConfig{}.camera);
}

TEST(Config, UnknownKeysRejectedAtEveryLevel) {
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"sed": 1})")), PreconditionError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"voxel": {"size": 1}})")), PreconditionError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"mix": [{"source": "a", "p": 1, "x": 0}]})")),
                 PreconditionError);
}

TEST(Config, WrongTypesAndInvalidValuesRejected) {
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"seed": "x"})")), PreconditionError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"voxel": {"g": -1}})")), PreconditionError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"voxel": {"representative": "median"}})")),
                 PreconditionError);
    EXPECT_THROW(PipelineConfig::from_json(json::parse(R"({"mix": [{"source": "a", "p": 0.5}]})")),
                 PreconditionError);
}

TEST(Config, MissingFileIsIoError) { EXPECT_THROW(PipelineConfig::load("/nonexistent/any3d.json"), IoError); }
