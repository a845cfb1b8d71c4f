#include "ethomap/error.hpp"
#include "ethomap/image.hpp"
#include "ethomap/ingest.hpp"
#include "ethomap/util.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ethomap;
using namespace ethomap::ingest;

namespace {

FrameDetectionSeries random_detections(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(0.0, 1000.0);
    std::uniform_real_distribution<double> size(1.0, 200.0);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    std::uniform_int_distribution<int> count(0, 4);
    std::uniform_int_distribution<int> gap(1, 3);
    FrameDetectionSeries s;
    s.video_id = "v" + std::to_string(rng() % 1000);
    s.fps = (rng() % 2) ? 25.0 : 30.0;
    if (rng() % 2) {
        s.width = 1280;
        s.height = 720;
    }
    std::int64_t frame = static_cast<std::int64_t>(rng() % 5);
    const int frames = 1 + static_cast<int>(rng() % 30);
    for (int f = 0; f < frames; ++f) {
        FrameDetections fd;
        fd.frame = frame;
        frame += gap(rng);
        for (int b = count(rng); b > 0; --b) {
            const double x0 = coord(rng);
            const double y0 = coord(rng);
            fd.boxes.push_back({x0, y0, x0 + size(rng), y0 + size(rng), conf(rng)});
        }
        s.frames.push_back(fd);
    }
    return s;
}

PoseSeries random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coord(-50.0, 500.0);
    std::uniform_real_distribution<double> like(0.0, 1.0);
    PoseSeries p;
    p.video_id = "clip";
    p.scorer = "scorer" + std::to_string(rng() % 10);
    const int parts = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < parts; ++i) {
        p.bodyparts.push_back("part" + std::to_string(i));
    }
    const int frames = 1 + static_cast<int>(rng() % 40);
    for (int f = 0; f < frames; ++f) {
        p.frame_numbers.push_back(f);
        for (int i = 0; i < parts; ++i) {
            if (rng() % 7 == 0) {
                p.samples.emplace_back(std::nullopt);
            } else {
                p.samples.emplace_back(Keypoint{coord(rng), coord(rng), like(rng)});
            }
        }
    }
    return p;
}

} // namespace

TEST(Detections, SingleLine) {
    const auto s = parse_detections(R"({"frame":0,"boxes":[{"x0":10,"y0":10,"x1":50,"y1":40,"confidence":0.9}]})");
    ASSERT_EQ(s.frames.size(), 1u);
    ASSERT_EQ(s.frames[0].boxes.size(), 1u);
    EXPECT_EQ(s.frames[0].boxes[0], (BoundingBox{10, 10, 50, 40, 0.9}));
    EXPECT_EQ(s.fps, 25.0);
}

TEST(Detections, EmptyBoxesKeepsFrame) {
    const auto s = parse_detections("{\"frame\":3,\"boxes\":[]}\n");
    ASSERT_EQ(s.frames.size(), 1u);
    EXPECT_EQ(s.frames[0].frame, 3);
    EXPECT_TRUE(s.frames[0].boxes.empty());
}

TEST(Detections, HeaderSetsIdAndFps) {
    const auto s = parse_detections("{\"video_id\":\"cage\",\"fps\":30,\"width\":640,\"height\":480}\n"
                                    "{\"frame\":0,\"boxes\":[]}\n");
    EXPECT_EQ(s.video_id, "cage");
    EXPECT_EQ(s.fps, 30.0);
    EXPECT_EQ(s.width, 640);
    EXPECT_EQ(s.height, 480);
}

TEST(Detections, ErrorsCarryLineNumbers) {
    const std::string good = "{\"frame\":0,\"boxes\":[]}\n";
    auto line_of = [](const std::string& text) {
        try {
            parse_detections(text);
        } catch (const ParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    EXPECT_EQ(line_of(good + "not json\n"), 2u);
    EXPECT_EQ(line_of(good + good), 2u);  // duplicate frame
    EXPECT_EQ(line_of("{\"frame\":5,\"boxes\":[]}\n{\"frame\":4,\"boxes\":[]}\n"), 2u);
    EXPECT_EQ(line_of(good + R"({"frame":1,"boxes":[{"x0":5,"y0":0,"x1":5,"y1":3,"confidence":0.5}]})"), 2u);
    EXPECT_EQ(line_of(R"({"frame":1,"boxes":[{"x0":0,"y0":0,"x1":5,"y1":3,"confidence":1.5}]})"), 1u);
}

TEST(Detections, RoundTripRandomStreams) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = random_detections(rng);
        const auto text = serialize_detections(s);
        const auto parsed = parse_detections(text);
        EXPECT_EQ(parsed, s);
        EXPECT_EQ(serialize_detections(parsed), text);
    }
}

TEST(Detections, LenientAccountsForEveryRecord) {
    const std::string text = "{\"frame\":0,\"boxes\":[]}\n"
                             "garbage\n"
                             "{\"frame\":1,\"boxes\":[]}\n"
                             "{\"frame\":1,\"boxes\":[]}\n"
                             "{\"frame\":2,\"boxes\":[{\"x0\":3,\"y0\":0,\"x1\":1,\"y1\":3,\"confidence\":0.5}]}\n"
                             "{\"frame\":3,\"boxes\":[]}\n";
    const auto parsed = parse_detections_lenient(text);
    EXPECT_EQ(parsed.value.frames.size() + parsed.issues.size(), 6u);
    EXPECT_EQ(parsed.value.frames.size(), 3u);
    ASSERT_EQ(parsed.issues.size(), 3u);
    EXPECT_EQ(parsed.issues[0].line, 2u);
}

TEST(Pose, TwoFramesTwoParts) {
    const std::string text = "scorer,s,s,s,s,s,s\n"
                             "bodyparts,snout,snout,snout,tail,tail,tail\n"
                             "coords,x,y,likelihood,x,y,likelihood\n"
                             "0,1,2,0.9,3,4,0.8\n"
                             "1,5,6,0.7,7,8,\n";
    const auto p = parse_pose_csv(text, "v");
    ASSERT_EQ(p.frame_count(), 2u);
    ASSERT_EQ(p.part_count(), 2u);
    EXPECT_EQ(p.bodyparts, (std::vector<std::string>{"snout", "tail"}));
    EXPECT_EQ(p.at(0, 1), (Keypoint{3, 4, 0.8}));
    EXPECT_FALSE(p.at(1, 1).has_value());  // empty likelihood cell
}

TEST(Pose, NonFiniteAndNonNumericAreMissing) {
    const std::string text = "scorer,s,s,s\n"
                             "bodyparts,a,a,a\n"
                             "coords,x,y,likelihood\n"
                             "0,nan,2,0.9\n"
                             "1,abc,2,0.9\n"
                             "2,1,inf,0.9\n"
                             "3,1,2,0.9\n";
    const auto p = parse_pose_csv(text);
    EXPECT_FALSE(p.at(0, 0).has_value());
    EXPECT_FALSE(p.at(1, 0).has_value());
    EXPECT_FALSE(p.at(2, 0).has_value());
    EXPECT_TRUE(p.at(3, 0).has_value());
}

TEST(Pose, Errors) {
    const std::string head = "scorer,s,s,s\nbodyparts,a,a,a\ncoords,x,y,likelihood\n";
    EXPECT_THROW(parse_pose_csv(head), ParseError);                    // no frames
    EXPECT_THROW(parse_pose_csv(head + "0,1,2\n"), ParseError);        // arity
    EXPECT_THROW(parse_pose_csv(head + "0,1,2,1.2\n"), ParseError);    // likelihood range
    EXPECT_THROW(parse_pose_csv("scorer,s,s\nbodyparts,a,a\ncoords,x,y\n0,1,2\n"), ParseError);
}

TEST(Pose, RoundTripRandomTables) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_pose(rng);
        EXPECT_EQ(parse_pose_csv(serialize_pose_csv(p), p.video_id), p);
    }
}

TEST(Frames, LoadRangeAndLuma) {
    oracle::TempDir dir;
    for (int i = 0; i < 3; ++i) {
        write_png(dir / (frame_file_stem(i) + ".png"), GrayImage(4, 3, static_cast<std::uint8_t>(10 * i)));
    }
    const auto all = load_frames(dir.path(), 0, 2);
    ASSERT_EQ(all.frames.size(), 3u);
    EXPECT_EQ(all.frames[2].at(1, 1), 20);
    EXPECT_EQ(load_frames(dir.path(), 1, 1).frames.size(), 1u);
    EXPECT_THROW(load_frames(dir.path(), 0, 3), Error);
    EXPECT_EQ(luma(255, 0, 0), 76);
    EXPECT_EQ(luma(255, 255, 255), 255);
}

TEST(Frames, PgmAndInconsistentSizes) {
    oracle::TempDir dir;
    write_pgm(dir / "000000.pgm", GrayImage(4, 3, 7));
    write_png(dir / "000001.png", GrayImage(5, 3, 7));
    EXPECT_EQ(read_image(dir / "000000.pgm"), GrayImage(4, 3, 7));
    EXPECT_THROW(load_frames(dir.path(), 0, 1), Error);
}
