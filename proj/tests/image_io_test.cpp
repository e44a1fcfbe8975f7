#include "evseg/image_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "evseg/rng.hpp"

using namespace evseg;

namespace {

class TempDir : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = std::filesystem::temp_directory_path() /
              ("evseg_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
               "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        std::filesystem::create_directories(dir);
    }
    void TearDown() override { std::filesystem::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    std::filesystem::path dir;
};

using ImageIo = TempDir;

}  // namespace

TEST_F(ImageIo, ColorRoundTripQuantizesTo8Bit) {
    Rng rng(1);
    Tensor img({5, 7, 3});
    for (int64_t i = 0; i < img.size(); ++i) img[i] = rng.uniform();
    save_image(path("a.ppm"), img);
    Tensor back = load_image(path("a.ppm"));
    ASSERT_TRUE(back.same_shape(img));
    for (int64_t i = 0; i < img.size(); ++i)
        EXPECT_DOUBLE_EQ(back[i], std::lround(img[i] * 255.0) / 255.0);
}

TEST_F(ImageIo, GreyRoundTrip) {
    Tensor img({3, 4, 1});
    for (int64_t i = 0; i < img.size(); ++i) img[i] = i / 11.0;
    save_image(path("g.pgm"), img);
    Tensor back = load_image(path("g.pgm"));
    ASSERT_TRUE(back.same_shape(img));
    for (int64_t i = 0; i < img.size(); ++i)
        EXPECT_DOUBLE_EQ(back[i], std::lround(img[i] * 255.0) / 255.0);
}

TEST_F(ImageIo, SaveClampsOutOfRange) {
    Tensor img({1, 2, 1});
    img[0] = -0.5;
    img[1] = 1.5;
    save_image(path("c.pgm"), img);
    Tensor back = load_image(path("c.pgm"));
    EXPECT_DOUBLE_EQ(back[0], 0.0);
    EXPECT_DOUBLE_EQ(back[1], 1.0);
}

TEST_F(ImageIo, HeaderCommentsSkipped) {
    std::ofstream out(path("c.pgm"), std::ios::binary);
    out << "P5\n# a comment\n2 1\n# another\n255\n";
    out.put(static_cast<char>(0));
    out.put(static_cast<char>(255));
    out.close();
    Tensor img = load_image(path("c.pgm"));
    EXPECT_EQ(img.dim(0), 1);
    EXPECT_EQ(img.dim(1), 2);
    EXPECT_DOUBLE_EQ(img[0], 0.0);
    EXPECT_DOUBLE_EQ(img[1], 1.0);
}

TEST_F(ImageIo, RejectsMissingFile) {
    EXPECT_THROW(load_image(path("nope.pgm")), DataError);
}

TEST_F(ImageIo, RejectsBadMagic) {
    std::ofstream(path("t.pgm")) << "P2\n2 2\n255\n0 0 0 0\n";
    EXPECT_THROW(load_image(path("t.pgm")), DataError);
}

TEST_F(ImageIo, RejectsWrongMaxval) {
    std::ofstream out(path("m.pgm"), std::ios::binary);
    out << "P5\n1 1\n63\n";
    out.put(static_cast<char>(7));
    out.close();
    EXPECT_THROW(load_image(path("m.pgm")), DataError);
}

TEST_F(ImageIo, RejectsTruncatedPayload) {
    std::ofstream out(path("t.ppm"), std::ios::binary);
    out << "P6\n2 2\n255\n";
    out.put(static_cast<char>(1));
    out.close();
    EXPECT_THROW(load_image(path("t.ppm")), DataError);
}

TEST_F(ImageIo, RejectsNonNumericDimensions) {
    std::ofstream(path("d.pgm")) << "P5\nfoo 2\n255\n";
    EXPECT_THROW(load_image(path("d.pgm")), DataError);
}

TEST_F(ImageIo, MaskRoundTripPreservesIds) {
    IntImage mask(4, 3);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 3; ++x) mask.at(y, x) = (y * 3 + x) % 5;
    save_mask(path("m.pgm"), mask);
    IntImage back = load_mask(path("m.pgm"));
    EXPECT_EQ(back.h, 4);
    EXPECT_EQ(back.w, 3);
    EXPECT_EQ(back.v, mask.v);
}

TEST_F(ImageIo, MaskRejectsUnstorableIds) {
    IntImage mask(1, 1);
    mask.at(0, 0) = 300;
    EXPECT_THROW(save_mask(path("m.pgm"), mask), DataError);
}

TEST_F(ImageIo, MaskRejectsColorFiles) {
    Tensor img({2, 2, 3}, 0.5);
    save_image(path("c.ppm"), img);
    EXPECT_THROW(load_mask(path("c.ppm")), DataError);
}
