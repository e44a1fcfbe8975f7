#include "evseg/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "evseg/common.hpp"

using namespace evseg;

namespace {

namespace fs = std::filesystem;

class ReportTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("evseg_rep_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
               "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string path(const std::string& name) const { return (dir / name).string(); }

    fs::path dir;
};

nlohmann::json fake_results() {
    nlohmann::json run1 = {{"arrangement", "no_fusion"},
                           {"seed", 1},
                           {"final_loss", 1.2345},
                           {"seconds", 120.0},
                           {"run_dir", "does/not/exist"},
                           {"mean_iou", 0.4123},
                           {"weighted_iou", 0.6},
                           {"mvc8", 0.8},
                           {"mvc16", nullptr},
                           {"params", 448},
                           {"flops", 2500000000},
                           {"class_iou", {0.9, 0.1, nullptr, 0.3, 0.4}}};
    nlohmann::json run2 = run1;
    run2["arrangement"] = "channel_then_spatial";
    run2["mean_iou"] = 0.5227;
    run2["mvc8"] = 0.9;
    return nlohmann::json{{"runs", {run1, run2}}};
}

int count_substr(const std::string& text, const std::string& needle) {
    int n = 0;
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_F(ReportTest, TableListsEveryRunWithFormattedNumbers) {
    const std::string table = render_table(fake_results());
    EXPECT_NE(table.find("no_fusion"), std::string::npos);
    EXPECT_NE(table.find("channel_then_spatial"), std::string::npos);
    EXPECT_NE(table.find("0.4123"), std::string::npos);
    EXPECT_NE(table.find("0.5227"), std::string::npos);
    EXPECT_NE(table.find("448"), std::string::npos);
    EXPECT_NE(table.find("2.500"), std::string::npos);  // GFLOPs
    EXPECT_NE(table.find("nan"), std::string::npos);    // null mvc16
    EXPECT_EQ(count_substr(table, "\n"), 3);            // header + two rows

    // Columns align: every line has the same prefix width up to the seed column.
    const size_t header_seed = table.find("seed");
    const std::string second_line = table.substr(table.find('\n') + 1);
    EXPECT_EQ(second_line.find("1 "), header_seed);
}

TEST_F(ReportTest, LossSvgDrawsOneCurvePerEntry) {
    const std::vector<std::pair<std::string, std::vector<double>>> curves = {
        {"run a", {1.0, 0.8, 0.6, 0.5}},
        {"run b", {1.2, 1.1, std::nan(""), 0.9}},
    };
    const std::string svg = render_loss_svg(curves);
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count_substr(svg, "<polyline"), 2);
    EXPECT_NE(svg.find("run a"), std::string::npos);
    EXPECT_NE(svg.find("run b"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);

    // The NaN point is dropped: curve b has 3 coordinate pairs, curve a has 4.
    const size_t b_start = svg.find("<polyline", svg.find("<polyline") + 1);
    const size_t b_end = svg.find("/>", b_start);
    EXPECT_EQ(count_substr(svg.substr(b_start, b_end - b_start), ","), 3);
}

TEST_F(ReportTest, LossSvgHandlesEmptyInput) {
    const std::string svg = render_loss_svg({});
    EXPECT_EQ(svg.rfind("<svg", 0), 0u);
    EXPECT_EQ(count_substr(svg, "<polyline"), 0);
}

TEST_F(ReportTest, MetricSvgAveragesSeedsWithinAnArm) {
    nlohmann::json results = fake_results();
    results["runs"][1]["arrangement"] = "no_fusion";  // 2 seeds of one arm
    results["runs"][0]["mean_iou"] = 0.4;
    results["runs"][1]["mean_iou"] = 0.6;
    const std::string svg = render_metric_svg(results);
    EXPECT_NE(svg.find("0.500"), std::string::npos);
    EXPECT_NE(svg.find("no_fusion"), std::string::npos);
    EXPECT_NE(svg.find("mean IoU"), std::string::npos);
    EXPECT_NE(svg.find("mVC8"), std::string::npos);
}

TEST_F(ReportTest, LossCsvRoundTrips) {
    const std::string p = path("log.csv");
    {
        std::ofstream out(p);
        out << "iter,loss,lr\n0,1.5,0.1\n1,1.25,0.09\n2,0.75,0.08\n";
    }
    const std::vector<double> losses = read_loss_csv(p);
    ASSERT_EQ(losses.size(), 3u);
    EXPECT_DOUBLE_EQ(losses[0], 1.5);
    EXPECT_DOUBLE_EQ(losses[2], 0.75);

    {
        std::ofstream out(p);
        out << "iter,loss,lr\n0,not_a_number,0.1\n";
    }
    EXPECT_THROW(read_loss_csv(p), DataError);
    EXPECT_THROW(read_loss_csv(path("absent.csv")), DataError);
}

TEST_F(ReportTest, WriteReportEmitsAllArtifacts) {
    // One run has a real log; the other's directory does not exist.
    nlohmann::json results = fake_results();
    fs::create_directories(path("run1"));
    {
        std::ofstream out(path("run1") + "/train_log.csv");
        out << "iter,loss,lr\n0,2.0,0.1\n1,1.0,0.05\n";
    }
    results["runs"][0]["run_dir"] = path("run1");
    {
        std::ofstream out(path("results.json"));
        out << results.dump();
    }

    const std::string table = write_report(path("results.json"), path("report"));
    EXPECT_NE(table.find("no_fusion"), std::string::npos);
    EXPECT_TRUE(fs::exists(path("report") + "/report.txt"));
    EXPECT_TRUE(fs::exists(path("report") + "/loss_curves.svg"));
    EXPECT_TRUE(fs::exists(path("report") + "/metrics.svg"));

    std::ifstream in(path("report") + "/loss_curves.svg");
    const std::string svg((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    EXPECT_EQ(count_substr(svg, "<polyline"), 1);  // only the run with a log
    EXPECT_NE(svg.find("no_fusion seed 1"), std::string::npos);
}
