#include "whitney/cli.hpp"
#include "whitney/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace whitney;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args)
{
    args.insert(args.begin(), "whitney-ext");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("whitney_test_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text)
{
    const std::string path = temp_path(name);
    std::ofstream(path) << text;
    return path;
}

const char* kGoodDataset = R"({
  "dimension_domain": 2,
  "dimension_range": 1,
  "set": {"type": "points", "points": [[0, 0], [1, 0], [0, 1]]},
  "jets": [
    {"a": [0, 0], "f": [1], "L": [2, -1]},
    {"a": [1, 0], "f": [3], "L": [2, -1]},
    {"a": [0, 1], "f": [0], "L": [2, -1]}
  ]
})";

} // namespace

TEST(Dataset, ParsesPointsAndJets)
{
    const auto ds = io::parse_dataset(kGoodDataset);
    EXPECT_EQ(ds.domain_dim, 2);
    EXPECT_EQ(ds.range_dim, 1);
    ASSERT_TRUE(ds.jets.has_value());
    Vector a(2);
    a << 1, 0;
    EXPECT_EQ(ds.jets->value(a)[0], 3.0);
    EXPECT_EQ(ds.jets->op(a)(0, 1), -1.0);
}

TEST(Dataset, PointsDefaultToJetBasePoints)
{
    const auto ds = io::parse_dataset(R"({"dimension_domain": 1, "dimension_range": 1, "set": {"type": "points"},
      "jets": [{"a": [0], "f": [0], "L": [1]}, {"a": [2], "f": [2], "L": [1]}]})");
    EXPECT_EQ(ds.set.primitive_count(), 2u);
}

TEST(Dataset, OffSetJetReportsItsLine)
{
    std::string text = kGoodDataset;
    text.replace(text.find("[1, 0], \"f\""), 6, "[1, 0.5]");
    try {
        io::parse_dataset(text);
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("line 7"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("does not lie in F"), std::string::npos);
    }
}

TEST(Dataset, ShapeAndSyntaxErrors)
{
    EXPECT_THROW(io::parse_dataset("{\"dimension_domain\": 2,"), InputError);
    EXPECT_THROW(io::parse_dataset(R"({"dimension_domain": 1, "dimension_range": 1, "set": {"type": "points", "points": [[0]]},
      "jets": [{"a": [0], "f": [0, 1], "L": [1]}]})"),
                 InputError);
    EXPECT_THROW(io::parse_dataset(R"({"dimension_domain": 1, "set": {"type": "cones"}})"), InputError);
    EXPECT_THROW(io::parse_dataset(R"({"dimension_domain": 1, "dimension_range": 1, "set": {"type": "boxes", "boxes": [{"lo": [0], "hi": [1]}]},
      "jets": [{"a": [0], "f": [0], "L": [1]}]})"),
                 InputError);
    const auto ok = io::parse_dataset(R"({"dimension_domain": 2, "set": {"type": "balls", "balls": [{"center": [0, 0], "radius": 1}]}})");
    EXPECT_FALSE(ok.jets.has_value());
}

TEST(Csv, HeaderAndEmptyJacobianCellsOnTheSet)
{
    FieldSample on{Vector::Zero(2), Vector::Ones(1), std::nullopt, true};
    Matrix J(1, 2);
    J << 0.5, 0.25;
    Vector x(2);
    x << 0.1, 0.2;
    FieldSample off{x, Vector::Ones(1), J, false};
    std::ostringstream os;
    io::write_csv(os, {on, off}, 2, 1, true);
    EXPECT_EQ(os.str(), "x1,x2,f1,J11,J12,onset\n0,0,1,,,1\n0.10000000000000001,0.20000000000000001,1,0.5,0.25,0\n");
}

TEST(Cli, CatalogListAndShow)
{
    const auto list = run({"catalog", "list"});
    EXPECT_EQ(list.code, 0);
    for (const char* name : {"affine", "jarnik", "oscillation", "altL"}) EXPECT_NE(list.out.find(name), std::string::npos);
    const auto show = run({"catalog", "show", "jarnik"});
    EXPECT_EQ(show.code, 0);
    EXPECT_NE(show.out.find("F = {0} union {1/k"), std::string::npos);
    EXPECT_EQ(run({"catalog", "show", "nope"}).code, 2);
}

TEST(Cli, ExtendAffineGrid)
{
    const std::string out = temp_path("affine.csv");
    const auto r = run({"extend", "--case", "affine", "--grid", "lo=-1,-1", "hi=1,1", "res=32,32", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,x2,f1,f2,onset");
    int rows = 0;
    double worst = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        double x1, x2, f1, f2;
        ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x1, &x2, &f1, &f2), 4);
        worst = std::max({worst, std::abs(f1 - (1.0 + x1 + 2.0 * x2)), std::abs(f2 - (-2.0 - 0.5 * x1 + 3.0 * x2))});
    }
    EXPECT_EQ(rows, 1024);
    EXPECT_LE(worst, 1e-9);
}

TEST(Cli, ExtendRejectsOffSetJetWithLine)
{
    std::string text = kGoodDataset;
    text.replace(text.find("[1, 0], \"f\""), 6, "[1, 0.5]");
    const std::string path = write_temp("bad.json", text);
    const auto r = run({"extend", "--input", path, "--grid", "lo=-1,-1", "hi=1,1", "res=4,4"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 7"), std::string::npos) << r.err;
}

TEST(Cli, ExtendFlagsReciprocalPointsOnSet)
{
    const std::string out = temp_path("jarnik.csv");
    const auto r = run({"extend", "--case", "jarnik", "--grid", "lo=0", "hi=1", "res=1001", "--jacobian", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto set = make_case("jarnik").set;
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "x1,f1,J11,onset");
    int flagged = 0;
    while (std::getline(in, line)) {
        double x = std::stod(line.substr(0, line.find(',')));
        const bool on = line.back() == '1';
        Vector v(1);
        v << x;
        EXPECT_EQ(on, set.distance(v) <= 1e-12) << line;
        flagged += on;
    }
    EXPECT_EQ(flagged, 14);
}

TEST(Cli, GridAcceptsCommaJoinedSpec)
{
    const auto r = run({"extend", "--case", "affine", "--grid", "lo=-1,-1,hi=1,1,res=2,3"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 7);
    EXPECT_EQ(run({"extend", "--case", "affine", "--grid", "lo=-1,-1", "hi=1,1"}).code, 2);
    EXPECT_EQ(run({"extend", "--case", "affine", "--grid", "lo=1,1", "hi=0,0", "res=2,2"}).code, 2);
}

TEST(Cli, CheckAffineAll)
{
    const auto r = run({"check", "--case", "affine", "--suite", "all", "--seed", "7"});
    EXPECT_EQ(r.code, 0) << r.out;
    const auto j = io::json::parse(r.out);
    EXPECT_TRUE(j["passed"].get<bool>());
    EXPECT_FALSE(j["measured"]["C1"].is_null());
    EXPECT_FALSE(j["measured"]["K3"].is_null());
}

TEST(Cli, CheckJarnikStrictHonoursTheDeclaredFailure)
{
    const auto r = run({"check", "--case", "jarnik", "--suite", "strict"});
    EXPECT_EQ(r.code, 0) << r.out;
    const auto j = io::json::parse(r.out);
    EXPECT_EQ(j["suites"][0]["expected"], "fail");
    EXPECT_FALSE(j["suites"][0]["property_holds"].get<bool>());
}

TEST(Cli, CheckLipschitzReportsTheBound)
{
    const auto r = run({"check", "--case", "lipschitz2seg", "--suite", "lipschitz"});
    EXPECT_EQ(r.code, 0) << r.out;
    const auto d = io::json::parse(r.out)["suites"][0]["details"]["probes"][0];
    EXPECT_LE(d["lipschitz_sup"].get<double>(), d["lipschitz_bound"].get<double>());
    EXPECT_NEAR(d["lipschitz_bound"].get<double>(), 33.0 * d["K3"].get<double>() + d["La_norm"].get<double>(), 1e-9);
}

TEST(Cli, CheckReportsCriterionFailureWithExitOne)
{
    // sqrt(t) has no derivative at 0; checking it as if one existed fails
    const auto r = run({"check", "--case", "sqrt_hoelder", "--suite", "strict"});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, CheckInputErrors)
{
    EXPECT_EQ(run({"check", "--case", "affine", "--tol", "bogus=1"}).code, 2);
    EXPECT_EQ(run({"check", "--case", "affine", "--suite", "everything"}).code, 2);
    EXPECT_EQ(run({"check"}).code, 2);
    EXPECT_EQ(run({"check", "--case", "affine", "--unknown-flag"}).code, 2);
    EXPECT_EQ(run({"check", "--case", "affine", "--suite", "cones"}).code, 2);
    EXPECT_EQ(run({"check", "--case", "affine", "--afield", "sideways"}).code, 2);
}

TEST(Cli, CheckIsBitIdenticalAcrossThreadCounts)
{
    const auto a = run({"check", "--case", "quadratic", "--suite", "strict", "--seed", "5", "--threads", "1"});
    const auto b = run({"check", "--case", "quadratic", "--suite", "strict", "--seed", "5", "--threads", "3"});
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, DatasetCheckAndExternalField)
{
    const std::string path = write_temp("good.json", kGoodDataset);
    const auto r = run({"check", "--input", path, "--suite", "partition"});
    EXPECT_EQ(r.code, 0) << r.err;
    const std::string table = write_temp("afield.json", R"({"entries": [{"x": [0.5, 0.5], "A": [2, -1]}]})");
    const auto miss = run({"extend", "--input", path, "--afield", "external:" + table, "--grid", "lo=-1,-1", "hi=1,1", "res=3,3"});
    EXPECT_EQ(miss.code, 2);
}

TEST(Cli, PartitionInfo)
{
    const auto r = run({"partition", "info", "--set", "catalog:segment", "--samples", "300"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto j = io::json::parse(r.out);
    EXPECT_TRUE(j["passed"].get<bool>());
    const auto c = run({"partition", "info", "--set", "catalog:twopoints", "--samples", "200", "--combine", "2"});
    EXPECT_EQ(c.code, 0) << c.err;
    EXPECT_LE(io::json::parse(c.out)["max_gate_sum_error"].get<double>(), 1e-10);
    EXPECT_EQ(run({"partition", "info", "--set", "catalog:nowhere"}).code, 2);
}
