#include "spectre/dataset.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

using namespace spectre;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST(Toy, GroupProportionsNearNinetyTen) {
    const Dataset ds = generate_toy(1000, 7);
    double majority = 0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) majority += (*ds.sensitive)[i];
    EXPECT_NEAR(majority / 1000.0, 0.9, 0.03);
}

TEST(Toy, MajorityPositiveClassMean) {
    const Dataset ds = generate_toy(1000, 7);
    double sum = 0;
    int count = 0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        if ((*ds.sensitive)[i] == 1 && ds.labels[i] == 1) {
            sum += ds.features(i, 0);
            ++count;
        }
    }
    ASSERT_GT(count, 0);
    EXPECT_NEAR(sum / count, 6.0, 0.2);
}

TEST(Toy, DeterministicUnderSeed) {
    const Dataset a = generate_toy(10, 0);
    const Dataset b = generate_toy(10, 0);
    EXPECT_TRUE(a.features == b.features);
    EXPECT_TRUE(a.labels == b.labels);
    EXPECT_TRUE(*a.sensitive == *b.sensitive);
}

TEST(Toy, ConditionalMeansMatchSpecifiedGaussians) {
    const double target[2][2][2] = {{{-2, 0}, {-4, 2}}, {{2, 0}, {6, 0}}};
    for (std::uint64_t seed : {11u, 29u}) {
        const Dataset ds = generate_toy(100000, seed);
        double sum[2][2][2] = {};
        int count[2][2] = {};
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
            const int s = (*ds.sensitive)[i];
            const int y = ds.labels[i];
            sum[s][y][0] += ds.features(i, 0);
            sum[s][y][1] += ds.features(i, 1);
            ++count[s][y];
        }
        for (int s = 0; s < 2; ++s)
            for (int y = 0; y < 2; ++y)
                for (int c = 0; c < 2; ++c)
                    EXPECT_NEAR(sum[s][y][c] / count[s][y], target[s][y][c], 0.05)
                        << "cell s=" << s << " y=" << y << " coord=" << c;
    }
}

TEST(Toy, RejectsTinyN) { EXPECT_THROW(generate_toy(5, 0), std::invalid_argument); }

TEST(Standardize, ZScoreArithmetic) {
    Dataset ds;
    ds.features.resize(3, 1);
    ds.features << 1, 2, 3;
    ds.labels.resize(3);
    ds.labels << 0, 1, 0;
    ds.feature_names = {"a"};
    ds.label_values = {"0", "1"};
    const Dataset out = standardize(ds);
    const double e = 1.0 / std::sqrt(2.0 / 3.0);
    EXPECT_NEAR(out.features(0, 0), -e, 1e-12);
    EXPECT_NEAR(out.features(1, 0), 0.0, 1e-12);
    EXPECT_NEAR(out.features(2, 0), e, 1e-12);
    EXPECT_NEAR(e, 1.2247448713915890, 1e-12);
}

TEST(Standardize, ColumnsHaveZeroMeanUnitVariance) {
    const Dataset ds = standardize(generate_toy(500, 3));
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        const double mean = ds.features.col(j).mean();
        const double var = (ds.features.col(j).array() - mean).square().sum() / ds.n();
        EXPECT_NEAR(mean, 0.0, 1e-9);
        EXPECT_NEAR(std::sqrt(var), 1.0, 1e-9);
    }
}

TEST(Standardize, IdempotentOnStandardizedData) {
    const Dataset once = standardize(generate_toy(200, 5));
    const Dataset twice = standardize(once);
    EXPECT_LT((once.features - twice.features).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Standardize, ConstantColumnMapsToZeros) {
    Dataset ds;
    ds.features.resize(3, 1);
    ds.features << 5, 5, 5;
    ds.labels.resize(3);
    ds.labels << 0, 1, 0;
    ds.feature_names = {"a"};
    ds.label_values = {"0", "1"};
    const Dataset out = standardize(ds);
    EXPECT_EQ(out.features.col(0).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_TRUE(out.standardization->constant[0]);
}

TEST(Standardize, ReplayReproducesExactly) {
    const Dataset raw = generate_toy(300, 9);
    const Dataset fitted = standardize(raw);
    const Dataset replayed = apply_standardization(raw, *fitted.standardization);
    EXPECT_TRUE(fitted.features == replayed.features);
}

TEST(Split, PaperSizes) {
    const Dataset ds = generate_toy(1000, 1);
    const auto [train, val, test] = split(ds, {0.3, 0.2, 42});
    EXPECT_EQ(train.n(), 560);
    EXPECT_EQ(val.n(), 140);
    EXPECT_EQ(test.n(), 300);
}

TEST(Split, PartitionIsDisjointAndCovers) {
    // single feature = row index, so features identify original rows
    const int n = 101;
    Dataset ds;
    ds.features.resize(n, 1);
    ds.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        ds.features(i, 0) = i;
        ds.labels[i] = i % 3;
    }
    ds.feature_names = {"idx"};
    ds.label_values = {"0", "1", "2"};
    const auto [train, val, test] = split(ds, {0.3, 0.2, 7});
    std::set<int> seen;
    for (const Dataset* part : {&train, &val, &test})
        for (Eigen::Index i = 0; i < part->n(); ++i)
            EXPECT_TRUE(seen.insert(static_cast<int>(part->features(i, 0))).second);
    EXPECT_EQ(static_cast<int>(seen.size()), n);
}

TEST(Split, StratifiedByLabel) {
    const Dataset ds = generate_toy(1000, 2);
    const auto [train, val, test] = split(ds, {0.3, 0.2, 3});
    auto label_fraction = [](const Dataset& d) {
        double ones = 0;
        for (Eigen::Index i = 0; i < d.n(); ++i) ones += d.labels[i];
        return ones / static_cast<double>(d.n());
    };
    const double whole = label_fraction(ds);
    EXPECT_NEAR(label_fraction(train), whole, 0.01);
    EXPECT_NEAR(label_fraction(test), whole, 0.01);
}

TEST(Split, DeterministicUnderSeed) {
    const Dataset ds = generate_toy(500, 4);
    const auto [a1, b1, c1] = split(ds, {0.3, 0.2, 99});
    const auto [a2, b2, c2] = split(ds, {0.3, 0.2, 99});
    EXPECT_TRUE(a1.features == a2.features);
    EXPECT_TRUE(b1.features == b2.features);
    EXPECT_TRUE(c1.features == c2.features);
}

TEST(Split, RejectsSingleClassAndBadFractions) {
    Dataset ds;
    ds.features.resize(3, 1);
    ds.features << 1, 2, 3;
    ds.labels.setZero(3);
    ds.feature_names = {"a"};
    ds.label_values = {"0"};
    EXPECT_THROW(split(ds, {0.3, 0.2, 0}), std::invalid_argument);

    const Dataset toy = generate_toy(100, 0);
    EXPECT_THROW(split(toy, {0.0, 0.2, 0}), std::invalid_argument);
    EXPECT_THROW(split(toy, {0.3, 1.0, 0}), std::invalid_argument);
}

TEST(Csv, ParsesSmallFile) {
    const std::string path = temp_path("spectre_test_small.csv");
    write_file(path, "a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
    const Dataset ds = load_csv(path, "y");
    EXPECT_EQ(ds.n(), 3);
    EXPECT_EQ(ds.dim(), 2);
    EXPECT_EQ(ds.features(1, 1), 4.0);
    EXPECT_EQ(ds.labels[1], 1);
    std::remove(path.c_str());
}

TEST(Csv, MissingLabelColumnNamesIt) {
    const std::string path = temp_path("spectre_test_nolabel.csv");
    write_file(path, "a,b\n1,2\n");
    try {
        load_csv(path, "target");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("target"), std::string::npos);
    }
    std::remove(path.c_str());
}

TEST(Csv, SensitiveStringsGetFirstAppearanceIds) {
    const std::string path = temp_path("spectre_test_sens.csv");
    write_file(path, "a,s,y\n1,red,0\n2,blue,1\n3,red,0\n4,green,1\n");
    const Dataset ds = load_csv(path, "y", {"s"});
    ASSERT_TRUE(ds.sensitive.has_value());
    EXPECT_EQ((*ds.sensitive)[0], 0);
    EXPECT_EQ((*ds.sensitive)[1], 1);
    EXPECT_EQ((*ds.sensitive)[2], 0);
    EXPECT_EQ((*ds.sensitive)[3], 2);
    EXPECT_EQ(ds.group_values, (std::vector<std::string>{"red", "blue", "green"}));
    std::remove(path.c_str());
}

TEST(Csv, NonNumericFeatureReportsLocation) {
    const std::string path = temp_path("spectre_test_badcell.csv");
    write_file(path, "a,y\n1,0\nx,1\n");
    try {
        load_csv(path, "y");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 3"), std::string::npos) << msg;
        EXPECT_NE(msg.find("'a'"), std::string::npos) << msg;
    }
    std::remove(path.c_str());
}

TEST(Csv, EmptyFileFails) {
    const std::string path = temp_path("spectre_test_empty.csv");
    write_file(path, "");
    EXPECT_THROW(load_csv(path, "y"), DataError);
    std::remove(path.c_str());
}

TEST(Csv, MissingValueFails) {
    const std::string path = temp_path("spectre_test_missing.csv");
    write_file(path, "a,b,y\n1,,0\n");
    EXPECT_THROW(load_csv(path, "y"), DataError);
    std::remove(path.c_str());
}

TEST(Csv, QuotedFieldsAndCrlf) {
    const std::string path = temp_path("spectre_test_quoted.csv");
    write_file(path, "a,s,y\r\n1,\"gr,oup \"\"A\"\"\",0\r\n2,plain,1\r\n");
    const Dataset ds = load_csv(path, "y", {"s"});
    EXPECT_EQ(ds.group_values[0], "gr,oup \"A\"");
    EXPECT_EQ(ds.group_values[1], "plain");
    std::remove(path.c_str());
}

TEST(Csv, ToyRoundTrip) {
    const Dataset toy = generate_toy(50, 13);
    const std::string path = temp_path("spectre_test_toy.csv");
    save_csv(toy, path);
    const Dataset back = load_csv(path, "y", {"s"});
    EXPECT_TRUE(toy.features == back.features);
    EXPECT_TRUE(toy.labels == back.labels);
    // group ids may renumber (first-appearance contract); the underlying
    // group values must survive the trip
    for (Eigen::Index i = 0; i < toy.n(); ++i)
        EXPECT_EQ(toy.group_values[(*toy.sensitive)[i]], back.group_values[(*back.sensitive)[i]]);
    std::remove(path.c_str());
}

TEST(Csv, ExcludedColumnsAreSkipped) {
    const std::string path = temp_path("spectre_test_excl.csv");
    write_file(path, "id,a,y\n100,1,0\n101,2,1\n");
    const Dataset ds = load_csv(path, "y", {}, {"id"});
    EXPECT_EQ(ds.dim(), 1);
    EXPECT_EQ(ds.feature_names[0], "a");
    std::remove(path.c_str());
}
