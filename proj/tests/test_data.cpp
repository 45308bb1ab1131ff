#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "bitbit/dataset.hpp"
#include "bitbit/encoder.hpp"
#include "bitbit/error.hpp"
#include "test_util.hpp"

using namespace bitbit;

TEST(load_csv, relabels_by_first_appearance) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.csv", "a,b,y\n0.1,0.2,cat\n0.3,0.4,dog\n0.5,0.6,cat\n");
  const Dataset d = load_csv(dir / "a.csv", std::string("y"));
  EXPECT_EQ(d.num_samples(), 3u);
  EXPECT_EQ(d.num_features(), 2u);
  EXPECT_EQ(d.num_classes, 2);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"cat", "dog"}));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(d.features(2, 1), 0.6);
}

TEST(load_csv, label_column_by_index) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.csv", "y,a\nx,1\nz,2\nx,3\n");
  const Dataset d = load_csv(dir / "a.csv", std::size_t{0});
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_DOUBLE_EQ(d.features(1, 0), 2.0);
}

TEST(load_csv, nan_cell_names_row_and_column) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.csv", "a,b,y\n0.1,0.2,cat\n0.3,nan,dog\n");
  try {
    load_csv(dir / "a.csv", std::string("y"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'b'"), std::string::npos) << msg;
  }
}

TEST(load_csv, missing_value_is_an_error) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.csv", "a,b,y\n0.1,,cat\n0.3,0.4,dog\n");
  EXPECT_THROW(load_csv(dir / "a.csv", std::string("y")), DataError);
}

TEST(load_csv, single_class_rejected) {
  testutil::TempDir dir;
  testutil::write_file(dir / "a.csv", "a,y\n1,k\n2,k\n3,k\n");
  try {
    load_csv(dir / "a.csv", std::string("y"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("fewer than 2 classes"), std::string::npos);
  }
}

TEST(load_csv, missing_file_and_unknown_column) {
  testutil::TempDir dir;
  EXPECT_THROW(load_csv(dir / "absent.csv", std::string("y")), DataError);
  testutil::write_file(dir / "a.csv", "a,y\n1,k\n2,j\n");
  EXPECT_THROW(load_csv(dir / "a.csv", std::string("label")), DataError);
  EXPECT_THROW(load_csv(dir / "a.csv", std::size_t{5}), DataError);
}

TEST(load_csv, labels_are_contiguous) {
  const Dataset d = load_csv(BITBIT_TEST_DATA_DIR "/wdbc.csv", std::string("diagnosis"));
  EXPECT_EQ(d.num_samples(), 569u);
  EXPECT_EQ(d.num_features(), 30u);
  EXPECT_EQ(*std::min_element(d.labels.begin(), d.labels.end()), 0);
  EXPECT_EQ(*std::max_element(d.labels.begin(), d.labels.end()), d.num_classes - 1);
  EXPECT_TRUE(validate(d).empty());
}

TEST(validate, reports_each_violation) {
  Dataset d = make_synthetic(6, 2, 2, 1.0, 1);
  EXPECT_TRUE(validate(d).empty());

  Dataset absent = d;
  absent.num_classes = 3;
  for (int& y : absent.labels) y = (y == 1) ? 2 : 0;
  const auto issues = validate(absent);
  ASSERT_FALSE(issues.empty());
  EXPECT_NE(std::find(issues.begin(), issues.end(), "class 1 absent"), issues.end());

  Dataset inf = d;
  inf.features(3, 1) = std::numeric_limits<double>::infinity();
  const auto inf_issues = validate(inf);
  ASSERT_EQ(inf_issues.size(), 1u);
  EXPECT_NE(inf_issues[0].find("x1"), std::string::npos);
}

TEST(split_train_test, sizes_and_determinism) {
  const Dataset d = make_synthetic(10, 2, 2, 1.0, 3);
  const auto a = split_train_test(d, {0.8, 7});
  const auto b = split_train_test(d, {0.8, 7});
  EXPECT_EQ(a.train.num_samples(), 8u);
  EXPECT_EQ(a.test.num_samples(), 2u);
  EXPECT_EQ(a.indices.train, b.indices.train);
  EXPECT_EQ(a.indices.test, b.indices.test);
  EXPECT_EQ(a.train.features, b.train.features);
}

TEST(split_train_test, boundary_one_one) {
  const Dataset d = make_synthetic(2, 1, 2, 1.0, 3);
  const auto s = split_train_test(d, {0.5, 0});
  EXPECT_EQ(s.train.num_samples(), 1u);
  EXPECT_EQ(s.test.num_samples(), 1u);
  EXPECT_EQ(s.train.num_classes, 2);
  EXPECT_EQ(s.test.num_classes, 2);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(split_train_test, degenerate_fractions_rejected) {
  const Dataset d = make_synthetic(4, 1, 2, 1.0, 3);
  EXPECT_THROW(split_train_test(d, {0.1, 0}), Error);
  EXPECT_THROW(split_train_test(d, {1.0, 0}), Error);
  EXPECT_THROW(split_train_test(d, {0.0, 0}), Error);
}

TEST(split_train_test, seeds_give_different_partitions) {
  const Dataset d = make_synthetic(100, 2, 2, 1.0, 3);
  const auto a = split_train_test(d, {0.8, 1});
  const auto b = split_train_test(d, {0.8, 2});
  const std::set<std::size_t> sa(a.indices.train.begin(), a.indices.train.end());
  const std::set<std::size_t> sb(b.indices.train.begin(), b.indices.train.end());
  EXPECT_NE(sa, sb);
}

TEST(split_train_test, partitions_the_index_set) {
  const Dataset d = make_synthetic(57, 2, 3, 1.0, 9);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (bool stratified : {false, true}) {
      const auto s = split_train_test(d, {0.7, seed, stratified});
      std::vector<std::size_t> all = s.indices.train;
      all.insert(all.end(), s.indices.test.begin(), s.indices.test.end());
      std::sort(all.begin(), all.end());
      ASSERT_EQ(all.size(), 57u);
      for (std::size_t i = 0; i < all.size(); ++i) ASSERT_EQ(all[i], i);
      for (std::size_t r = 0; r < s.train.num_samples(); ++r) {
        EXPECT_EQ(s.train.labels[r], d.labels[s.indices.train[r]]);
      }
    }
  }
}

TEST(split_train_test, stratified_keeps_class_shares) {
  const Dataset d = make_synthetic(100, 1, 4, 1.0, 2);
  const auto s = split_train_test(d, {0.8, 5, true});
  std::vector<int> counts(4, 0);
  for (int y : s.train.labels) ++counts[static_cast<std::size_t>(y)];
  for (int c : counts) EXPECT_EQ(c, 20);
}

TEST(make_synthetic, zero_separation_is_label_independent) {
  const Dataset d = make_synthetic(1000, 3, 2, 0.0, 11);
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> col(d.features.col(static_cast<Eigen::Index>(j)).begin(),
                            d.features.col(static_cast<Eigen::Index>(j)).end());
    EXPECT_LT(estimate_mutual_information(col, d.labels), 0.05);
  }
}

TEST(make_synthetic, wide_separation_is_threshold_separable) {
  const Dataset d = make_synthetic(1000, 1, 2, 10.0, 4);
  std::vector<std::pair<double, int>> rows;
  for (std::size_t r = 0; r < d.num_samples(); ++r) rows.emplace_back(d.features(static_cast<Eigen::Index>(r), 0), d.labels[r]);
  std::sort(rows.begin(), rows.end());
  // scan every cut: left side predicted 0, right side 1
  std::size_t best = 0;
  std::size_t right_ones = static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](auto& p) { return p.second == 1; }));
  std::size_t left_zeros = 0;
  for (std::size_t cut = 0; cut <= rows.size(); ++cut) {
    best = std::max(best, left_zeros + right_ones);
    if (cut < rows.size()) {
      if (rows[cut].second == 0) ++left_zeros; else --right_ones;
    }
  }
  EXPECT_GE(static_cast<double>(best) / 1000.0, 0.99);
}

TEST(make_synthetic, deterministic) {
  const Dataset a = make_synthetic(50, 3, 3, 2.0, 8);
  const Dataset b = make_synthetic(50, 3, 3, 2.0, 8);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_TRUE(validate(a).empty());
}

TEST(count_conflicting_duplicates, counts_rows_with_several_labels) {
  Dataset d;
  d.features.resize(4, 1);
  d.features << 1, 1, 2, 3;
  d.labels = {0, 1, 0, 1};
  d.num_classes = 2;
  EXPECT_EQ(count_conflicting_duplicates(d), 1u);
}
