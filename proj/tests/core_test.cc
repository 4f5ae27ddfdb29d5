#include "stepleak/core.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>

namespace stepleak {
namespace {

namespace fs = std::filesystem;

class CoreTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("stepleak_core_" + std::to_string(::testing::UnitTest::GetInstance()
                                                  ->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()
                      ->current_test_info()
                      ->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }

  // Writes a full 7x5760 grid for each user via a per-user count function.
  void write_steps(
      const std::string& file,
      const std::vector<std::pair<std::string,
                                  std::function<int(int, int)>>>& users,
      int drop_last_rows = 0) {
    std::ofstream out(path(file));
    out << "user_id,day,period,steps\n";
    for (const auto& [uid, f] : users) {
      int remaining = kPeriodsPerWeek - drop_last_rows;
      for (int d = 0; d < kDaysPerWeek && remaining > 0; ++d)
        for (int p = 0; p < kPeriodsPerDay && remaining > 0; ++p, --remaining)
          out << uid << ',' << d << ',' << p << ',' << f(d, p) << '\n';
    }
  }

  void write_attrs(const std::string& file,
                   const std::vector<std::string>& rows) {
    std::ofstream out(path(file));
    out << "user_id,gender,age,education\n";
    for (const auto& r : rows) out << r << '\n';
  }

  fs::path dir_;
};

TEST(DeriveLabels, ThresholdAndMapping) {
  UserRecord r;
  r.attrs = {Gender::female, 55, Education::high};
  r = derive_labels(r);
  EXPECT_EQ(r.labels.age_bin, 1);  // >= threshold counts as old
  EXPECT_EQ(r.labels.gender_bin, 1);
  ASSERT_TRUE(r.labels.edu_bin.has_value());
  EXPECT_EQ(*r.labels.edu_bin, 1);

  r.attrs = {Gender::male, 54, Education::medium};
  r = derive_labels(r);
  EXPECT_EQ(r.labels.age_bin, 0);
  EXPECT_EQ(r.labels.gender_bin, 0);
  ASSERT_TRUE(r.labels.edu_bin.has_value());
  EXPECT_EQ(*r.labels.edu_bin, 0);

  r.attrs.education = Education::low;
  r = derive_labels(r);
  EXPECT_FALSE(r.labels.edu_bin.has_value());

  // idempotent
  const auto once = derive_labels(r);
  const auto twice = derive_labels(once);
  EXPECT_EQ(once.labels.age_bin, twice.labels.age_bin);
  EXPECT_EQ(once.labels.gender_bin, twice.labels.gender_bin);
  EXPECT_EQ(once.labels.edu_bin, twice.labels.edu_bin);
}

TEST(DeriveLabels, CustomThreshold) {
  UserRecord r;
  r.attrs = {Gender::male, 40, Education::low};
  EXPECT_EQ(derive_labels(r, 40).labels.age_bin, 1);
  EXPECT_EQ(derive_labels(r, 41).labels.age_bin, 0);
}

TEST(ParseEnums, RoundTripAndErrors) {
  EXPECT_EQ(parse_gender("male"), Gender::male);
  EXPECT_EQ(parse_gender("female"), Gender::female);
  EXPECT_THROW(parse_gender("Female"), DataError);
  EXPECT_EQ(parse_education("low"), Education::low);
  EXPECT_EQ(parse_education("medium"), Education::medium);
  EXPECT_EQ(parse_education("high"), Education::high);
  EXPECT_THROW(parse_education("phd"), DataError);
  EXPECT_STREQ(to_string(Gender::female), "female");
  EXPECT_STREQ(to_string(Education::medium), "medium");
}

TEST(StepSeries, DaySlicing) {
  StepSeries s;
  s.counts.assign(kPeriodsPerWeek, 0);
  s.counts[2 * kPeriodsPerDay + 17] = 9;
  const auto d2 = s.day(2);
  ASSERT_EQ(d2.size(), static_cast<std::size_t>(kPeriodsPerDay));
  EXPECT_EQ(d2[17], 9);
  EXPECT_EQ(s.day(1)[17], 0);
}

TEST_F(CoreTest, LoadsCompleteCohort) {
  write_steps("steps.csv",
              {{"alice", [](int d, int p) { return (d + p) % 4; }},
               {"bob", [](int, int p) { return p % 2 == 0 ? 7 : 0; }}});
  write_attrs("attrs.csv",
              {"alice,female,62,high", "bob,male,30,low"});
  const auto c = load_cohort(path("steps.csv"), path("attrs.csv"));
  ASSERT_EQ(c.records.size(), 2u);
  EXPECT_TRUE(c.exclusions.empty());
  EXPECT_EQ(c.stats.n_users, 2u);
  EXPECT_EQ(c.stats.max_steps, 7);
  EXPECT_EQ(c.stats.class_counts.at("gender").at("female"), 1u);
  EXPECT_EQ(c.stats.class_counts.at("education").at("low"), 1u);
  // records sorted by user id via the ingestion map
  EXPECT_EQ(c.records[0].series.user_id, "alice");
  EXPECT_EQ(c.records[0].attrs.age, 62);
  EXPECT_EQ(c.records[0].labels.age_bin, 1);
  EXPECT_EQ(c.records[1].series.counts[0], 7);
  EXPECT_EQ(c.records[1].series.counts[1], 0);
}

TEST_F(CoreTest, ExcludesIncompleteAndUnattributedUsers) {
  write_steps("steps.csv", {{"full", [](int, int) { return 1; }}});
  // append a second user with a truncated grid
  {
    std::ofstream out(path("steps.csv"), std::ios::app);
    for (int p = 0; p < 100; ++p)
      out << "partial,0," << p << ",2\n";
    for (int d = 0; d < kDaysPerWeek; ++d)
      for (int p = 0; p < kPeriodsPerDay; ++p)
        out << "ghost," << d << ',' << p << ",0\n";
  }
  write_attrs("attrs.csv", {"full,male,40,medium", "partial,male,40,low"});
  const auto c = load_cohort(path("steps.csv"), path("attrs.csv"));
  ASSERT_EQ(c.records.size(), 1u);
  EXPECT_EQ(c.records[0].series.user_id, "full");
  ASSERT_EQ(c.exclusions.size(), 2u);
  std::map<std::string, std::string> why;
  for (const auto& e : c.exclusions) why[e.user_id] = e.reason;
  EXPECT_EQ(why.at("partial"), "incomplete step grid");
  EXPECT_EQ(why.at("ghost"), "missing attributes");
}

TEST_F(CoreTest, RejectsMalformedSteps) {
  write_attrs("attrs.csv", {"u,male,40,low"});

  std::ofstream(path("dup.csv")) << "user_id,day,period,steps\n"
                                    "u,0,5,1\nu,0,5,2\n";
  EXPECT_THROW(load_cohort(path("dup.csv"), path("attrs.csv")), DataError);

  std::ofstream(path("neg.csv")) << "u,0,5,-1\n";
  EXPECT_THROW(load_cohort(path("neg.csv"), path("attrs.csv")), DataError);

  std::ofstream(path("day.csv")) << "u,7,0,1\n";
  EXPECT_THROW(load_cohort(path("day.csv"), path("attrs.csv")), DataError);

  std::ofstream(path("period.csv")) << "u,0,5760,1\n";
  EXPECT_THROW(load_cohort(path("period.csv"), path("attrs.csv")), DataError);

  std::ofstream(path("fields.csv")) << "u,0,5\n";
  EXPECT_THROW(load_cohort(path("fields.csv"), path("attrs.csv")), DataError);

  std::ofstream(path("text.csv")) << "u,0,five,1\n";
  EXPECT_THROW(load_cohort(path("text.csv"), path("attrs.csv")), DataError);

  EXPECT_THROW(load_cohort(path("missing.csv"), path("attrs.csv")), DataError);
}

TEST_F(CoreTest, RejectsMalformedAttributes) {
  write_steps("steps.csv", {{"u", [](int, int) { return 0; }}});

  write_attrs("gender.csv", {"u,other,40,low"});
  EXPECT_THROW(load_cohort(path("steps.csv"), path("gender.csv")), DataError);

  write_attrs("age.csv", {"u,male,17,low"});
  EXPECT_THROW(load_cohort(path("steps.csv"), path("age.csv")), DataError);

  write_attrs("edu.csv", {"u,male,40,bachelors"});
  EXPECT_THROW(load_cohort(path("steps.csv"), path("edu.csv")), DataError);

  write_attrs("dup.csv", {"u,male,40,low", "u,male,41,low"});
  EXPECT_THROW(load_cohort(path("steps.csv"), path("dup.csv")), DataError);
}

TEST_F(CoreTest, ErrorMessagesCarryLineNumbers) {
  write_attrs("attrs.csv", {"u,male,40,low"});
  std::ofstream(path("bad.csv")) << "user_id,day,period,steps\n"
                                    "u,0,0,1\nu,0,bad,1\n";
  try {
    load_cohort(path("bad.csv"), path("attrs.csv"));
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos)
        << e.what();
  }
}

TEST_F(CoreTest, WriteThenLoadRoundTrip) {
  write_steps("steps.csv",
              {{"u1", [](int d, int p) { return (3 * d + p) % 5; }},
               {"u2", [](int d, int p) { return (d * p) % 3; }}});
  write_attrs("attrs.csv", {"u1,female,71,medium", "u2,male,25,high"});
  const auto c = load_cohort(path("steps.csv"), path("attrs.csv"));
  write_cohort(c, path("steps2.csv"), path("attrs2.csv"));
  const auto c2 = load_cohort(path("steps2.csv"), path("attrs2.csv"));
  ASSERT_EQ(c2.records.size(), c.records.size());
  for (std::size_t i = 0; i < c.records.size(); ++i) {
    EXPECT_EQ(c2.records[i].series.user_id, c.records[i].series.user_id);
    EXPECT_EQ(c2.records[i].series.counts, c.records[i].series.counts);
    EXPECT_EQ(c2.records[i].attrs.age, c.records[i].attrs.age);
    EXPECT_EQ(c2.records[i].attrs.gender, c.records[i].attrs.gender);
    EXPECT_EQ(c2.records[i].attrs.education, c.records[i].attrs.education);
  }
}

TEST(Pearson, HandValuesAndDegenerate) {
  EXPECT_DOUBLE_EQ(pearson({1, 2, 3}, {2, 4, 6}), 1.0);
  EXPECT_DOUBLE_EQ(pearson({1, 2, 3}, {6, 4, 2}), -1.0);
  EXPECT_NEAR(pearson({1, 2, 3, 4}, {1, 3, 2, 4}), 0.8, 1e-12);
  EXPECT_TRUE(std::isnan(pearson({1, 1, 1}, {1, 2, 3})));
}

TEST(AttributeCorrelation, SignAndDegenerate) {
  Cohort c;
  auto add = [&](int age, Education e, Gender g) {
    UserRecord r;
    r.attrs = {g, age, e};
    c.records.push_back(derive_labels(r));
  };
  add(30, Education::high, Gender::male);
  add(50, Education::medium, Gender::female);
  add(70, Education::low, Gender::male);
  add(40, Education::high, Gender::female);
  add(80, Education::low, Gender::male);
  const auto m = attribute_correlation(c);
  EXPECT_LT(m.coef[0][1], 0.0);  // older users less educated here
  EXPECT_DOUBLE_EQ(m.coef[0][1], m.coef[1][0]);
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(m.coef[i][i], 1.0);

  Cohort mono;
  UserRecord r;
  r.attrs = {Gender::male, 30, Education::low};
  mono.records.push_back(r);
  mono.records.push_back(r);
  const auto mm = attribute_correlation(mono);
  EXPECT_TRUE(std::isnan(mm.coef[0][1]));  // zero-variance columns

  Cohort tiny;
  tiny.records.push_back(r);
  EXPECT_THROW(attribute_correlation(tiny), DataError);
}

}  // namespace
}  // namespace stepleak
