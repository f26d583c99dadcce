#include <gtest/gtest.h>

#include <sstream>

#include "cei/log_io.hpp"

using namespace cei;

TEST(LogIo, RoundTripIsExact) {
  ModelConfig config;
  const auto log = run_trial(parse_condition("-2_-8"), fitted_pair_params()[4], 1234, config);
  std::stringstream ss;
  write_trial_log(ss, log);
  const auto back = read_trial_log(ss);
  ASSERT_EQ(back.steps.size(), log.steps.size());
  EXPECT_EQ(back.condition, log.condition);
  EXPECT_EQ(back.seed, log.seed);
  EXPECT_EQ(back.outcome, log.outcome);
  for (std::size_t k = 0; k < log.steps.size(); ++k) {
    EXPECT_EQ(back.steps[k].t, log.steps[k].t);
    EXPECT_EQ(back.steps[k].left, log.steps[k].left);
    EXPECT_EQ(back.steps[k].right, log.steps[k].right);
    EXPECT_EQ(back.steps[k].right_agent.event, log.steps[k].right_agent.event);
  }
  std::stringstream again;
  write_trial_log(again, back);
  std::stringstream first;
  write_trial_log(first, log);
  EXPECT_EQ(again.str(), first.str());
}

TEST(LogIo, RejectsBadMagic) {
  std::istringstream is("hello\n");
  EXPECT_THROW(read_trial_log(is), LogFormatError);
}

TEST(LogIo, RejectsWrongFieldCount) {
  ModelConfig config;
  std::stringstream ss;
  write_trial_log(ss, run_trial(parse_condition("0_0"), fitted_pair_params()[0], 1, config));
  std::string text = ss.str();
  text += "1,2,3\n";
  std::istringstream is(text);
  EXPECT_THROW(read_trial_log(is), LogFormatError);
}

TEST(LogIo, FileName) {
  TrialLog log;
  log.pair = 3;
  log.condition = parse_condition("-4_8");
  log.repetition = 7;
  EXPECT_EQ(trial_file_name(log), "trial_p03_-4_8_r07.csv");
}

TEST(LogIo, NumberFormatRoundTrips) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-17, 123456.789}) EXPECT_EQ(parse_double(format_double(x)), x);
}
