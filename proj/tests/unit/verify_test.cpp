// Copyright 2026 The siesef Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <string>

#include <gtest/gtest.h>

#include "siesef/verify.hpp"

namespace siesef::verify {
namespace {

class MutationGuard {
 public:
  explicit MutationGuard(testing::Mutation m) { testing::active_mutation() = m; }
  ~MutationGuard() { testing::active_mutation() = testing::Mutation::kNone; }
};

TEST(VerifyTest, DefaultSuitePasses) {
  const auto results = run(default_checks());
  ASSERT_EQ(results.size(), default_checks().size());
  for (const auto& r : results) {
    EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
    EXPECT_GE(r.seconds, 0.0);
    EXPECT_LT(r.seconds, 60.0) << r.name;
    EXPECT_NE(r.name.find('/'), std::string::npos);
  }
  EXPECT_TRUE(all_passed(results));
  const auto j = to_json(results);
  EXPECT_EQ(j["passed"], true);
  EXPECT_EQ(j["checks"].size(), results.size());
  EXPECT_NE(to_text(results).find("checks passed"), std::string::npos);
}

TEST(VerifyTest, SoftmaxFaultIsCaughtAndNamed) {
  MutationGuard guard(testing::Mutation::kSoftmax);
  const auto results = run(default_checks());
  EXPECT_FALSE(all_passed(results));
  bool softmax_failed = false;
  for (const auto& r : results) {
    if (r.name == "tensor-nn/softmax") softmax_failed = !r.passed;
  }
  EXPECT_TRUE(softmax_failed);
  const std::string text = to_text(results);
  EXPECT_NE(text.find("FAIL tensor-nn/softmax"), std::string::npos) << text;
}

TEST(VerifyTest, ThrowingCheckIsAFailure) {
  const std::vector<Check> checks{{"x/ok", [] { return std::string(); }},
                                  {"x/throws", []() -> std::string { throw DataError("boom"); }},
                                  {"x/fails", [] { return std::string("mismatch"); }}};
  const auto r = run(checks);
  EXPECT_TRUE(r[0].passed);
  EXPECT_FALSE(r[1].passed);
  EXPECT_NE(r[1].detail.find("boom"), std::string::npos);
  EXPECT_FALSE(r[2].passed);
  EXPECT_EQ(r[2].detail, "mismatch");
  EXPECT_NE(to_text(r).find("2 of 3 checks failed"), std::string::npos);
}

}  // namespace
}  // namespace siesef::verify
