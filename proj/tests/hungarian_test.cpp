#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "pedintent/hungarian.hpp"
#include "pedintent/rng.hpp"

using pedintent::assignment_cost;
using pedintent::hungarian;
using pedintent::Rng;
using pedintent::ValidationError;

namespace {

// Exhaustive oracle: minimum total cost over all permutations, rows assigned
// to distinct columns (rectangular handled by permuting the larger side).
double brute_force_min_cost(const std::vector<double>& cost, int rows, int cols) {
  if (rows <= cols) {
    std::vector<int> col_ids(cols);
    std::iota(col_ids.begin(), col_ids.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double total = 0.0;
      for (int i = 0; i < rows; ++i) total += cost[i * cols + col_ids[i]];
      best = std::min(best, total);
    } while (std::next_permutation(col_ids.begin(), col_ids.end()));
    return best;
  }
  std::vector<int> row_ids(rows);
  std::iota(row_ids.begin(), row_ids.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int j = 0; j < cols; ++j) total += cost[row_ids[j] * cols + j];
    best = std::min(best, total);
  } while (std::next_permutation(row_ids.begin(), row_ids.end()));
  return best;
}

void expect_valid_assignment(const std::vector<std::pair<int, int>>& assignment, int rows,
                             int cols) {
  ASSERT_EQ(assignment.size(), static_cast<std::size_t>(std::min(rows, cols)));
  std::vector<char> row_seen(rows, 0), col_seen(cols, 0);
  for (const auto& [i, j] : assignment) {
    ASSERT_GE(i, 0);
    ASSERT_LT(i, rows);
    ASSERT_GE(j, 0);
    ASSERT_LT(j, cols);
    EXPECT_FALSE(row_seen[i]) << "row used twice";
    EXPECT_FALSE(col_seen[j]) << "column used twice";
    row_seen[i] = 1;
    col_seen[j] = 1;
  }
}

}  // namespace

TEST(HungarianTest, EmptyMatrix) {
  EXPECT_TRUE(hungarian({}, 0, 0).empty());
  EXPECT_TRUE(hungarian({}, 0, 5).empty());
  EXPECT_TRUE(hungarian({}, 3, 0).empty());
}

TEST(HungarianTest, DiagonalZeroGivesIdentity) {
  const int n = 5;
  std::vector<double> cost(n * n, 1.0);
  for (int i = 0; i < n; ++i) cost[i * n + i] = 0.0;
  auto assignment = hungarian(cost, n, n);
  for (const auto& [i, j] : assignment) EXPECT_EQ(i, j);
  EXPECT_DOUBLE_EQ(assignment_cost(cost, n, assignment), 0.0);
}

TEST(HungarianTest, OffDiagonalBeatsGreedy) {
  // {(0,1),(1,0)} costs 5 and beats the diagonal's 6.
  std::vector<double> cost = {1, 2, 3, 5};
  auto assignment = hungarian(cost, 2, 2);
  ASSERT_EQ(assignment.size(), 2u);
  EXPECT_EQ(assignment[0], std::make_pair(0, 1));
  EXPECT_EQ(assignment[1], std::make_pair(1, 0));
  EXPECT_DOUBLE_EQ(assignment_cost(cost, 2, assignment), 5.0);
  EXPECT_DOUBLE_EQ(brute_force_min_cost(cost, 2, 2), 5.0);
}

TEST(HungarianTest, RejectsNonFiniteCosts) {
  std::vector<double> cost = {1.0, std::numeric_limits<double>::infinity(), 0.0, 1.0};
  EXPECT_THROW(hungarian(cost, 2, 2), ValidationError);
  EXPECT_THROW(hungarian({1.0, 2.0}, 2, 2), ValidationError);
}

TEST(HungarianTest, MatchesBruteForceOnSquare7x7) {
  Rng rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    int n = 1 + static_cast<int>(rng.uniform_int(7));
    std::vector<double> cost(n * n);
    for (double& c : cost) c = rng.uniform();
    auto assignment = hungarian(cost, n, n);
    expect_valid_assignment(assignment, n, n);
    EXPECT_DOUBLE_EQ(assignment_cost(cost, n, assignment), brute_force_min_cost(cost, n, n));
  }
}

TEST(HungarianTest, MatchesBruteForceOnRectangular) {
  Rng rng(78);
  for (int trial = 0; trial < 500; ++trial) {
    int rows = 1 + static_cast<int>(rng.uniform_int(7));
    int cols = 1 + static_cast<int>(rng.uniform_int(7));
    std::vector<double> cost(static_cast<std::size_t>(rows) * cols);
    for (double& c : cost) c = rng.uniform(-2.0, 2.0);
    auto assignment = hungarian(cost, rows, cols);
    expect_valid_assignment(assignment, rows, cols);
    EXPECT_DOUBLE_EQ(assignment_cost(cost, cols, assignment),
                     brute_force_min_cost(cost, rows, cols));
  }
}

TEST(HungarianTest, DeterministicOnRepeatedInput) {
  Rng rng(79);
  std::vector<double> cost(36);
  for (double& c : cost) c = rng.uniform();
  auto first = hungarian(cost, 6, 6);
  for (int repeat = 0; repeat < 10; ++repeat) EXPECT_EQ(hungarian(cost, 6, 6), first);
}
