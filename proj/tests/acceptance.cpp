// Acceptance criteria. Each test prints one verdict line.

#include <gtest/gtest.h>

#include <filesystem>
#include <iostream>

#include "holotele/acceptance.hpp"

namespace {

using namespace holotele;

AcceptanceContext context() {
  AcceptanceContext ctx;
  ctx.executable = HOLOTELE_CLI;
  ctx.scratch_dir = (std::filesystem::temp_directory_path() / "holotele_acceptance_pipeline").string();
  return ctx;
}

void run_criterion(int number) {
  const auto& [key, fn] = acceptance_checks().at(static_cast<std::size_t>(number - 1));
  CheckResult r;
  try {
    r = fn(context());
  } catch (const std::exception& e) {
    r = {number, key, false, std::string("error: ") + e.what(), {}};
  }
  std::cout << r.line() << std::endl;
  EXPECT_TRUE(r.passed) << r.line();
}

} // namespace

TEST(Acceptance, Criterion1_heisenberg_identity) { run_criterion(1); }
TEST(Acceptance, Criterion2_classical_limit) { run_criterion(2); }
TEST(Acceptance, Criterion3_quantum_regime) { run_criterion(3); }
TEST(Acceptance, Criterion4_green_function) { run_criterion(4); }
TEST(Acceptance, Criterion5_anticorrelation) { run_criterion(5); }
TEST(Acceptance, Criterion6_coarse_grain) { run_criterion(6); }
TEST(Acceptance, Criterion7_commutator) { run_criterion(7); }
TEST(Acceptance, Criterion8_gaussianity) { run_criterion(8); }
TEST(Acceptance, Criterion9_oracle_equivalence) { run_criterion(9); }
TEST(Acceptance, Criterion10_pipeline_equivalence) { run_criterion(10); }

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  return RUN_ALL_TESTS();
}
