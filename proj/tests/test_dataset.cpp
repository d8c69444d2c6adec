#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "doctest.h"
#include "qfil/dataset.hpp"
#include "qfil/envs.hpp"

using namespace qfil;
namespace fs = std::filesystem;

namespace {

Transition bandit_row(double s, double a, double r, std::int64_t episode) {
  Transition t;
  t.state = {s};
  t.action = a;
  t.reward = r;
  t.next_state = {0.0};
  t.done = true;
  t.episode = episode;
  return t;
}

bool rows_identical(const Transition& a, const Transition& b) {
  const auto same_bits = [](double x, double y) {
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  };
  if (a.state.size() != b.state.size() || a.next_state.size() != b.next_state.size())
    return false;
  for (std::size_t i = 0; i < a.state.size(); ++i)
    if (!same_bits(a.state[i], b.state[i])) return false;
  for (std::size_t i = 0; i < a.next_state.size(); ++i)
    if (!same_bits(a.next_state[i], b.next_state[i])) return false;
  if (!same_bits(a.action, b.action) || !same_bits(a.reward, b.reward)) return false;
  if (a.done != b.done || a.episode != b.episode) return false;
  if (a.next_action.has_value() != b.next_action.has_value()) return false;
  if (a.next_action && !same_bits(*a.next_action, *b.next_action)) return false;
  return true;
}

}  // namespace

TEST_CASE("singleton dataset sampling repeats the row") {
  Dataset ds(BanditEnv::info(), {bandit_row(0.5, 0.5, 1.0, 0)});
  RngStream rng(1, "batch");
  const auto batch = ds.sample_batch(3, rng);
  REQUIRE(batch.size() == 3);
  for (const auto& t : batch) CHECK(t.action == 0.5);
}

TEST_CASE("batch sampling is deterministic under equal rng state") {
  RngStream gen(2, "data");
  const Dataset ds = BanditEnv::generate(100, gen);
  RngStream a(3, "batch");
  RngStream b(3, "batch");
  CHECK(ds.sample_indices(64, a) == ds.sample_indices(64, b));
}

TEST_CASE("uniform sampling frequencies are balanced") {
  std::vector<Transition> rows;
  for (int i = 0; i < 10; ++i) rows.push_back(bandit_row(0.1 * i, 0.3, 0.0, i));
  Dataset ds(BanditEnv::info(), std::move(rows));
  RngStream rng(4, "batch");
  std::vector<int> counts(10, 0);
  const int n = 100000;
  for (std::size_t i : ds.sample_indices(n, rng)) ++counts[i];
  for (int c : counts) {
    CHECK(std::abs(c - n / 10) < 4.0 * std::sqrt(n * 0.1 * 0.9));
  }
}

TEST_CASE("episodic returns sum rewards per episode") {
  EnvInfo env = BanditEnv::info();
  std::vector<Transition> rows;
  // one episode with rewards 1, 2, -1 (non-terminal rows carry next actions)
  Transition t1 = bandit_row(0.1, 0.2, 1.0, 0);
  t1.done = false;
  t1.next_action = 0.5;
  Transition t2 = bandit_row(0.2, 0.3, 2.0, 0);
  t2.done = false;
  t2.next_action = 0.5;
  Transition t3 = bandit_row(0.3, 0.4, -1.0, 0);
  rows = {t1, t2, t3};
  Dataset ds(env, rows);
  REQUIRE(ds.num_episodes() == 1);
  CHECK(ds.episode_returns()[0] == doctest::Approx(2.0));

  std::vector<Transition> rows2 = {bandit_row(0.1, 0.2, 1.0, 0), bandit_row(0.2, 0.3, 5.0, 1)};
  Dataset ds2(env, rows2);
  REQUIRE(ds2.num_episodes() == 2);
  CHECK(ds2.episode_returns()[0] == 1.0);
  CHECK(ds2.episode_returns()[1] == 5.0);
}

TEST_CASE("horizon-1 returns equal rewards elementwise") {
  RngStream gen(5, "data");
  const Dataset ds = BanditEnv::generate(50, gen);
  REQUIRE(ds.num_episodes() == 50);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.episode_returns()[i] == ds[i].reward);
  }
}

TEST_CASE("empty dataset round-trips") {
  Dataset ds(BanditEnv::info(), {});
  const fs::path path = fs::temp_directory_path() / "qfil_ds_empty.bin";
  ds.save(path);
  const Dataset back = Dataset::load(path);
  CHECK(back.size() == 0);
  CHECK(back.env() == ds.env());
  fs::remove(path);
}

TEST_CASE("bandit dataset round-trips bit exactly") {
  RngStream gen(6, "data");
  const Dataset ds = BanditEnv::generate(1000, gen);
  const fs::path path = fs::temp_directory_path() / "qfil_ds_rt.bin";
  ds.save(path);
  const Dataset back = Dataset::load(path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.env() == ds.env());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(rows_identical(ds[i], back[i]));
  }
  fs::remove(path);
}

TEST_CASE("grid dataset round-trips with next actions") {
  RngStream gen(7, "data");
  const Dataset ds = grid_generate(GridMdp::make_default(), 5, gen, 60);
  const fs::path path = fs::temp_directory_path() / "qfil_ds_grid.bin";
  ds.save(path);
  const Dataset back = Dataset::load(path);
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(rows_identical(ds[i], back[i]));
  fs::remove(path);
}

TEST_CASE("load rejects a NaN reward naming the record") {
  RngStream gen(8, "data");
  const Dataset ds = BanditEnv::generate(3, gen);
  const fs::path path = fs::temp_directory_path() / "qfil_ds_nan.bin";
  ds.save(path);
  // Header: magic(8) + name_len(4) + "bandit"(6) + kind(1) + state_dim(4)
  //       + num_actions(4) + one_hot(4) + lo(8) + hi(8) + count(8) = 55.
  // Record: episode(8) + done(1) + has_next(1) + action(8) -> reward at +18.
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    REQUIRE(f.good());
    f.seekp(55 + 18);
    const double bad = std::nan("");
    f.write(reinterpret_cast<const char*>(&bad), sizeof(bad));
  }
  try {
    Dataset::load(path);
    FAIL("expected a parse rejection");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("record 0") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("construction enforces the next-action convention") {
  Transition bad = bandit_row(0.5, 0.5, 1.0, 0);
  bad.next_action = 0.3;  // terminal row must not carry one
  CHECK_THROWS_AS(Dataset(BanditEnv::info(), {bad}), std::invalid_argument);
  Transition bad2 = bandit_row(0.5, 0.5, 1.0, 0);
  bad2.done = false;  // non-terminal row must carry one
  CHECK_THROWS_AS(Dataset(BanditEnv::info(), {bad2}), std::invalid_argument);
}

TEST_CASE("construction enforces contiguous episode ids") {
  std::vector<Transition> rows = {bandit_row(0.1, 0.2, 0.0, 0), bandit_row(0.1, 0.2, 0.0, 2)};
  CHECK_THROWS_AS(Dataset(BanditEnv::info(), rows), std::invalid_argument);
}

TEST_CASE("construction rejects out-of-bounds actions") {
  CHECK_THROWS_AS(Dataset(BanditEnv::info(), {bandit_row(0.5, 1.5, 0.0, 0)}),
                  std::invalid_argument);
}

TEST_CASE("csv export writes one line per row plus header") {
  RngStream gen(9, "data");
  const Dataset ds = BanditEnv::generate(10, gen);
  const fs::path path = fs::temp_directory_path() / "qfil_ds.csv";
  ds.export_csv(path);
  std::ifstream is(path);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 11);
  fs::remove(path);
}

TEST_CASE("sampling from an empty dataset is rejected") {
  Dataset ds(BanditEnv::info(), {});
  RngStream rng(10, "batch");
  CHECK_THROWS_AS(ds.sample_indices(1, rng), std::invalid_argument);
}
