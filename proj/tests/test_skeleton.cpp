#include <doctest.h>

#include "badm/skeleton.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace badm;

TEST_CASE("skeleton: canonical table is a valid tree") {
  const Skeleton s = canonical_skeleton();
  CHECK(s.n_joints() == 24);
  CHECK(s.parents[0] == -1);
  for (int j = 1; j < s.n_joints(); ++j) {
    CHECK(s.parents[j] >= 0);
    CHECK(s.parents[j] < j);
    CHECK(s.rest_offsets[size_t(j)].norm() > 0);
  }
  CHECK(s.foot_points == std::array<int, 4>{7, 10, 8, 11});
}

TEST_CASE("skeleton: shipped data file matches the built-in table") {
  const Skeleton file = load_skeleton(std::string(BADM_SOURCE_DIR) + "/data/skeleton.json");
  const Skeleton code = canonical_skeleton();
  CHECK(file.joint_names == code.joint_names);
  CHECK(file.parents == code.parents);
  CHECK(file.foot_points == code.foot_points);
  REQUIRE(file.rest_offsets.size() == code.rest_offsets.size());
  for (size_t j = 0; j < code.rest_offsets.size(); ++j)
    CHECK((file.rest_offsets[j] - code.rest_offsets[j]).norm() == 0.0);
}

TEST_CASE("skeleton: save/load round trip") {
  const auto path = (std::filesystem::temp_directory_path() / "badm_skel_rt.json").string();
  const Skeleton s = canonical_skeleton();
  save_skeleton(s, path);
  const Skeleton back = load_skeleton(path);
  CHECK(back.parents == s.parents);
  CHECK(back.joint_names == s.joint_names);
  std::remove(path.c_str());
}

TEST_CASE("skeleton: malformed inputs are rejected with typed errors") {
  Skeleton s = canonical_skeleton();

  SUBCASE("parent after child") {
    s.parents[3] = 10;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("BadTopology"), Error);
  }
  SUBCASE("non-root root") {
    s.parents[0] = 0;
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("BadTopology"), Error);
  }
  SUBCASE("zero-length bone") {
    s.rest_offsets[5].setZero();
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("BadTopology"), Error);
  }
  SUBCASE("duplicate foot points") {
    s.foot_points = {7, 7, 8, 11};
    CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("BadTopology"), Error);
  }
  SUBCASE("file with wrong format tag") {
    const auto path = (std::filesystem::temp_directory_path() / "badm_skel_bad.json").string();
    std::ofstream(path) << "{\"format\": \"something.else\", \"version\": 1}";
    try {
      load_skeleton(path);
      FAIL("expected a throw");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::io);
      CHECK(e.code() == "BadFormat");
    }
    std::remove(path.c_str());
  }
  SUBCASE("file with wrong version") {
    const auto path = (std::filesystem::temp_directory_path() / "badm_skel_v9.json").string();
    std::ofstream(path) << "{\"format\": \"badm.skeleton\", \"version\": 9}";
    CHECK_THROWS_WITH_AS(load_skeleton(path), doctest::Contains("BadVersion"), Error);
    std::remove(path.c_str());
  }
}
