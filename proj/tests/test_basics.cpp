#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "tubelab/rng.hpp"
#include "tubelab/sha256.hpp"
#include "tubelab/vec3.hpp"

using namespace tubelab;

TEST_CASE("vec3 algebra") {
  const Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};
  CHECK(cross(x, y) == z);
  CHECK(cross(y, z) == x);
  CHECK(dot(x + y, x - y) == 0);
  CHECK(norm(Vec3{3, 4, 0}) == doctest::Approx(5));

  for (const Vec3& v : {Vec3{1, 2, 3}, Vec3{0, 0, 1}, Vec3{-2, 0, 0}, Vec3{1e-6L, 1, 1e6L}}) {
    const Vec3 o = any_orthogonal(v);
    CHECK(std::fabs(dot(o, v)) <= 1e-15L * norm(v));
    CHECK(norm(o) == doctest::Approx(1));
  }
}

TEST_CASE("rng reproducibility") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
    all_equal = all_equal && (va == vb);
    any_diff = any_diff || (va != vc);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const real u = r.uniform01();
    CHECK(u >= 0);
    CHECK(u < 1);
  }

  // Forks with distinct salts decorrelate even from identical parents.
  Rng p1(5), p2(5);
  Rng f1 = p1.fork(0);
  Rng f2 = p2.fork(1);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += (f1.next_u64() == f2.next_u64());
  CHECK(same == 0);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  std::string a_million(1000000, 'a');
  CHECK(sha256_hex(a_million) ==
        "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");

  // Streaming in odd chunk sizes matches the one-shot digest.
  Sha256 h;
  const std::string msg = "the quick brown fox jumps over the lazy dog etc";
  for (std::size_t i = 0; i < msg.size(); i += 7) {
    h.update(msg.substr(i, 7));
  }
  CHECK(h.hex_digest() == sha256_hex(msg));
}

TEST_CASE("sha256 of a file matches in-memory digest") {
  const std::string path = "sha_test_tmp.bin";
  std::string payload;
  for (int i = 0; i < 70000; ++i) payload.push_back(char(i % 251));
  {
    std::ofstream out(path, std::ios::binary);
    out.write(payload.data(), std::streamsize(payload.size()));
  }
  CHECK(sha256_file_hex(path) == sha256_hex(payload));
  std::remove(path.c_str());
}
