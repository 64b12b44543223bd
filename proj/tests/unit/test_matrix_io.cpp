#include "ermu/matrix_io.hpp"

#include "ermu/rng.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace ermu;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const char* name) {
  const fs::path dir = fs::temp_directory_path() / "ermu-test-matrix-io";
  fs::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("matrices round-trip bit-exactly") {
  const Matrix m = standard_normal(7, 3, 1);
  const fs::path p = scratch("m.bin");
  write_matrix(p, m);
  CHECK(read_matrix(p) == m);
  CHECK(fs::file_size(p) == 24 + 7 * 3 * 8);
}

TEST_CASE("layout is header plus row-major payload") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const fs::path p = scratch("layout.bin");
  write_matrix(p, m);
  std::ifstream in(p, std::ios::binary);
  char magic[8];
  std::uint64_t rows = 0, cols = 0;
  double second = 0.0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&rows), 8);
  in.read(reinterpret_cast<char*>(&cols), 8);
  in.read(reinterpret_cast<char*>(&second), 8);
  in.read(reinterpret_cast<char*>(&second), 8);
  CHECK(std::memcmp(magic, "ERMUMAT1", 8) == 0);
  CHECK(rows == 2);
  CHECK(cols == 2);
  CHECK(second == 2.0);
}

TEST_CASE("corrupt files are rejected") {
  const fs::path bad = scratch("bad.bin");
  {
    std::ofstream out(bad, std::ios::binary);
    out << "NOTAMATRIX______________";
  }
  CHECK_THROWS(read_matrix(bad));
  const fs::path p = scratch("trunc.bin");
  write_matrix(p, standard_normal(4, 4, 2));
  fs::resize_file(p, 24 + 8 * 5);
  CHECK_THROWS(read_matrix(p));
  CHECK_THROWS(read_matrix(scratch("missing.bin")));
}
