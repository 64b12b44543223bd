#include "ermu/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace ermu {

namespace {

constexpr std::array<char, 8> kMagic = {'E', 'R', 'M', 'U', 'M', 'A', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "matrix container assumes little-endian host");

void write_u64(std::ostream& os, std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

}  // namespace

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("write_matrix: cannot open " + path.string());
  os.write(kMagic.data(), kMagic.size());
  write_u64(os, static_cast<std::uint64_t>(m.rows()));
  write_u64(os, static_cast<std::uint64_t>(m.cols()));
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  os.write(reinterpret_cast<const char*>(rm.data()),
           static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_matrix: write failed for " + path.string());
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_matrix: cannot open " + path.string());
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw InvalidArgument("read_matrix: bad magic in " + path.string());
  const std::uint64_t rows = read_u64(is);
  const std::uint64_t cols = read_u64(is);
  if (!is) throw InvalidArgument("read_matrix: truncated header in " + path.string());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  is.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (is.gcount() != static_cast<std::streamsize>(rm.size() * sizeof(double)))
    throw InvalidArgument("read_matrix: truncated payload in " + path.string());
  return rm;
}

}  // namespace ermu
