#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ducfem/pod.hpp"
#include "ducfem/rom.hpp"

namespace ducfem {

/// Solution vector: "PVEC", u32 n, 8 reserved bytes, then 2n little-endian
/// doubles (real block, imaginary block).
void write_pvec(std::ostream& out, const Eigen::VectorXd& p);
Eigen::VectorXd read_pvec(std::istream& in);
void save_pvec(const std::filesystem::path& path, const Eigen::VectorXd& p);
Eigen::VectorXd load_pvec(const std::filesystem::path& path);

/// Dense matrix: "PMAT", u32 rows, u32 cols, column-major little-endian doubles.
/// Several records may be concatenated in one file.
void write_pmat(std::ostream& out, const Eigen::MatrixXd& A);
Eigen::MatrixXd read_pmat(std::istream& in);
void save_pmat(const std::filesystem::path& path, const Eigen::MatrixXd& A);
Eigen::MatrixXd load_pmat(const std::filesystem::path& path);

/// Sample sidecar: header "k mu_r mu_i xi_r xi_i", then one sample per line.
void write_samples(std::ostream& out, const std::vector<ParameterSample>& samples);
std::vector<ParameterSample> read_samples(std::istream& in);
void save_samples(const std::filesystem::path& path, const std::vector<ParameterSample>& samples);
std::vector<ParameterSample> load_samples(const std::filesystem::path& path);

/// Writes `<stem>.pmat` (one record per operator, vectors as single columns)
/// and `<stem>.json` naming the records in order.
void save_rom(const std::filesystem::path& stem, const RomOperators& rom);
void save_rom(const std::filesystem::path& pmat_path, const std::filesystem::path& json_path,
              const RomOperators& rom);
RomOperators load_rom(const std::filesystem::path& stem);

/// RFC 4180 CSV with shortest round-trip numbers.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  CsvWriter& header(const std::vector<std::string>& names);
  CsvWriter& field(const std::string& text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(Index value) { return field(static_cast<long long>(value)); }
  void end_row();

 private:
  std::ostream& out_;
  bool first_ = true;
};

std::string csv_escape(const std::string& text);

}  // namespace ducfem
