#include "ducfem/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ducfem/errors.hpp"
#include "ducfem/format.hpp"
#include "json.hpp"

namespace ducfem {

namespace {

constexpr std::uint32_t kMaxDimension = 0x7fffffff;

template <typename T>
T byteswap(T value) {
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  std::reverse(bytes.begin(), bytes.end());
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

template <typename T>
void put(std::ostream& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* what) {
  T value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T)))
    throw ParseError(std::string("truncated ") + what, 0);
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

void put_doubles(std::ostream& out, const double* data, Index count) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 8));
  } else {
    for (Index i = 0; i < count; ++i) put(out, data[i]);
  }
}

void get_doubles(std::istream& in, double* data, Index count, const char* what) {
  if (!in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * 8)))
    throw ParseError(std::string("truncated ") + what + " payload", 0);
  if constexpr (std::endian::native == std::endian::big)
    for (Index i = 0; i < count; ++i) data[i] = byteswap(data[i]);
}

void expect_magic(std::istream& in, const char* magic) {
  char buf[4];
  if (!in.read(buf, 4)) throw ParseError(std::string("missing ") + magic + " header", 0);
  if (std::memcmp(buf, magic, 4) != 0) throw ParseError(std::string("bad magic, expected ") + magic, 0);
}

std::uint32_t checked_dim(Index value, const char* what) {
  if (value < 0 || value > kMaxDimension) throw Error(std::string(what) + " out of range");
  return static_cast<std::uint32_t>(value);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return in;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

void write_pvec(std::ostream& out, const Eigen::VectorXd& p) {
  if (p.size() % 2 != 0) throw Error("solution vector must have even length 2n");
  out.write("PVEC", 4);
  put<std::uint32_t>(out, checked_dim(p.size() / 2, "n"));
  put<std::uint32_t>(out, 0);
  put<std::uint32_t>(out, 0);
  put_doubles(out, p.data(), p.size());
}

Eigen::VectorXd read_pvec(std::istream& in) {
  expect_magic(in, "PVEC");
  const auto n = get<std::uint32_t>(in, "PVEC header");
  get<std::uint32_t>(in, "PVEC header");
  get<std::uint32_t>(in, "PVEC header");
  Eigen::VectorXd p(2 * static_cast<Index>(n));
  get_doubles(in, p.data(), p.size(), "PVEC");
  return p;
}

void save_pvec(const std::filesystem::path& path, const Eigen::VectorXd& p) {
  auto out = open_out(path);
  write_pvec(out, p);
  close_out(out, path);
}

Eigen::VectorXd load_pvec(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pvec(in);
}

void write_pmat(std::ostream& out, const Eigen::MatrixXd& A) {
  out.write("PMAT", 4);
  put<std::uint32_t>(out, checked_dim(A.rows(), "rows"));
  put<std::uint32_t>(out, checked_dim(A.cols(), "cols"));
  put_doubles(out, A.data(), A.size());
}

Eigen::MatrixXd read_pmat(std::istream& in) {
  expect_magic(in, "PMAT");
  const auto rows = get<std::uint32_t>(in, "PMAT header");
  const auto cols = get<std::uint32_t>(in, "PMAT header");
  Eigen::MatrixXd A(static_cast<Index>(rows), static_cast<Index>(cols));
  get_doubles(in, A.data(), A.size(), "PMAT");
  return A;
}

void save_pmat(const std::filesystem::path& path, const Eigen::MatrixXd& A) {
  auto out = open_out(path);
  write_pmat(out, A);
  close_out(out, path);
}

Eigen::MatrixXd load_pmat(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_pmat(in);
}

void write_samples(std::ostream& out, const std::vector<ParameterSample>& samples) {
  out << "k mu_r mu_i xi_r xi_i\n";
  for (const auto& s : samples)
    out << format_double(s.k) << ' ' << format_double(s.mu.real()) << ' '
        << format_double(s.mu.imag()) << ' ' << format_double(s.xi_r) << ' '
        << format_double(s.xi_i) << '\n';
}

std::vector<ParameterSample> read_samples(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || line.rfind("k mu_r mu_i xi_r xi_i", 0) != 0)
    throw ParseError("expected header 'k mu_r mu_i xi_r xi_i'", line_no);
  std::vector<ParameterSample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    double k, mr, mi, xr, xim;
    if (!(ss >> k >> mr >> mi >> xr >> xim)) throw ParseError("expected five numbers", line_no);
    std::string extra;
    if (ss >> extra) throw ParseError("trailing token '" + extra + "'", line_no);
    samples.push_back({k, {mr, mi}, xr, xim});
  }
  return samples;
}

void save_samples(const std::filesystem::path& path, const std::vector<ParameterSample>& samples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_samples(out, samples);
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

std::vector<ParameterSample> load_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  return read_samples(in);
}

namespace {

struct RomField {
  const char* name;
  Eigen::MatrixXd RomOperators::*matrix;
  Eigen::VectorXd RomOperators::*vector;
};

constexpr std::array<RomField, 9> kRomFields{{
    {"Mr", &RomOperators::Mr, nullptr},
    {"Sr", &RomOperators::Sr, nullptr},
    {"K2r", &RomOperators::K2r, nullptr},
    {"K2r_skew", &RomOperators::K2r_skew, nullptr},
    {"K4r_skew", &RomOperators::K4r_skew, nullptr},
    {"Ir", &RomOperators::Ir, nullptr},
    {"Mr_energy", &RomOperators::Mr_energy, nullptr},
    {"gr_red", nullptr, &RomOperators::gr_red},
    {"gi_red", nullptr, &RomOperators::gi_red},
}};

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
  auto p = stem;
  p += ext;
  return p;
}

}  // namespace

void save_rom(const std::filesystem::path& stem, const RomOperators& rom) {
  save_rom(with_ext(stem, ".pmat"), with_ext(stem, ".json"), rom);
}

void save_rom(const std::filesystem::path& pmat, const std::filesystem::path& json_path,
              const RomOperators& rom) {
  auto out = open_out(pmat);
  nlohmann::json names = nlohmann::json::array();
  for (const auto& f : kRomFields) {
    if (f.matrix)
      write_pmat(out, rom.*f.matrix);
    else
      write_pmat(out, rom.*f.vector);
    names.push_back(f.name);
  }
  close_out(out, pmat);

  const nlohmann::json manifest = {{"schema_version", 1},
                                   {"N", rom.N()},
                                   {"mode", to_string(rom.mode)},
                                   {"basis_ref", rom.basis_ref},
                                   {"matrices", names}};
  std::ofstream js(json_path);
  if (!js) throw Error("cannot write " + json_path.string());
  js << manifest.dump(2) << '\n';
}

RomOperators load_rom(const std::filesystem::path& stem) {
  const auto json_path = with_ext(stem, ".json");
  std::ifstream js(json_path);
  if (!js) throw Error("cannot read " + json_path.string());
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(json_path.string() + ": " + e.what(), 0);
  }
  if (manifest.value("schema_version", 0) != 1) throw Error("unsupported ROM manifest version");
  const auto& names = manifest.at("matrices");
  if (names.size() != kRomFields.size()) throw Error("ROM manifest lists the wrong matrices");

  RomOperators rom;
  rom.mode = parse_pod_mode(manifest.at("mode").get<std::string>());
  rom.basis_ref = manifest.value("basis_ref", std::string{});
  const Index N = manifest.at("N").get<Index>();
  auto in = open_in(with_ext(stem, ".pmat"));
  for (std::size_t i = 0; i < kRomFields.size(); ++i) {
    const auto& f = kRomFields[i];
    if (names[i].get<std::string>() != f.name)
      throw Error(std::string("ROM manifest entry ") + std::to_string(i) + " should be " + f.name);
    Eigen::MatrixXd A = read_pmat(in);
    const bool ok = f.matrix ? (A.rows() == N && A.cols() == N) : (A.rows() == N && A.cols() == 1);
    if (!ok) throw Error(std::string("ROM record ") + f.name + " has the wrong shape");
    if (f.matrix)
      rom.*f.matrix = std::move(A);
    else
      rom.*f.vector = A.col(0);
  }
  return rom;
}

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\r\n") == std::string::npos) return text;
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvWriter& CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) field(n);
  end_row();
  return *this;
}

CsvWriter& CsvWriter::field(const std::string& text) {
  if (!first_) out_ << ',';
  out_ << csv_escape(text);
  first_ = false;
  return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(format_double(value)); }

CsvWriter& CsvWriter::field(long long value) { return field(std::to_string(value)); }

void CsvWriter::end_row() {
  out_ << "\r\n";
  first_ = true;
}

}  // namespace ducfem
