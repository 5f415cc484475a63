#include <cstring>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ducfem/config.hpp"
#include "ducfem/errors.hpp"
#include "ducfem/io.hpp"
#include "support.hpp"

using namespace ducfem;

namespace {

std::uint32_t u32_at(const std::string& bytes, std::size_t offset) {
  const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + offset);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
}

double f64_at(const std::string& bytes, std::size_t offset) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i)
    bits = (bits << 8) | static_cast<unsigned char>(bytes[offset + i]);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "/base");
}

}  // namespace

TEST_CASE("PVEC layout") {
  const Eigen::VectorXd p = (Eigen::VectorXd(4) << 1.5, -2.0, 0.25, 3.0).finished();
  std::ostringstream out;
  write_pvec(out, p);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 16 + 4 * 8);
  CHECK(bytes.substr(0, 4) == "PVEC");
  CHECK(u32_at(bytes, 4) == 2);
  CHECK(u32_at(bytes, 8) == 0);
  CHECK(u32_at(bytes, 12) == 0);
  for (int i = 0; i < 4; ++i) CHECK(f64_at(bytes, 16 + 8 * i) == p(i));

  std::istringstream in(bytes);
  CHECK(read_pvec(in) == p);
  std::ostringstream odd;
  CHECK_THROWS_AS(write_pvec(odd, Eigen::VectorXd::Ones(3)), Error);
  std::istringstream truncated(bytes.substr(0, 30));
  CHECK_THROWS_AS(read_pvec(truncated), ParseError);
  std::istringstream wrong("PMAT" + bytes.substr(4));
  CHECK_THROWS_AS(read_pvec(wrong), ParseError);
}

TEST_CASE("PMAT layout and concatenated records") {
  Eigen::MatrixXd A(2, 3);
  A << 1, 2, 3, 4, 5, 6;
  std::ostringstream out;
  write_pmat(out, A);
  write_pmat(out, Eigen::MatrixXd::Identity(1, 1));
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == (12 + 6 * 8) + (12 + 8));
  CHECK(bytes.substr(0, 4) == "PMAT");
  CHECK(u32_at(bytes, 4) == 2);
  CHECK(u32_at(bytes, 8) == 3);
  // column-major
  CHECK(f64_at(bytes, 12) == 1.0);
  CHECK(f64_at(bytes, 20) == 4.0);
  CHECK(f64_at(bytes, 28) == 2.0);

  std::istringstream in(bytes);
  CHECK(read_pmat(in) == A);
  CHECK(read_pmat(in) == Eigen::MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(read_pmat(in), ParseError);

  const auto dir = test::scratch_dir("pmat");
  test::Rng rng(97);
  const Eigen::MatrixXd R = rng.matrix(37, 5);
  save_pmat(dir / "r.pmat", R);
  CHECK(load_pmat(dir / "r.pmat") == R);
  const Eigen::VectorXd v = rng.matrix(20, 1);
  save_pvec(dir / "v.pvec", v);
  CHECK(load_pvec(dir / "v.pvec") == v);
  CHECK_THROWS_AS(load_pmat(dir / "absent.pmat"), Error);
}

TEST_CASE("sample sidecar") {
  const std::vector<ParameterSample> samples{{5.0, {1.0, 0.0}, 0.05, -0.05},
                                             {7.123456789012345, {0.0, 1.0}, 2.0, -0.5}};
  std::ostringstream out;
  write_samples(out, samples);
  CHECK(out.str().rfind("k mu_r mu_i xi_r xi_i\n", 0) == 0);
  std::istringstream in(out.str());
  CHECK(read_samples(in) == samples);

  std::istringstream bad_header("k mu xi\n5 1 0 1 1\n");
  CHECK_THROWS_AS(read_samples(bad_header), ParseError);
  std::istringstream short_line("k mu_r mu_i xi_r xi_i\n5 1 0 1 1\n6 1 0 1\n");
  try {
    read_samples(short_line);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream trailing("k mu_r mu_i xi_r xi_i\n5 1 0 1 1 9\n");
  CHECK_THROWS_AS(read_samples(trailing), ParseError);
}

TEST_CASE("ROM round trip") {
  const auto& fom = test::small_fom();
  test::Rng rng(101);
  RomOperators rom = project_operators(rng.matrix(2 * fom.n(), 4), fom, PodMode::mass_weighted,
                                       "basis.pmat");
  const auto dir = test::scratch_dir("rom");
  save_rom(dir / "rom", rom);
  CHECK(std::filesystem::exists(dir / "rom.pmat"));
  CHECK(std::filesystem::exists(dir / "rom.json"));
  const RomOperators back = load_rom(dir / "rom");
  CHECK(back.N() == 4);
  CHECK(back.mode == PodMode::mass_weighted);
  CHECK(back.basis_ref == "basis.pmat");
  CHECK(back.Mr == rom.Mr);
  CHECK(back.Sr == rom.Sr);
  CHECK(back.K2r == rom.K2r);
  CHECK(back.K2r_skew == rom.K2r_skew);
  CHECK(back.K4r_skew == rom.K4r_skew);
  CHECK(back.Ir == rom.Ir);
  CHECK(back.Mr_energy == rom.Mr_energy);
  CHECK(back.gr_red == rom.gr_red);
  CHECK(back.gi_red == rom.gi_red);

  // a record of the wrong shape is rejected
  {
    std::ifstream in(dir / "rom.pmat", std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(dir / "rom.pmat", std::ios::binary | std::ios::trunc);
    write_pmat(out, Eigen::MatrixXd::Zero(3, 3));
    out.write(bytes.data() + 12 + 16 * 8, bytes.size() - (12 + 16 * 8));
  }
  CHECK_THROWS_AS(load_rom(dir / "rom"), Error);
}

TEST_CASE("CSV escaping and rows") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");

  std::ostringstream out;
  CsvWriter csv(out);
  csv.header({"name", "value", "count"});
  csv.field(std::string("x,y")).field(0.1).field(Index(3)).end_row();
  csv.field(std::string("z")).field(1e-300).field(-2).end_row();
  CHECK(out.str() == "name,value,count\r\n\"x,y\",0.1,3\r\nz,1e-300,-2\r\n");
}

TEST_CASE("reference configurations parse") {
  const auto root = std::filesystem::path(DUCFEM_SOURCE_DIR) / "configs";
  const RunConfig desk = load_config(root / "desk.ini");
  CHECK(desk.mesh.geometry.length == 5.0);
  CHECK(desk.mesh.geometry.height == 1.2);
  CHECK(desk.mesh.geometry.liner_start == 0.21);
  CHECK(desk.mesh.geometry.liner_length == 1.08);
  CHECK(desk.sampling.k_count == 40);
  CHECK(desk.sampling.mu_set.size() == 2);
  CHECK(desk.sampling.mu_set[1] == std::complex<double>(0.0, 1.0));
  CHECK(desk.pod.mode == PodMode::mass_weighted);
  CHECK(desk.pod.select.kind == ModeSelection::Kind::energy);
  CHECK(desk.pod.select.tau == 0.995);
  CHECK(desk.cvar.betas == std::vector<double>{0.5, 0.75, 0.95});
  CHECK(desk.output_dir == root / "out/desk");

  const RunConfig prod = load_config(root / "production.ini");
  CHECK(prod.pod.select.kind == ModeSelection::Kind::rank);
  CHECK(prod.sampling.Q == 4000);
  CHECK(prod.sampling.seed == 2017);

  const RunConfig smoke = load_config(root / "smoke.ini");
  CHECK(smoke.validate.modes == std::vector<Index>{4, 8, 12});
  CHECK_THROWS_AS(load_config(root / "absent.ini"), ConfigError);
}

TEST_CASE("config defaults and values") {
  const RunConfig d = parse("");
  CHECK(d.sampling.Q == 16000);
  CHECK(d.sampling.seed == 2017);
  CHECK(std::holds_alternative<DirectSolve>(d.solver));
  CHECK(d.output_dir == "/base/out");
  CHECK(!d.cvar.gamma_p);

  const RunConfig c = parse(R"([sampling]
mu_set = 1, 2i, 3-4i, -0.5+1e-3i
Q = 10
[solver]
method = gmres
tol = 1e-8
beta2 = 0.25
[cvar]
gamma_p = 12.5
[compare]
theta = 9, 20, 25
[output]
dir = /abs/run
)");
  REQUIRE(c.sampling.mu_set.size() == 4);
  CHECK(c.sampling.mu_set[1] == std::complex<double>(0, 2));
  CHECK(c.sampling.mu_set[2] == std::complex<double>(3, -4));
  CHECK(c.sampling.mu_set[3] == std::complex<double>(-0.5, 1e-3));
  const auto& g = std::get<GmresShiftedLaplacian>(c.solver);
  CHECK(g.tol == 1e-8);
  CHECK(g.beta1 == 1.0);
  CHECK(g.beta2 == 0.25);
  CHECK(*c.cvar.gamma_p == 12.5);
  CHECK(nominal_params(c).k == 9.0);
  CHECK(nominal_params(d).mu_i == 30.0);
  CHECK(c.output_dir == "/abs/run");

  const CvarConfig cv = cvar_config(c, 0.75, 3.0);
  CHECK(cv.beta == 0.75);
  CHECK(cv.gamma_p == 3.0);
  CHECK(cv.Q == 10);
}

TEST_CASE("strict config errors") {
  const char* bad[] = {
      "[nope]\nx = 1\n",
      "stray = 1\n",
      "[mesh]\nwidth = 3\n",
      "[mesh]\nh = 0.1\nh = 0.2\n",
      "[mesh]\nh = abc\n",
      "[mesh]\npath = missing.mesh\n",
      "[mesh]\nliner_start = 4\nliner_length = 2\n",
      "[sampling]\nk_count = 1\n",
      "[sampling]\nxi_r_set = 0, 1\n",
      "[sampling]\nk_range = 10, 5\n",
      "[sampling]\nmu_set = 1+\n",
      "[pod]\nmodes = 10\ntau = 0.9\n",
      "[pod]\nmode = cosine\n",
      "[pod]\ntau = 1\n",
      "[solver]\nmethod = gmres\nmax_iter = 0\n",
      "[solver]\ntol = 1e-8\n",
      "[solver]\nmethod = cg\n",
      "[cvar]\nbeta = 0.5, 1\n",
      "[cvar]\neps = 0\n",
      "[cvar]\nxi_r0 = -1\n",
      "[validate]\nmodes = 10, 5\n",
      "[compare]\ntheta = 1, 2\n",
      "[output]\ndir =\n",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse(text), ConfigError);
  }
}
