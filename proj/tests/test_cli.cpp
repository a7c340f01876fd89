/*
 Copyright 2026 The koopctl Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "koopctl/cli.hpp"
#include "koopctl/coeff_tensor.hpp"

using namespace koopctl;

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = run_cli(args, out, err);
  return {status, out.str(), err.str()};
}

std::vector<std::string> fast(std::vector<std::string> extra) {
  std::vector<std::string> a{"--preset", "vdp", "--set", "koopman.cutoffs=16 16", "--set",
                             "koopman.dt=1e-3", "--set", "hjb.spacing=0.1",      "--set",
                             "hjb.substeps=1",  "--set", "sim.duration=0.05",    "--set",
                             "sim.dt=1e-3",     "--set", "fk.dt=1e-3",           "--set",
                             "fk.probes=0 0; 1 0"};
  a.insert(a.end(), extra.begin(), extra.end());
  return a;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("zero-path estimates are a validation error") {
  const Run r = run(fast({"solve-fk", "--npaths", "0"}));
  CHECK(r.status == 2);
  CHECK(r.err.find("error[ValidationError]") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("uncontrolled simulation writes a trajectory") {
  const Run r = run(fast({"simulate", "--controller", "zero", "--stride", "10"}));
  CHECK(r.status == 0);
  CHECK(r.out.find("\nt,x1,x2,u2\n") != std::string::npos);
  CHECK(r.out.find("# controller = zero") != std::string::npos);
  CHECK(r.out.find("# lambda = 0.25") != std::string::npos);
  CHECK(r.out.find("# plant_diffusion = 0.1 0; 0 1") != std::string::npos);
}

TEST_CASE("artifacts are byte identical across reruns") {
  for (const char* cmd : {"solve-koopman", "solve-hjb", "solve-fk", "simulate", "compare-psi"}) {
    std::vector<std::string> extra{cmd};
    if (std::string(cmd) == "solve-fk") {
      extra.insert(extra.end(), {"--npaths", "200"});
    }
    const Run a = run(fast(extra));
    const Run b = run(fast(extra));
    CAPTURE(cmd);
    CHECK(a.status == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind(std::string("# koopctl ") + cmd + "\n", 0) == 0);
  }
}

TEST_CASE("fk rows follow the documented schema") {
  const Run r = run(fast({"solve-fk", "--npaths", "100", "--seed", "4"}));
  REQUIRE(r.status == 0);
  CHECK(r.out.find("\nx1,x2,t,mean,stderr,npaths\n0,0,0,") != std::string::npos);
  CHECK(r.out.find("# seed = 4") != std::string::npos);
  CHECK(r.out.find(",100\n") != std::string::npos);
  const Run other = run(fast({"solve-fk", "--npaths", "100", "--seed", "5"}));
  CHECK(other.out != r.out);
}

TEST_CASE("koopman coefficients can be read back") {
  const Run r = run(fast({"solve-koopman"}));
  REQUIRE(r.status == 0);
  std::istringstream is(r.out);
  const CoeffTensor t = read_coeff_csv(is);
  CHECK(t.extents() == std::vector<int>{16, 16, 2});
  CHECK(t.time() == 0.0);
  CHECK(t.nonzero_count() > 10);
}

TEST_CASE("compare-psi reports a summary") {
  const Run r = run(fast({"compare-psi", "--solvers", "koopman,hjb"}));
  REQUIRE(r.status == 0);
  CHECK(r.out.find("x1,x2,psi_koopman,psi_hjb,rel_err\n") != std::string::npos);
  CHECK(r.out.find("# max_rel_err = ") != std::string::npos);
  CHECK(r.out.find("# mean_rel_err = ") != std::string::npos);
  CHECK(r.err.find("max_rel_err") != std::string::npos);
  CHECK(run(fast({"compare-psi", "--solvers", "koopman"})).status == 2);
  CHECK(run(fast({"compare-psi", "--solvers", "koopman,magic"})).status == 2);
}

TEST_CASE("exit codes") {
  CHECK(run({"--help"}).status == 0);
  CHECK(run({"--preset", "vdp"}).status == 2);
  CHECK(run({"solve-hjb"}).status == 2);
  CHECK(run(fast({"--set", "nonsense", "solve-hjb"})).status == 2);
  CHECK(run(fast({"--set", "hjb.dt=1", "--set", "hjb.spacing=0.01", "solve-hjb"})).status == 2);
  const Run missing = run({"--config", "/nonexistent/koopctl.conf", "solve-hjb"});
  CHECK(missing.status == 4);
  CHECK(missing.err.find("error[IoError]") != std::string::npos);
  CHECK(run(fast({"--out", "/nonexistent/dir/out.csv", "solve-hjb"})).status == 4);
  // A FD step far beyond the stability bound with a permissive factor blows up.
  CHECK(run(fast({"--set", "hjb.cfl=1000", "--set", "hjb.spacing=0.02", "--set", "hjb.dt=0.005",
                   "solve-hjb"})).status == 3);
}

TEST_CASE("config files and output files") {
  const auto dir = std::filesystem::temp_directory_path() / "koopctl_cli_test";
  std::filesystem::create_directories(dir);
  const auto conf = dir / "run.conf";
  {
    std::ofstream f(conf);
    f << "preset = vdp\nkoopman.cutoffs = 12 12\nkoopman.dt = 1e-3\n";
  }
  const auto out = dir / "coeffs.csv";
  const Run r = run({"--config", conf.string(), "--out", out.string(), "solve-koopman"});
  CHECK(r.status == 0);
  CHECK(r.out.empty());
  std::ifstream in(out);
  const CoeffTensor t = read_coeff_csv(in);
  CHECK(t.extents() == std::vector<int>{12, 12, 2});
  std::filesystem::remove_all(dir);
}

}
