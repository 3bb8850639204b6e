// End-to-end checks of the command-line runner: exit codes, report artifacts,
// schema rejection, and thread-count determinism of the emitted files.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const std::string& what) {
  if (!ok) {
    ++failures;
    std::cerr << "FAILED: " << what << "\n";
  } else {
    std::cout << "ok: " << what << "\n";
  }
}

int run(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: cli_integration <path-to-jumpflow>\n";
    return 2;
  }
  const std::string bin = argv[1];
  const fs::path work = fs::temp_directory_path() / "jumpflow_cli_test";
  fs::remove_all(work);
  fs::create_directories(work);

  // moments: value 2.0 for alpha = 1, eta = 2
  {
    const fs::path out = work / "moments";
    const int rc = run(bin + " --out " + out.string() +
                       " moments --alpha 1.0 --eta 2 > /dev/null");
    expect(rc == 0, "moments exits 0");
    const std::string rep = slurp(out / "report.json");
    expect(rep.find("\"value\": 2.0") != std::string::npos, "moments report contains value 2.0");
    expect(fs::exists(out / "manifest.json") && fs::exists(out / "table.csv"),
           "moments artifacts written");
    const std::string csv = slurp(out / "table.csv");
    expect(csv.rfind("term,estimate,stderr,n,z_score", 0) == 0, "csv header is stable");
  }

  // det-ag linear preset: exit 0 and a small residual in the report
  {
    const fs::path out = work / "detag";
    const int rc = run(bin + " --out " + out.string() + " det-ag --preset linear > /dev/null");
    expect(rc == 0, "det-ag linear exits 0");
    const std::string rep = slurp(out / "report.json");
    expect(rep.find("\"pass\": true") != std::string::npos, "det-ag passes");
  }

  // malformed config: negative n_paths must be rejected before any output
  {
    const fs::path cfg = work / "bad.json";
    std::ofstream(cfg) << R"({"numerics": {"n_paths": -5}})";
    const fs::path out = work / "bad_out";
    const int rc = run(bin + " --config " + cfg.string() + " --out " + out.string() +
                       " weak-ag > /dev/null 2>&1");
    expect(rc == 2, "negative n_paths exits 2");
    expect(!fs::exists(out / "report.json"), "no report written on config error");
  }

  // unknown keys are rejected
  {
    const fs::path cfg = work / "unknown.json";
    std::ofstream(cfg) << R"({"numerics": {"n_paths": 100, "bogus": 1}})";
    const int rc = run(bin + " --config " + cfg.string() + " weak-ag > /dev/null 2>&1");
    expect(rc == 2, "unknown config key exits 2");
  }

  // weak-ag on a tiny budget: deterministic across thread counts
  {
    const fs::path cfg = work / "small.json";
    std::ofstream(cfg) << R"({"numerics": {"n_paths": 1500, "nsteps": 24, "nsteps_restart": 12,
                              "r_grid": 4, "z_nodes": 4, "lambda_nodes": 4}})";
    const fs::path out1 = work / "w1";
    const fs::path out2 = work / "w2";
    const int rc1 = run(bin + " --config " + cfg.string() + " --threads 1 --out " +
                        out1.string() + " weak-ag > /dev/null");
    const int rc2 = run(bin + " --config " + cfg.string() + " --threads 2 --out " +
                        out2.string() + " weak-ag > /dev/null");
    expect(rc1 == 0 || rc1 == 1, "small weak-ag runs (threads 1)");
    expect(rc1 == rc2, "same exit code across thread counts");
    expect(slurp(out1 / "report.json") == slurp(out2 / "report.json"),
           "report.json byte-identical across thread counts");
    expect(slurp(out1 / "table.csv") == slurp(out2 / "table.csv"),
           "table.csv byte-identical across thread counts");
  }

  // seeds flow into the manifest and change results
  {
    const fs::path cfg = work / "small.json";
    const fs::path outa = work / "sa";
    const fs::path outb = work / "sb";
    run(bin + " --config " + cfg.string() + " --seed 1 --out " + outa.string() +
        " weak-ag > /dev/null");
    run(bin + " --config " + cfg.string() + " --seed 2 --out " + outb.string() +
        " weak-ag > /dev/null");
    expect(slurp(outa / "report.json") != slurp(outb / "report.json"),
           "different seeds give different reports");
    expect(slurp(outa / "manifest.json").find("\"seed\": 1") != std::string::npos,
           "manifest records the seed");
  }

  // global flags may trail the subcommand
  {
    const fs::path out = work / "trailing";
    const int rc = run(bin + " moments --alpha 1.0 --eta 2 --out " + out.string() +
                       " > /dev/null");
    expect(rc == 0, "global flags accepted after the subcommand");
    expect(fs::exists(out / "report.json"), "trailing --out honored");
  }

  // ito-check in both modes
  {
    const int rc = run(bin + " ito-check > /dev/null");
    expect(rc == 0, "ito-check exact mode exits 0");
    const fs::path cfg = work / "halving.json";
    std::ofstream(cfg) << R"JSON({"model": {"g": "1", "f": "sin(x)", "mode": "halving"},
      "measure": {"kind": "compound_poisson", "rate": 3.0,
                  "atoms": [{"z": 1.0, "p": 1.0}]},
      "numerics": {"eps": 0.5, "nsteps": 500, "n_paths": 10}})JSON";
    const int rc2 = run(bin + " --config " + cfg.string() + " ito-check > /dev/null");
    expect(rc2 == 0, "ito-check halving mode exits 0");
  }

  std::cout << (failures == 0 ? "cli integration: PASS" : "cli integration: FAIL") << "\n";
  return failures == 0 ? 0 : 1;
}
