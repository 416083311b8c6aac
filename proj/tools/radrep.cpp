// radrep — feature extraction and test-retest repeatability reports.
//
//   radrep extract  --manifest run.json --out features/ [--jobs N]
//   radrep analyze  --in 'features/*.csv' --out reports/ [--compare A.csv B.csv]
//   radrep plotdata --in reports/ --out plots/
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 partial failure.

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "radrep/error.hpp"
#include "radrep/pipeline.hpp"
#include "radrep/version.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kPartial = 3;

int do_extract(const fs::path& manifest_path, const fs::path& out, unsigned jobs) {
  const auto manifest = radrep::load_manifest(manifest_path);
  const auto summary = radrep::run_extract(manifest, out, jobs);
  std::size_t failures = 0;
  for (const auto& f : summary.files) {
    std::cout << f.csv.string() << "\t" << f.rows << " rows";
    if (!f.errors.empty()) std::cout << "\t" << f.errors.size() << " errors";
    std::cout << "\n";
    failures += f.errors.size();
  }
  if (summary.diagnostics > 0) {
    std::cerr << "note: " << summary.diagnostics
              << " ROI discretizations fell outside the recommended 8..128 gray-level range\n";
  }
  if (failures > 0) {
    std::cerr << failures << " feature-class extractions failed; see the .errors.csv sidecars\n";
    return kPartial;
  }
  return kOk;
}

int do_analyze(const std::vector<std::string>& inputs, const radrep::AnalyzeOptions& options, const fs::path& out) {
  const auto files = radrep::resolve_inputs(inputs);
  const auto index = radrep::run_analyze(files, options, out);
  std::cout << index.at("tables").size() << " repeatability tables, " << index.at("binWidthGroups").size()
            << " bin-width groups, " << index.at("deltas").size() << " deltas -> " << (out / "reports.json").string()
            << "\n";
  for (const auto& s : index.at("skipped")) {
    std::cerr << "skipped " << s.at("report").get<std::string>() << ": " << s.at("error").get<std::string>() << "\n";
  }
  return kOk;
}

int do_plotdata(const fs::path& in, const fs::path& out) {
  for (const auto& p : radrep::run_plotdata(in, out)) std::cout << p.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radiomic feature extraction and test-retest repeatability analysis"};
  app.set_version_flag("--version", std::string(radrep::kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  long long seed = 0;
  app.add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed", seed, "reserved for test fixtures; has no effect on results");

  fs::path manifest, extract_out;
  auto* extract = app.add_subcommand("extract", "extract features for every configured cell");
  extract->add_option("--manifest", manifest, "run manifest (JSON)")->required();
  extract->add_option("--out", extract_out, "output directory")->required();

  std::vector<std::string> analyze_in;
  fs::path analyze_out;
  radrep::AnalyzeOptions options;
  std::string statistic = "max";
  std::vector<std::string> compare;
  auto* analyze = app.add_subcommand("analyze", "compute ICC tables and derived reports");
  analyze->add_option("--in", analyze_in, "feature CSVs, directories or glob patterns")->required();
  analyze->add_option("--out", analyze_out, "report directory")->required();
  analyze->add_option("--reference", options.reference, "reference feature column")->capture_default_str();
  analyze->add_option("--top-k", options.topK, "features per class in the top-k report")->capture_default_str();
  analyze->add_option("--top-k-statistic", statistic, "max | median | unfiltered")
      ->check(CLI::IsMember({"max", "median", "unfiltered"}))
      ->capture_default_str();
  analyze->add_option("--compare", compare, "two feature CSVs to compare (A B)")->expected(2);

  fs::path plot_in, plot_out;
  auto* plotdata = app.add_subcommand("plotdata", "turn a report directory into plot-ready CSVs");
  plotdata->add_option("--in", plot_in, "report directory")->required();
  plotdata->add_option("--out", plot_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  (void)seed;

  try {
    if (*extract) return do_extract(manifest, extract_out, jobs);
    if (*analyze) {
      options.topKStatistic = statistic == "median"       ? radrep::TopKStatistic::MedianOverFilters
                              : statistic == "unfiltered" ? radrep::TopKStatistic::Unfiltered
                                                          : radrep::TopKStatistic::MaxOverFilters;
      if (!compare.empty()) options.compare.emplace_back(compare[0], compare[1]);
      return do_analyze(analyze_in, options, analyze_out);
    }
    if (*plotdata) return do_plotdata(plot_in, plot_out);
  } catch (const radrep::Error& e) {
    std::cerr << "error [" << radrep::error_name(e.code()) << "]: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
