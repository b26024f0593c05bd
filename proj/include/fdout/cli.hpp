#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fdout/fdout.hpp"
#include "fdout/io.hpp"
#include "fdout/plot.hpp"

namespace fdout::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumeric = 3;

inline int exit_code_for(const Error& e) { return is_numeric_failure(e.code()) ? kExitNumeric : kExitInput; }

inline std::string join(const std::vector<std::string>& parts, char sep = ',') {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += sep;
    out += parts[k];
  }
  return out;
}

inline std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct SimulateConfig {
  SimulationParams params;
  std::string out_dir = ".";
};

/// Every method option starts from the library's own default-constructed
/// option struct, so the CLI cannot drift from the library.
struct DetectConfig {
  std::string method = "msplot";
  std::vector<std::string> inputs;
  std::string report;
  std::string plot;
  std::string plot_kind = plot::to_string(plot::PlotKind::Curves);
  std::uint64_t seed = RandomSource{}.seed();

  MsplotOptions msplot;
  TvdmssOptions tvdmss;
  SeqTransformOptions seq;
  std::string sequence = [] {
    std::vector<std::string> names;
    for (auto t : SeqTransformOptions{}.sequence) names.push_back(to_string(t));
    return join(names);
  }();
  std::string depth = to_string(SeqTransformOptions{}.depth_method);
  std::string erld_type = to_string(SeqTransformOptions{}.erld_type);
  std::string cut_method = to_string(kDefaultMuodCut);
  double central_region = SeqTransformOptions{}.central_region;
  double factor = SeqTransformOptions{}.factor;
  std::string header = "auto";
};

struct DepthConfig {
  std::string method = "mbd";
  std::string input;
  std::string out;
  std::string erld_type = to_string(ErldType::TwoSided);
  std::uint64_t seed = RandomSource{}.seed();
  std::string header = "auto";
};

struct PlotConfig {
  std::vector<std::string> inputs;
  std::string report;
  std::string out;
  std::string kind = plot::to_string(plot::PlotKind::Curves);
  std::string header = "auto";
};

struct Config {
  unsigned threads = 1;
  SimulateConfig simulate;
  DetectConfig detect;
  DepthConfig depth;
  PlotConfig plot;
};

inline io::HeaderMode parse_header_mode(const std::string& s) {
  if (s == "auto") return io::HeaderMode::Auto;
  if (s == "yes") return io::HeaderMode::Present;
  if (s == "no") return io::HeaderMode::Absent;
  throw Error(ErrorCode::InvalidArgument, "--header must be auto, yes or no");
}

/// Registers every subcommand and flag on `app`, bound to `cfg`.
inline void build_app(CLI::App& app, Config& cfg) {
  app.description("Functional-data outlier detection");
  app.require_subcommand(1);
  app.add_option("--threads", cfg.threads, "Worker threads for the parallel kernels")->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Draw a contaminated sample from one of the nine models");
  auto& sp = cfg.simulate.params;
  sim->add_option("--model", sp.model, "Model number 1..9")->capture_default_str();
  sim->add_option("--n", sp.n, "Number of curves")->capture_default_str();
  sim->add_option("--p", sp.p, "Number of grid points")->capture_default_str();
  sim->add_option("--rate", sp.outlier_rate, "Outlier rate")->capture_default_str();
  sim->add_option("--seed", sp.seed, "Random seed")->capture_default_str();
  sim->add_flag("--deterministic", sp.deterministic, "Plant exactly ceil(n*rate) evenly spaced outliers");
  sim->add_option("--shift", sp.shift, "Magnitude shift for models 1-3")->capture_default_str();
  sim->add_option("--out", cfg.simulate.out_dir, "Output directory")->capture_default_str();

  auto* det = app.add_subcommand("detect", "Run a detector on CSV curves and write a JSON report");
  auto& dc = cfg.detect;
  det->add_option("--method", dc.method, "msplot | tvdmss | seq | muod | fbplot")
      ->capture_default_str()
      ->check(CLI::IsMember({"msplot", "tvdmss", "seq", "muod", "fbplot"}));
  det->add_option("--in", dc.inputs, "Input CSV file(s); several files form a multivariate sample")
      ->required()
      ->delimiter(',');
  det->add_option("--report", dc.report, "Report JSON path")->required();
  det->add_option("--plot", dc.plot, "SVG output path");
  det->add_option("--plot-kind", dc.plot_kind, "curves | msplot")
      ->capture_default_str()
      ->check(CLI::IsMember({"curves", "msplot"}));
  det->add_option("--seed", dc.seed, "Random seed")->capture_default_str();
  det->add_option("--header", dc.header, "Grid header row: auto | yes | no")->capture_default_str();
  det->add_option("--level", dc.msplot.level, "msplot: F tail probability")->capture_default_str();
  det->add_option("--coverage", dc.msplot.coverage, "msplot: MCD coverage fraction");
  det->add_option("--n-directions", dc.msplot.sdo.n_directions, "msplot/seq: projection directions for d >= 2")
      ->capture_default_str();
  det->add_option("--emp-factor-mss", dc.tvdmss.emp_factor_mss, "tvdmss: MSS boxplot factor")->capture_default_str();
  det->add_option("--emp-factor-tvd", dc.tvdmss.emp_factor_tvd, "tvdmss: functional boxplot factor")
      ->capture_default_str();
  det->add_option("--central-region-tvd", dc.tvdmss.central_region_tvd, "tvdmss: central region fraction")
      ->capture_default_str();
  det->add_option("--sequence", dc.sequence, "seq: comma-separated transformations")->capture_default_str();
  det->add_option("--depth", dc.depth, "seq/fbplot: ordering method")->capture_default_str();
  det->add_option("--erld-type", dc.erld_type, "two_sided | one_sided_right | one_sided_left")
      ->capture_default_str();
  det->add_flag("--save-data", dc.seq.save_data, "seq: include transformed data in the report");
  det->add_option("--cut-method", dc.cut_method, "muod: tangent | boxplot")->capture_default_str();
  det->add_option("--central-region", dc.central_region, "seq/fbplot: central region fraction")
      ->capture_default_str();
  det->add_option("--factor", dc.factor, "seq/fbplot: fence factor")->capture_default_str();

  auto* dep = app.add_subcommand("depth", "Compute a depth or outlyingness ordering");
  dep->add_option("--method", cfg.depth.method, "bd | mbd | erld | dq | linf | ed | tvd | rmd")
      ->capture_default_str();
  dep->add_option("--in", cfg.depth.input, "Input CSV")->required();
  dep->add_option("--out", cfg.depth.out, "Output CSV")->required();
  dep->add_option("--erld-type", cfg.depth.erld_type, "ERLD variant")->capture_default_str();
  dep->add_option("--seed", cfg.depth.seed, "Random seed (rmd)")->capture_default_str();
  dep->add_option("--header", cfg.depth.header, "Grid header row: auto | yes | no")->capture_default_str();

  auto* plt = app.add_subcommand("plot", "Render an SVG from data and an existing report");
  plt->add_option("--in", cfg.plot.inputs, "Input CSV file(s)")->required()->delimiter(',');
  plt->add_option("--report", cfg.plot.report, "Report JSON")->required();
  plt->add_option("--out", cfg.plot.out, "SVG output path")->required();
  plt->add_option("--kind", cfg.plot.kind, "curves | msplot")
      ->capture_default_str()
      ->check(CLI::IsMember({"curves", "msplot"}));
  plt->add_option("--header", cfg.plot.header, "Grid header row: auto | yes | no")->capture_default_str();
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline std::string truth_text(const IndexSet& rows) {
  std::string out;
  for (auto i : rows) out += std::to_string(i + 1) + "\n";
  return out;
}

/// Writes DIR/data.csv and DIR/truth.txt (1-based contaminated rows, one per line).
inline SimulationOutput run_simulate(const SimulateConfig& cfg) {
  SimulationOutput sim = simulation_model(cfg.params);
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory '" + cfg.out_dir + "'");
  const std::filesystem::path dir(cfg.out_dir);
  io::write_wide_csv((dir / "data.csv").string(), sim.data);
  io::write_file_atomic((dir / "truth.txt").string(), truth_text(sim.true_outliers));
  return sim;
}

inline IndexSet read_truth(const std::string& path) {
  IndexSet out;
  std::istringstream in(io::read_file(path));
  std::size_t v = 0;
  while (in >> v) {
    if (v == 0) throw Error(ErrorCode::ParseError, path + ": truth indices are 1-based");
    out.push_back(v - 1);
  }
  return out;
}

// ---------------------------------------------------------------------------
// detect
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

inline void add_depth_diagnostic(io::DetectionReport& r, const DepthVector& depth) {
  r.diagnostics.emplace_back("depth", depth.scores);
  r.parameters["depth_direction"] =
      depth.direction == Direction::DeeperIsLarger ? "deeper_is_larger" : "outlying_is_larger";
}

inline IndexSet set_union(std::initializer_list<const IndexSet*> sets) {
  IndexSet all;
  for (auto* s : sets) all.insert(all.end(), s->begin(), s->end());
  return normalize_set(std::move(all));
}

}  // namespace detail

/// Runs the configured detector on an in-memory sample.
inline io::DetectionReport detect_sample(const DetectConfig& cfg, const MultiCurveSample& sample) {
  require_valid(sample);
  io::DetectionReport r;
  r.method = cfg.method;
  r.n = sample.n();
  r.p = sample.p();
  r.d = sample.d();
  r.parameters["seed"] = cfg.seed;
  RandomSource rng(cfg.seed);

  auto univariate = [&]() -> CurveSample {
    if (sample.d() != 1) {
      throw Error(ErrorCode::InvalidArgument, "method " + cfg.method + " needs a single input file (d = 1)");
    }
    return sample.to_univariate();
  };

  if (cfg.method == "msplot") {
    r.parameters["level"] = cfg.msplot.level;
    r.parameters["coverage"] = detail::opt_json(cfg.msplot.coverage);
    r.parameters["n_directions"] = cfg.msplot.sdo.n_directions;
    const MsplotResult res = msplot(sample, rng, cfg.msplot);
    r.outliers.emplace_back("outliers", res.outliers);
    for (std::size_t k = 0; k < res.mo.cols(); ++k) r.diagnostics.emplace_back("mo_" + std::to_string(k + 1), res.mo.col(k));
    r.diagnostics.emplace_back("vo", res.vo);
    r.diagnostics.emplace_back("distance", res.distances);
    r.statistics = {{"threshold", res.cutoff.threshold},
                    {"dof1", res.cutoff.dof1},
                    {"dof2", res.cutoff.dof2},
                    {"scale", res.cutoff.scale}};
  } else if (cfg.method == "tvdmss") {
    r.parameters["emp_factor_mss"] = cfg.tvdmss.emp_factor_mss;
    r.parameters["emp_factor_tvd"] = cfg.tvdmss.emp_factor_tvd;
    r.parameters["central_region_tvd"] = cfg.tvdmss.central_region_tvd;
    const TvdmssResult res = tvdmss(univariate(), cfg.tvdmss);
    r.outliers.emplace_back("outliers", res.outliers);
    r.outliers.emplace_back("shape", res.shape_outliers);
    r.outliers.emplace_back("magnitude", res.magnitude_outliers);
    r.diagnostics.emplace_back("tvd", res.tvd);
    r.diagnostics.emplace_back("mss", res.mss);
  } else if (cfg.method == "seq") {
    SeqTransformOptions opts = cfg.seq;
    opts.sequence.clear();
    for (const auto& s : split(cfg.sequence)) opts.sequence.push_back(parse_transform(s));
    opts.depth_method = parse_depth_method(cfg.depth);
    opts.erld_type = parse_erld_type(cfg.erld_type);
    opts.central_region = cfg.central_region;
    opts.factor = cfg.factor;
    r.parameters["sequence"] = cfg.sequence;
    r.parameters["depth"] = to_string(opts.depth_method);
    r.parameters["erld_type"] = to_string(opts.erld_type);
    r.parameters["central_region"] = opts.central_region;
    r.parameters["factor"] = opts.factor;
    const SeqTransformResult res = seq_transform(sample, rng, opts);
    IndexSet all;
    for (const auto& st : res.stages) all.insert(all.end(), st.outliers.begin(), st.outliers.end());
    r.outliers.emplace_back("outliers", normalize_set(std::move(all)));
    for (const auto& st : res.stages) r.outliers.emplace_back(st.label, st.outliers);
    if (opts.save_data) {
      for (const auto& st : res.stages) {
        if (!st.data) continue;
        for (std::size_t t = 0; t < st.data->p(); ++t) {
          r.diagnostics.emplace_back(st.label + "_t" + std::to_string(t + 1), st.data->values.col(t));
        }
      }
    }
    r.warnings = res.warnings;
  } else if (cfg.method == "muod") {
    const MuodCut cut = parse_muod_cut(cfg.cut_method);
    r.parameters["cut_method"] = to_string(cut);
    const MuodResult res = muod(univariate(), cut);
    r.outliers.emplace_back("outliers", detail::set_union({&res.outliers.shape, &res.outliers.magnitude,
                                                           &res.outliers.amplitude}));
    r.outliers.emplace_back("shape", res.outliers.shape);
    r.outliers.emplace_back("magnitude", res.outliers.magnitude);
    r.outliers.emplace_back("amplitude", res.outliers.amplitude);
    r.diagnostics.emplace_back("shape_index", res.indices.shape);
    r.diagnostics.emplace_back("magnitude_index", res.indices.magnitude);
    r.diagnostics.emplace_back("amplitude_index", res.indices.amplitude);
  } else if (cfg.method == "fbplot") {
    const DepthMethod method = parse_depth_method(cfg.depth);
    const ErldType erld = parse_erld_type(cfg.erld_type);
    r.parameters["depth"] = to_string(method);
    r.parameters["central_region"] = cfg.central_region;
    r.parameters["factor"] = cfg.factor;
    const CurveSample uni = univariate();
    const DepthVector depth = compute_depth(uni, method, erld, rng);
    const FunctionalBoxplotResult res = functional_boxplot(uni, depth, cfg.central_region, cfg.factor);
    r.outliers.emplace_back("outliers", res.outliers);
    r.outliers.emplace_back("central", res.central_indices);
    detail::add_depth_diagnostic(r, depth);
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown method '" + cfg.method + "'");
  }
  if (!sample.grid.is_uniform()) {
    r.warnings.push_back("non-uniform grid: functional integrals are plain grid averages and may be biased");
  }
  return r;
}

/// Reads inputs, detects, writes the report (and the plot when requested).
/// On failure a report carrying the error name is still written when possible.
inline int run_detect(const DetectConfig& cfg, std::ostream& err) {
  MultiCurveSample sample;
  io::DetectionReport report;
  try {
    sample = io::read_curves(cfg.inputs, {parse_header_mode(cfg.header)});
    report = detect_sample(cfg, sample);
    io::write_report(cfg.report, report);
    if (!cfg.plot.empty()) {
      io::write_file_atomic(cfg.plot, plot::render(report, sample, plot::parse_plot_kind(cfg.plot_kind)));
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    io::DetectionReport failed;
    failed.method = cfg.method;
    failed.n = sample.n();
    failed.p = sample.p();
    failed.d = sample.d();
    failed.error = std::string(e.name());
    failed.warnings.push_back(e.what());
    try {
      io::write_report(cfg.report, failed);
    } catch (const Error&) {
      // nothing more to report to
    }
    return exit_code_for(e);
  }
}

// ---------------------------------------------------------------------------
// depth
// ---------------------------------------------------------------------------

inline std::string depth_csv(const DepthVector& depth) {
  std::string out = "curve,score,direction\n";
  const char* dir = depth.direction == Direction::DeeperIsLarger ? "deeper_is_larger" : "outlying_is_larger";
  for (std::size_t i = 0; i < depth.size(); ++i) {
    out += std::to_string(i + 1) + "," + io::format_double(depth.scores[i]) + "," + dir + "\n";
  }
  return out;
}

inline DepthVector run_depth(const DepthConfig& cfg) {
  const CurveSample sample = io::read_wide_csv(cfg.input, {parse_header_mode(cfg.header)});
  require_valid(sample);
  RandomSource rng(cfg.seed);
  const DepthVector depth = compute_depth(sample, parse_depth_method(cfg.method), parse_erld_type(cfg.erld_type), rng);
  io::write_file_atomic(cfg.out, depth_csv(depth));
  return depth;
}

inline void run_plot(const PlotConfig& cfg) {
  const MultiCurveSample sample = io::read_curves(cfg.inputs, {parse_header_mode(cfg.header)});
  const io::DetectionReport report = io::read_report(cfg.report);
  io::write_file_atomic(cfg.out, plot::render(report, sample, plot::parse_plot_kind(cfg.kind)));
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

/// Parses argv and dispatches. Exit codes: 0 success, 2 input or validation
/// error, 3 numeric failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"fdout"};
  Config cfg;
  build_app(app, cfg);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  const unsigned previous = thread_count();
  set_thread_count(cfg.threads);
  int code = kExitOk;
  try {
    if (app.got_subcommand("simulate")) {
      const SimulationOutput sim = run_simulate(cfg.simulate);
      out << "wrote " << sim.data.n() << "x" << sim.data.p() << " sample with " << sim.true_outliers.size()
          << " planted outliers to " << cfg.simulate.out_dir << "\n";
    } else if (app.got_subcommand("detect")) {
      code = run_detect(cfg.detect, err);
    } else if (app.got_subcommand("depth")) {
      run_depth(cfg.depth);
    } else if (app.got_subcommand("plot")) {
      run_plot(cfg.plot);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = exit_code_for(e);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = kExitInput;
  }
  set_thread_count(previous);
  return code;
}

}  // namespace fdout::cli
