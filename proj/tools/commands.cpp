// SPDX-License-Identifier: Apache-2.0
#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "epchiral/ep_locator.hpp"
#include "epchiral/errors.hpp"
#include "epchiral/io.hpp"
#include "epchiral/monodromy.hpp"
#include "epchiral/random.hpp"
#include "epchiral/reduction.hpp"
#include "epchiral/two_level.hpp"

namespace epchiral::cli {

namespace {

using nlohmann::json;

struct RunConfig {
  std::string pencil_path;
  std::string two_level_path;
  std::string out_dir = ".";
  std::optional<double> tol_eig;
  std::optional<double> tol_newton;
  std::uint64_t seed = 42;

  Tolerances tolerances() const {
    Tolerances tol;
    if (tol_eig) {
      tol.eig_residual = *tol_eig;
    }
    if (tol_newton) {
      tol.newton_residual = *tol_newton;
    }
    return tol;
  }
};

// Raised for bad flag values; maps to exit code 1 like a parse failure.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json to_json(cplx z) {
  return {{"re", z.real()}, {"im", z.imag()}};
}

json to_json(const std::vector<cplx>& zs) {
  json arr = json::array();
  for (const auto& z : zs) {
    arr.push_back(to_json(z));
  }
  return arr;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string fmt(cplx z) {
  std::ostringstream s;
  s << std::setprecision(10) << z.real() << (z.imag() < 0.0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return s.str();
}

MatrixPencil load_input(const RunConfig& cfg) {
  if (!cfg.two_level_path.empty()) {
    return assemble(load_two_level(cfg.two_level_path));
  }
  if (cfg.pencil_path.empty()) {
    throw UsageError("one of --pencil or --two-level is required");
  }
  return load_pencil(cfg.pencil_path, cfg.tolerances());
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_json(const RunConfig& cfg, const std::string& name, const json& doc) {
  write_file_atomic(out_path(cfg, name), doc.dump(2) + "\n");
}

TrackTable state_table(const ContinuationState& state) {
  TrackTable table;
  table.leading_names = {"step", "lambda_re", "lambda_im"};
  for (std::size_t s = 0; s < state.lambdas.size(); ++s) {
    table.leading.push_back({static_cast<double>(s), state.lambdas[s].real(), state.lambdas[s].imag()});
    std::vector<cplx> row;
    for (const auto& track : state.tracks) {
      row.push_back(track[s]);
    }
    table.values.push_back(std::move(row));
  }
  return table;
}

// Refines a user-supplied EP location and returns the member of the
// conjugate pair closest to it.
ExceptionalPoint refine_ep(const MatrixPencil& pencil, cplx guess, const Tolerances& tol) {
  const auto eps = newton_ep_from_guess(pencil, guess, {}, tol);
  return std::abs(eps[0].lambda_c - guess) <= std::abs(eps[1].lambda_c - guess) ? eps[0] : eps[1];
}

json ep_json(const ExceptionalPoint& ep) {
  return {{"lambda_c", to_json(ep.lambda_c)},
          {"e_c", to_json(ep.e_c)},
          {"pair", {ep.pair.first, ep.pair.second}},
          {"residual", ep.residual},
          {"lambda_seed", ep.lambda_seed}};
}

json chirality_json(const ChiralityResult& ch) {
  json samples = json::array();
  for (const auto& [lambda, ratio] : ch.ratio_samples) {
    samples.push_back({{"lambda", to_json(lambda)}, {"ratio", to_json(ratio)}});
  }
  return {{"sign", ch.sign},
          {"ratio_samples", samples},
          {"max_deviation", ch.max_deviation},
          {"ratio_stddev", ch.ratio_stddev},
          {"sample_radius", ch.sample_radius}};
}

struct Interval {
  double from = -5.0;
  double to = 5.0;
  int steps = 2000;
};

void add_interval(CLI::App* cmd, Interval& iv) {
  cmd->add_option("--from", iv.from, "Lower end of the real lambda interval")->capture_default_str();
  cmd->add_option("--to", iv.to, "Upper end of the real lambda interval")->capture_default_str();
  cmd->add_option("--steps", iv.steps, "Number of sweep intervals")->capture_default_str()->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------- commands

int cmd_eigs(const RunConfig& cfg, const std::string& lambda_text, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  const cplx lambda = parse_complex(lambda_text);
  const EigenSystem sys = biorthogonal_normalize(eigensystem_at(pencil, lambda, tol), tol);

  json doc;
  doc["lambda"] = to_json(lambda);
  doc["values"] = to_json(sys.values);
  json so = json::array();
  json flags = json::array();
  for (int k = 0; k < sys.size(); ++k) {
    so.push_back(self_orthogonality(sys, k).value);
    flags.push_back(static_cast<bool>(sys.near_defective[static_cast<std::size_t>(k)]));
  }
  doc["self_orthogonality"] = so;
  doc["near_defective"] = flags;
  std::string note;
  try {
    doc["completeness_residual"] = completeness_residual(sys, tol);
  } catch (const DefectivePresent& e) {
    doc["completeness_residual"] = nullptr;
    note = "basis incomplete: a level is self-orthogonal (exceptional point)";
    doc["note"] = note;
  }
  write_json(cfg, "eigs.json", doc);
  out << "eigs: " << sys.size() << " levels at lambda=" << fmt(lambda);
  if (!note.empty()) {
    out << "; near-defective levels present";
  } else {
    out << "; completeness residual " << fmt(doc["completeness_residual"].get<double>());
  }
  out << "\n";
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, const Interval& iv, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  const auto seeds = seed_from_sweep(pencil, {iv.from, iv.to}, iv.steps, tol);
  const auto samples = segment(iv.from, iv.to, iv.steps);
  const ContinuationState state = continue_along(pencil, samples, {}, {}, tol);

  TrackTable table;
  table.leading_names = {"lambda"};
  double min_gap = std::numeric_limits<double>::infinity();
  double min_at = iv.from;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t step = state.sample_index[i];
    table.leading.push_back({samples[i].real()});
    std::vector<cplx> row;
    for (const auto& track : state.tracks) {
      row.push_back(track[step]);
    }
    std::vector<double> sorted;
    for (const auto& v : row) {
      sorted.push_back(v.real());
    }
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
      if (sorted[k + 1] - sorted[k] < min_gap) {
        min_gap = sorted[k + 1] - sorted[k];
        min_at = samples[i].real();
      }
    }
    table.values.push_back(std::move(row));
  }
  write_file_atomic(out_path(cfg, "sweep.csv"), tracks_to_csv(table));

  json list = json::array();
  for (const auto& s : seeds) {
    list.push_back({{"lambda_seed", s.lambda_seed}, {"pair", {s.pair.first, s.pair.second}}, {"gap_at_seed", s.gap_at_seed}});
  }
  json doc = {{"interval", {iv.from, iv.to}},
              {"steps", iv.steps},
              {"gap_functions", pencil.n() - 1},
              {"min_gap", min_gap},
              {"min_gap_lambda", min_at},
              {"seeds", list}};
  write_json(cfg, "seeds.json", doc);
  out << "sweep: " << pencil.n() - 1 << " adjacent gaps scanned, " << seeds.size() << " seeds, min gap "
      << fmt(min_gap) << " at lambda=" << fmt(min_at) << "\n";
  return kOk;
}

int cmd_demo(const RunConfig& cfg, int n, const std::string& file, std::ostream& out) {
  const MatrixPencil pencil = demo_pencil(n, cfg.seed);
  write_file_atomic(out_path(cfg, file), pencil_to_json(pencil));
  out << "demo: n=" << n << " seed=" << cfg.seed << " written to " << out_path(cfg, file) << "\n";
  return kOk;
}

int cmd_find_ep(const RunConfig& cfg, const Interval& iv, bool with_chirality, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  const auto eps = locate_eps(pencil, {iv.from, iv.to}, iv.steps, {}, tol);
  json list = json::array();
  for (const auto& ep : eps) {
    json item = ep_json(ep);
    const PuiseuxFit fit = fit_puiseux(pencil, ep, tol);
    item["puiseux_exponent"] = fit.exponent;
    item["puiseux_coefficient"] = fit.leading_coeff_magnitude;
    if (with_chirality) {
      try {
        item["chirality"] = chirality(pencil, ep, {}, tol).sign;
      } catch (const Error& e) {
        item["chirality"] = nullptr;
        item["chirality_error"] = e.what();
      }
    }
    list.push_back(item);
  }
  write_json(cfg, "eps.json", {{"eps", list}});
  out << "find-ep: " << eps.size() << " exceptional points";
  for (std::size_t i = 0; i < std::min<std::size_t>(eps.size(), 4); ++i) {
    out << (i == 0 ? ": " : ", ") << fmt(eps[i].lambda_c);
  }
  out << (eps.size() > 4 ? ", ..." : "") << "\n";
  return kOk;
}

struct LoopArgs {
  std::string center = "0";
  double radius = 0.1;
  int steps = 512;
  int turns = 1;
  bool clockwise = false;
  std::vector<std::string> known;
};

int cmd_loop(const RunConfig& cfg, const LoopArgs& a, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  LoopPath loop;
  loop.center = parse_complex(a.center);
  loop.radius = a.radius;
  loop.n_steps = a.steps;
  loop.turns = a.turns;
  loop.orientation = a.clockwise ? -1 : 1;
  std::vector<cplx> known;
  for (const auto& k : a.known) {
    known.push_back(parse_complex(k));
  }
  const MonodromyResult m = monodromy(pencil, loop, known, {}, tol);
  const ContinuationState state = continue_along(pencil, loop.samples(), known, {}, tol);
  write_file_atomic(out_path(cfg, "loop_tracks.csv"), tracks_to_csv(state_table(state)));
  json doc = {{"permutation", m.permutation},
              {"signs", m.signs},
              {"loops_to_identity", m.loops_to_identity},
              {"min_overlap", m.min_overlap}};
  write_json(cfg, "loop.json", doc);

  std::ostringstream moved;
  for (std::size_t j = 0; j < m.permutation.size(); ++j) {
    if (m.permutation[j] != static_cast<int>(j) || m.signs[j] != 1) {
      moved << " " << j << "->" << (m.signs[j] < 0 ? "-" : "+") << m.permutation[j];
    }
  }
  out << "loop:" << (moved.str().empty() ? " identity" : moved.str()) << "; order " << m.loops_to_identity
      << "\n";
  return kOk;
}

struct EpArgs {
  std::string ep;
  double offset = 0.5;
  double radius = 1e-3;
  int samples = 8;
};

int cmd_crossing(const RunConfig& cfg, const EpArgs& a, const Interval& iv, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  const ExceptionalPoint ep = refine_ep(pencil, parse_complex(a.ep), tol);
  ContinuationState state;
  const CrossingReport r = classify_crossing(pencil, ep, a.offset, {iv.from, iv.to}, iv.steps, &state, {}, tol);
  write_file_atomic(out_path(cfg, "crossing_tracks.csv"), tracks_to_csv(state_table(state)));
  json doc = {{"ep", ep_json(ep)},
              {"offset", a.offset},
              {"energies_cross", r.energies_cross},
              {"widths_cross", r.widths_cross},
              {"crossing_parameter", r.crossing_parameter},
              {"tracks", {r.tracks.first, r.tracks.second}}};
  write_json(cfg, "crossing.json", doc);
  out << "crossing: offset " << fmt(a.offset) << ": energies " << (r.energies_cross ? "cross" : "avoid")
      << ", widths " << (r.widths_cross ? "cross" : "avoid") << " at t=" << fmt(r.crossing_parameter) << "\n";
  return kOk;
}

struct ReduceArgs {
  std::optional<double> lambda_ref;
  std::optional<std::string> pair;
  std::optional<double> window_from;
  std::optional<double> window_to;
  int window_steps = 400;
};

int cmd_reduce(const RunConfig& cfg, const ReduceArgs& a, const Interval& iv, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  double lambda_ref = 0.0;
  LevelPair pair{0, 1};
  if (a.lambda_ref) {
    lambda_ref = *a.lambda_ref;
    if (a.pair) {
      const cplx p = parse_complex(*a.pair);
      pair = {static_cast<int>(p.real()), static_cast<int>(p.imag())};
      if (pair.second != pair.first + 1 || p.real() != pair.first || p.imag() != pair.second) {
        throw UsageError("--pair must name two adjacent levels, e.g. 3,4");
      }
    } else {
      const EigenSystem sys = eigensystem_at(pencil, lambda_ref, tol);
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k + 1 < sys.size(); ++k) {
        const double gap = std::abs(sys.values[static_cast<std::size_t>(k) + 1] - sys.values[static_cast<std::size_t>(k)]);
        if (gap < best) {
          best = gap;
          pair = {k, k + 1};
        }
      }
    }
  } else {
    const auto seeds = seed_from_sweep(pencil, {iv.from, iv.to}, iv.steps, tol);
    if (seeds.empty()) {
      throw NoFiniteEP("no level repulsion in the sweep interval");
    }
    const auto sharpest = std::min_element(seeds.begin(), seeds.end(), [](const auto& x, const auto& y) {
      return x.gap_at_seed < y.gap_at_seed;
    });
    lambda_ref = sharpest->lambda_seed;
    pair = sharpest->pair;
  }

  const EffectiveTwoLevel eff = extract_effective_params(effective_pencil(pencil, lambda_ref, pair, tol));
  const ClosedFormEps predicted = predict_ep(eff);
  const double scale = std::max(std::abs(predicted.plus.imag()), 1e-6 * (1.0 + std::abs(lambda_ref)));
  const double lo = a.window_from.value_or(lambda_ref - 3.0 * scale);
  const double hi = a.window_to.value_or(lambda_ref + 3.0 * scale);
  const ReductionComparison cmp = compare_reduction(pencil, eff, {lo, hi}, a.window_steps, tol);

  TrackTable table;
  table.leading_names = {"lambda", "line1", "line2"};
  table.value_names = {"full1", "full2", "eff1", "eff2"};
  for (std::size_t i = 0; i < cmp.lambdas.size(); ++i) {
    table.leading.push_back({cmp.lambdas[i], cmp.lines[i][0], cmp.lines[i][1]});
    table.values.push_back({cmp.full[i][0], cmp.full[i][1], cmp.effective[i][0], cmp.effective[i][1]});
  }
  write_file_atomic(out_path(cfg, "reduce_tracks.csv"), tracks_to_csv(table));

  json doc = {{"eps", {eff.params.eps1, eff.params.eps2}},
              {"omega", {eff.params.omega1, eff.params.omega2}},
              {"phi", eff.params.phi},
              {"lambda_ref", to_json(lambda_ref)},
              {"pair", {pair.first, pair.second}},
              {"predicted_ep", {to_json(predicted.plus), to_json(predicted.minus)}},
              {"window", {lo, hi}},
              {"max_deviation", cmp.max_distance},
              {"imaginary_contamination", eff.imaginary_contamination}};
  write_json(cfg, "reduce.json", doc);
  out << "reduce: pair (" << pair.first << "," << pair.second << ") at lambda_ref=" << fmt(lambda_ref)
      << ", predicted EP " << fmt(predicted.plus) << ", max deviation " << fmt(cmp.max_distance) << "\n";
  return kOk;
}

int cmd_chirality(const RunConfig& cfg, const EpArgs& a, std::ostream& out) {
  const Tolerances tol = cfg.tolerances();
  const MatrixPencil pencil = load_input(cfg);
  const ExceptionalPoint ep = refine_ep(pencil, parse_complex(a.ep), tol);
  ChiralityOptions opt;
  opt.samples = a.samples;
  opt.relative_radius = a.radius;
  const ChiralityResult ch = chirality(pencil, ep, opt, tol);
  json doc = chirality_json(ch);
  doc["ep"] = ep_json(ep);
  write_json(cfg, "chirality.json", doc);
  out << "chirality: EP " << fmt(ep.lambda_c) << " ratio " << (ch.sign > 0 ? "+i" : "-i") << ", max deviation "
      << fmt(ch.max_deviation) << "\n";
  return kOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exceptional points of complex-symmetric pencils H0 + lambda H1", "epchiral"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto* pencil_opt = app.add_option("--pencil", cfg.pencil_path, "Pencil JSON file {n, h0, h1}");
  auto* two_level_opt = app.add_option("--two-level", cfg.two_level_path, "Two-level parameter JSON file");
  pencil_opt->excludes(two_level_opt);
  app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  app.add_option("--tol-eig", cfg.tol_eig, "Relative eigen-residual tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol-newton", cfg.tol_newton, "Newton residual tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "Random seed for generated pencils")->capture_default_str();

  std::function<int()> action;

  std::string lambda_text = "0";
  auto* eigs = app.add_subcommand("eigs", "Eigensystem at one lambda");
  eigs->add_option("--lambda", lambda_text, "Complex lambda, e.g. 0.5-1i or 0.5,-1")->capture_default_str();
  eigs->callback([&] { action = [&] { return cmd_eigs(cfg, lambda_text, out); }; });

  Interval sweep_iv;
  auto* sweep = app.add_subcommand("sweep", "Real-axis sweep with repulsion seeds");
  add_interval(sweep, sweep_iv);
  sweep->callback([&] { action = [&] { return cmd_sweep(cfg, sweep_iv, out); }; });

  int demo_n = 10;
  std::string demo_file = "demo_pencil.json";
  auto* demo = app.add_subcommand("demo", "Write a random symmetric pencil");
  demo->add_option("--n", demo_n, "Dimension")->capture_default_str()->check(CLI::Range(2, 1000));
  demo->add_option("--file", demo_file, "File name inside --out")->capture_default_str();
  demo->callback([&] { action = [&] { return cmd_demo(cfg, demo_n, demo_file, out); }; });

  Interval find_iv;
  bool with_chirality = false;
  auto* find = app.add_subcommand("find-ep", "Locate exceptional points from a real sweep");
  add_interval(find, find_iv);
  find->add_flag("--chirality", with_chirality, "Also determine the chirality of every EP");
  find->callback([&] { action = [&] { return cmd_find_ep(cfg, find_iv, with_chirality, out); }; });

  LoopArgs loop_args;
  auto* loop = app.add_subcommand("loop", "Monodromy of a circular loop");
  loop->add_option("--center", loop_args.center, "Loop center")->required();
  loop->add_option("--radius", loop_args.radius, "Loop radius")->capture_default_str()->check(CLI::PositiveNumber);
  loop->add_option("--steps", loop_args.steps, "Samples per turn")->capture_default_str()->check(CLI::Range(64, 1 << 22));
  loop->add_option("--turns", loop_args.turns, "Number of turns")->capture_default_str()->check(CLI::Range(1, 64));
  loop->add_flag("--clockwise", loop_args.clockwise, "Traverse clockwise");
  loop->add_option("--known-ep", loop_args.known, "EP location that the loop must respect (repeatable)");
  loop->callback([&] { action = [&] { return cmd_loop(cfg, loop_args, out); }; });

  EpArgs crossing_args;
  Interval crossing_iv{-2.0, 2.0, 800};
  auto* crossing = app.add_subcommand("crossing", "Energy or width crossing along Im lambda = offset");
  crossing->add_option("--ep", crossing_args.ep, "Approximate EP location")->required();
  crossing->add_option("--offset", crossing_args.offset, "Imaginary part of the path")->capture_default_str();
  add_interval(crossing, crossing_iv);
  crossing->callback([&] { action = [&] { return cmd_crossing(cfg, crossing_args, crossing_iv, out); }; });

  ReduceArgs reduce_args;
  Interval reduce_iv;
  auto* reduce = app.add_subcommand("reduce", "Effective two-level reduction at a repulsion");
  reduce->add_option("--lambda-ref", reduce_args.lambda_ref, "Real reference point (default: sharpest repulsion)");
  reduce->add_option("--pair", reduce_args.pair, "Adjacent level pair a,b (default: closest levels)");
  reduce->add_option("--window-from", reduce_args.window_from, "Comparison window start");
  reduce->add_option("--window-to", reduce_args.window_to, "Comparison window end");
  reduce->add_option("--window-steps", reduce_args.window_steps, "Comparison samples")->capture_default_str()->check(CLI::Range(2, 1 << 20));
  add_interval(reduce, reduce_iv);
  reduce->callback([&] { action = [&] { return cmd_reduce(cfg, reduce_args, reduce_iv, out); }; });

  EpArgs chir_args;
  auto* chir = app.add_subcommand("chirality", "The +-i ratio of the EP state in the coalescing pair");
  chir->add_option("--ep", chir_args.ep, "Approximate EP location")->required();
  chir->add_option("--radius", chir_args.radius, "Sample circle radius relative to 1+|lambda_c|")->capture_default_str()->check(CLI::PositiveNumber);
  chir->add_option("--samples", chir_args.samples, "Samples on the circle")->capture_default_str()->check(CLI::Range(5, 4096));
  chir->callback([&] { action = [&] { return cmd_chirality(cfg, chir_args, out); }; });

  std::vector<const char*> argv{"epchiral"};
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const NonSymmetricInput& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const EmptyInterval& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

} // namespace epchiral::cli
