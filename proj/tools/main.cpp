// polarscale: density evolution, contraction constants, and exact
// full-rank-ensemble combinatorics for q-ary polar codes on erasure
// channels. Every command is deterministic given --seed; JSON output embeds
// the tool version and the resolved configuration.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "polarscale/bounds.hpp"
#include "polarscale/common.hpp"
#include "polarscale/de.hpp"
#include "polarscale/ensemble.hpp"
#include "polarscale/kernel.hpp"
#include "polarscale/lyapunov.hpp"
#include "polarscale/rng.hpp"

using nlohmann::json;
namespace ps = polarscale;

namespace {

struct Options {
  std::uint64_t seed = 1;
  std::size_t grid_points = ps::lyapunov::kDefaultGridPoints;
  double refine_tol = ps::lyapunov::kDefaultRefineTol;
  std::string format = "json";  // csv | json
  std::string output;            // empty = stdout
  std::string cache_dir;         // rho table cache
};

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      ps::require(file_->good(), "cannot open output file " + path);
    }
  }
  std::ostream& out() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

json base_json(const Options& opt, const std::string& command) {
  json cfg;
  cfg["command"] = command;
  cfg["seed"] = opt.seed;
  cfg["grid_points"] = opt.grid_points;
  cfg["refine_tol"] = opt.refine_tol;
  cfg["format"] = opt.format;
  if (!opt.cache_dir.empty()) cfg["cache_dir"] = opt.cache_dir;
  json root;
  root["version"] = ps::kVersion;
  root["config"] = std::move(cfg);
  return root;
}

json lambda_json(const ps::lyapunov::LambdaReport& rep) {
  json j;
  j["operator"] = rep.op;
  j["beta"] = rep.beta;
  j["lambda"] = rep.lambda;
  j["argmax_x"] = rep.argmax_x;
  j["grid_points"] = rep.grid_points;
  j["refine_tol"] = rep.refine_tol;
  j["grid_lambda"] = rep.grid_lambda;
  j["refined_lambda"] = rep.refined_lambda;
  j["symmetric_search"] = rep.symmetric_search;
  return j;
}

void emit(const Options& opt, Sink& sink, json root) {
  sink.out() << root.dump(2) << '\n';
  (void)opt;
}

// operator selection shared by `lambda` and `ratio-curve`
struct OpSpec {
  std::string op = "rs";  // rs | ensemble | file:<path>
  std::uint32_t q = 2;
  std::uint32_t m = 2;
};

ps::lyapunov::PolarOperator resolve_operator(const OpSpec& spec, const Options& opt) {
  if (spec.op == "rs") return ps::lyapunov::PolarOperator::rs(spec.q);
  if (spec.op == "ensemble")
    return ps::lyapunov::PolarOperator::ensemble_avg(
        ps::ensemble::RhoTable::load_or_build(spec.m, spec.q, opt.cache_dir));
  if (spec.op.rfind("file:", 0) == 0) {
    std::string path = spec.op.substr(5);
    ps::kernel::Kernel k = ps::kernel::load_file(path);
    return ps::lyapunov::PolarOperator::fixed(k, "kernel:" + path);
  }
  throw ps::PreconditionError("unknown --op '" + spec.op + "' (want rs, ensemble, or file:<path>)");
}

int run(int argc, char** argv) {
  CLI::App app{"finite-length scaling toolkit for q-ary polar codes on erasure channels"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--seed", opt.seed, "seed for all stochastic commands")->capture_default_str();
  app.add_option("--grid-points", opt.grid_points, "points per search/sweep grid")
      ->capture_default_str();
  app.add_option("--refine-tol", opt.refine_tol, "golden-section refinement width")
      ->capture_default_str();
  app.add_option("--format", opt.format, "output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_option("--output", opt.output, "write output to this file instead of stdout");
  app.add_option("--cache", opt.cache_dir, "directory for cached rho tables");

  // --- psi ---------------------------------------------------------------
  struct {
    std::uint32_t q = 2, i = 0;
    double x = 0.5;
  } psi_args;
  auto* cmd_psi = app.add_subcommand("psi", "one-step erasure rate psi_i(x)");
  cmd_psi->add_option("--q", psi_args.q)->required();
  cmd_psi->add_option("--i", psi_args.i)->required();
  cmd_psi->add_option("--x", psi_args.x)->required();

  // --- profile -------------------------------------------------------------
  struct {
    std::uint32_t q = 2, n = 1;
    double eps = 0.5;
    std::size_t hist = 0;
  } prof_args;
  auto* cmd_profile = app.add_subcommand("profile", "effective-channel erasure rates after n steps");
  cmd_profile->add_option("--q", prof_args.q)->required();
  cmd_profile->add_option("--n", prof_args.n)->required();
  cmd_profile->add_option("--eps", prof_args.eps)->required();
  cmd_profile->add_option("--hist", prof_args.hist, "emit a histogram with this many bins");

  // --- construct -----------------------------------------------------------
  struct {
    std::uint32_t q = 2, n = 1;
    double eps = 0.5;
    std::uint64_t k = 1;
  } cons_args;
  auto* cmd_construct =
      app.add_subcommand("construct", "pick the k best channels and the union bound");
  cmd_construct->add_option("--q", cons_args.q)->required();
  cmd_construct->add_option("--n", cons_args.n)->required();
  cmd_construct->add_option("--eps", cons_args.eps)->required();
  cmd_construct->add_option("--k", cons_args.k)->required();

  // --- lambda / ratio-curve ------------------------------------------------
  OpSpec op_spec;
  double lam_beta = 0.5;
  std::uint32_t lam_iterate = 0;
  auto* cmd_lambda = app.add_subcommand("lambda", "contraction constant sup (TV)(x)/V(x)");
  cmd_lambda->add_option("--op", op_spec.op, "rs | ensemble | file:<kernel>")
      ->capture_default_str();
  cmd_lambda->add_option("--q", op_spec.q);
  cmd_lambda->add_option("--m", op_spec.m);
  cmd_lambda->add_option("--beta", lam_beta)->required();
  cmd_lambda->add_option("--iterate", lam_iterate, "use V = T^depth (x(1-x))^beta");

  OpSpec curve_spec;
  double curve_beta = 0.5;
  std::uint32_t curve_iterate = 0;
  auto* cmd_curve = app.add_subcommand("ratio-curve", "emit (x, (TV)(x)/V(x)) samples");
  cmd_curve->add_option("--op", curve_spec.op)->capture_default_str();
  cmd_curve->add_option("--q", curve_spec.q);
  cmd_curve->add_option("--m", curve_spec.m);
  cmd_curve->add_option("--beta", curve_beta)->required();
  cmd_curve->add_option("--iterate", curve_iterate);

  // --- bound ----------------------------------------------------------------
  struct {
    std::uint32_t q = 2, n = 1;
    double gamma = 1.0, beta = 0.5, delta = 0.25;
    bool q0_mode = false;
  } bound_args;
  auto* cmd_bound = app.add_subcommand("bound", "finite-length scaling bound / q0 threshold");
  cmd_bound->add_option("--q", bound_args.q);
  cmd_bound->add_option("--n", bound_args.n);
  cmd_bound->add_option("--gamma", bound_args.gamma)->required();
  cmd_bound->add_option("--beta", bound_args.beta);
  cmd_bound->add_option("--delta", bound_args.delta);
  cmd_bound->add_flag("--q0", bound_args.q0_mode, "compute the q0 threshold from gamma, delta");

  // --- mbeta -----------------------------------------------------------------
  double mbeta_beta = 0.5;
  auto* cmd_mbeta = app.add_subcommand("mbeta", "Gaussian constant m(beta)");
  cmd_mbeta->add_option("--beta", mbeta_beta)->required();

  // --- rho -------------------------------------------------------------------
  struct {
    std::uint32_t m = 2, q = 2;
    bool exact = false;
    std::uint64_t mc = 0;
  } rho_args;
  auto* cmd_rho = app.add_subcommand("rho", "ensemble erasure probabilities rho(m,i,d,q)");
  cmd_rho->add_option("--m", rho_args.m)->required();
  cmd_rho->add_option("--q", rho_args.q)->required();
  cmd_rho->add_flag("--exact", rho_args.exact, "exact rational table (default)");
  cmd_rho->add_option("--mc", rho_args.mc, "Monte Carlo estimate with this many trials");

  // --- phibar ------------------------------------------------------------------
  struct {
    std::uint32_t m = 2, q = 2;
    double x = 0.5;
  } phibar_args;
  auto* cmd_phibar = app.add_subcommand("phibar", "averaged one-step map phibar_i(x)");
  cmd_phibar->add_option("--m", phibar_args.m)->required();
  cmd_phibar->add_option("--q", phibar_args.q)->required();
  cmd_phibar->add_option("--x", phibar_args.x)->required();

  // --- lambda-m ------------------------------------------------------------------
  struct {
    std::uint32_t m = 16, q = 2;
    double beta = 0.35;
  } lm_args;
  auto* cmd_lambda_m = app.add_subcommand("lambda-m", "ensemble-average contraction constant");
  cmd_lambda_m->add_option("--m", lm_args.m)->required();
  cmd_lambda_m->add_option("--q", lm_args.q)->required();
  cmd_lambda_m->add_option("--beta", lm_args.beta)->required();

  // --- conjectures -----------------------------------------------------------------
  struct {
    std::vector<std::uint32_t> m_list;
    std::uint32_t q = 2, depth = 1;
    double beta = 0.35;
  } conj_args;
  auto* cmd_conj = app.add_subcommand("conjectures", "concavity check and ln-lambda regression");
  cmd_conj->add_option("--m-list", conj_args.m_list)->required()->delimiter(',');
  cmd_conj->add_option("--q", conj_args.q)->required();
  cmd_conj->add_option("--beta", conj_args.beta)->required();
  cmd_conj->add_option("--depth", conj_args.depth, "levels of gbar to test for concavity");

  // --- check-inequalities -------------------------------------------------------------
  struct {
    std::uint32_t q = 2;
    double beta = 0.5;
  } ineq_args;
  auto* cmd_ineq = app.add_subcommand("check-inequalities", "sweep the contraction-bound inequalities");
  cmd_ineq->add_option("--q", ineq_args.q)->required();
  cmd_ineq->add_option("--beta", ineq_args.beta)->required();

  // --- kernel-profile -----------------------------------------------------------------
  struct {
    std::string file;
    std::uint32_t arikan = 0, vandermonde = 0;
  } kprof_args;
  auto* cmd_kprof =
      app.add_subcommand("kernel-profile", "exact erasure-profile coefficients of a kernel");
  cmd_kprof->add_option("--file", kprof_args.file, "kernel file path");
  cmd_kprof->add_option("--arikan", kprof_args.arikan, "use the 2^levels tensor kernel");
  cmd_kprof->add_option("--vandermonde", kprof_args.vandermonde,
                        "use the q x q Reed-Solomon candidate");

  // --- mc-chain ---------------------------------------------------------------------
  struct {
    std::uint32_t q = 2, n = 1;
    double x0 = 0.5, eta = 0.01;
    std::uint64_t trials = 1000;
  } chain_args;
  auto* cmd_chain = app.add_subcommand("mc-chain", "Monte Carlo polarization chain");
  cmd_chain->add_option("--q", chain_args.q)->required();
  cmd_chain->add_option("--n", chain_args.n)->required();
  cmd_chain->add_option("--x0", chain_args.x0)->required();
  cmd_chain->add_option("--trials", chain_args.trials)->required();
  cmd_chain->add_option("--eta", chain_args.eta)->capture_default_str();

  app.parse(argc, argv);
  Sink sink(opt.output);
  const bool csv = (opt.format == "csv");

  if (cmd_psi->parsed()) {
    double v = ps::de::psi(psi_args.q, psi_args.i, psi_args.x);
    if (csv) {
      sink.out() << "q,i,x,psi\n"
                 << psi_args.q << ',' << psi_args.i << ',' << fmt_real(psi_args.x) << ','
                 << fmt_real(v) << '\n';
    } else {
      json root = base_json(opt, "psi");
      root["config"]["q"] = psi_args.q;
      root["config"]["i"] = psi_args.i;
      root["config"]["x"] = psi_args.x;
      root["psi"] = v;
      root["mean_check"] = ps::de::psi_mean_check(psi_args.q, psi_args.x);
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_profile->parsed()) {
    if (prof_args.hist > 0) {
      auto counts = ps::de::histogram(prof_args.q, prof_args.n, prof_args.eps, prof_args.hist);
      if (csv) {
        sink.out() << "bin_lo,bin_hi,count\n";
        for (std::size_t b = 0; b < counts.size(); ++b)
          sink.out() << fmt_real(static_cast<double>(b) / counts.size()) << ','
                     << fmt_real(static_cast<double>(b + 1) / counts.size()) << ',' << counts[b]
                     << '\n';
      } else {
        json root = base_json(opt, "profile");
        root["config"]["q"] = prof_args.q;
        root["config"]["n"] = prof_args.n;
        root["config"]["eps"] = prof_args.eps;
        root["config"]["hist"] = prof_args.hist;
        root["counts"] = counts;
        emit(opt, sink, root);
      }
    } else if (csv) {
      sink.out() << "index,rate\n";
      ps::de::profile_stream(prof_args.q, prof_args.n, prof_args.eps,
                             [&](std::uint64_t index, double rate) {
                               sink.out() << index << ',' << fmt_real(rate) << '\n';
                             });
    } else {
      auto p = ps::de::profile(prof_args.q, prof_args.n, prof_args.eps);
      json root = base_json(opt, "profile");
      root["config"]["q"] = prof_args.q;
      root["config"]["n"] = prof_args.n;
      root["config"]["eps"] = prof_args.eps;
      root["rates"] = p.rates;
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_construct->parsed()) {
    ps::require(cons_args.k <= ps::de::kMaterializeCap,
                "construct supports k up to " + std::to_string(ps::de::kMaterializeCap));
    auto sel = ps::de::select_channels_stream(cons_args.q, cons_args.n, cons_args.eps,
                                              cons_args.k);
    if (csv) {
      sink.out() << "index\n";
      for (auto idx : sel.indices) sink.out() << idx << '\n';
    } else {
      json root = base_json(opt, "construct");
      root["config"]["q"] = cons_args.q;
      root["config"]["n"] = cons_args.n;
      root["config"]["eps"] = cons_args.eps;
      root["config"]["k"] = cons_args.k;
      root["indices"] = sel.indices;
      root["union_bound"] = sel.union_bound;
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_lambda->parsed()) {
    auto op = resolve_operator(op_spec, opt);
    ps::lyapunov::LyapunovFn v = ps::lyapunov::LyapunovFn::power(lam_beta);
    if (lam_iterate > 0) v = ps::lyapunov::LyapunovFn::iterated(v, op, lam_iterate);
    auto rep = ps::lyapunov::lambda_sup(op, v, opt.grid_points, opt.refine_tol);
    if (csv) {
      sink.out() << "operator,beta,lambda,argmax_x,grid_points,refine_tol\n"
                 << rep.op << ',' << fmt_real(rep.beta) << ',' << fmt_real(rep.lambda) << ','
                 << fmt_real(rep.argmax_x) << ',' << rep.grid_points << ','
                 << fmt_real(rep.refine_tol) << '\n';
    } else {
      json root = base_json(opt, "lambda");
      root["config"]["op"] = op_spec.op;
      root["config"]["beta"] = lam_beta;
      if (lam_iterate > 0) root["config"]["iterate"] = lam_iterate;
      root["report"] = lambda_json(rep);
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_curve->parsed()) {
    auto op = resolve_operator(curve_spec, opt);
    ps::lyapunov::LyapunovFn v = ps::lyapunov::LyapunovFn::power(curve_beta);
    if (curve_iterate > 0) v = ps::lyapunov::LyapunovFn::iterated(v, op, curve_iterate);
    sink.out() << "x,ratio\n";
    const std::size_t g = opt.grid_points;
    for (std::size_t j = 0; j < g; ++j) {
      double x = ps::lyapunov::kBoundaryEps +
                 (1.0 - 2.0 * ps::lyapunov::kBoundaryEps) * static_cast<double>(j) /
                     static_cast<double>(g - 1);
      sink.out() << fmt_real(x) << ',' << fmt_real(ps::lyapunov::contraction_ratio(op, v, x))
                 << '\n';
    }
    return 0;
  }

  if (cmd_bound->parsed()) {
    json root = base_json(opt, "bound");
    root["config"]["gamma"] = bound_args.gamma;
    if (bound_args.q0_mode) {
      root["config"]["delta"] = bound_args.delta;
      double q0 = ps::lyapunov::q0_threshold(bound_args.gamma, bound_args.delta);
      if (csv) {
        sink.out() << "gamma,delta,q0\n"
                   << fmt_real(bound_args.gamma) << ',' << fmt_real(bound_args.delta) << ','
                   << fmt_real(q0) << '\n';
        return 0;
      }
      root["q0"] = q0;
      root["beta"] = bound_args.delta / (2.0 * bound_args.gamma);
    } else {
      root["config"]["q"] = bound_args.q;
      root["config"]["n"] = bound_args.n;
      root["config"]["beta"] = bound_args.beta;
      double b = ps::lyapunov::theorem1_bound(bound_args.q, bound_args.n, bound_args.gamma,
                                              bound_args.beta);
      if (csv) {
        sink.out() << "q,n,gamma,beta,exponent,bound\n"
                   << bound_args.q << ',' << bound_args.n << ',' << fmt_real(bound_args.gamma)
                   << ',' << fmt_real(bound_args.beta) << ','
                   << fmt_real(ps::lyapunov::theorem1_exponent(bound_args.q, bound_args.gamma,
                                                               bound_args.beta))
                   << ',' << fmt_real(b) << '\n';
        return 0;
      }
      root["bound"] = b;
      root["exponent"] =
          ps::lyapunov::theorem1_exponent(bound_args.q, bound_args.gamma, bound_args.beta);
    }
    emit(opt, sink, root);
    return 0;
  }

  if (cmd_mbeta->parsed()) {
    double m = ps::lyapunov::m_beta(mbeta_beta);
    if (csv) {
      sink.out() << "beta,m_beta\n" << fmt_real(mbeta_beta) << ',' << fmt_real(m) << '\n';
    } else {
      json root = base_json(opt, "mbeta");
      root["config"]["beta"] = mbeta_beta;
      root["m_beta"] = m;
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_rho->parsed()) {
    if (rho_args.mc > 0) {
      ps::Rng rng(opt.seed);
      if (csv) sink.out() << "i,d,estimate,std_error\n";
      json rows = json::array();
      for (std::uint32_t i = 0; i < rho_args.m; ++i) {
        ps::Rng stream = rng.stream(i);
        auto ests = ps::ensemble::rho_mc_all_d(rho_args.m, i, rho_args.q, rho_args.mc, stream);
        for (std::uint32_t d = 0; d <= rho_args.m; ++d) {
          if (csv)
            sink.out() << i << ',' << d << ',' << fmt_real(ests[d].value) << ','
                       << fmt_real(ests[d].std_error) << '\n';
          else
            rows.push_back({{"i", i},
                            {"d", d},
                            {"estimate", ests[d].value},
                            {"std_error", ests[d].std_error}});
        }
      }
      if (!csv) {
        json root = base_json(opt, "rho");
        root["config"]["m"] = rho_args.m;
        root["config"]["q"] = rho_args.q;
        root["config"]["mc_trials"] = rho_args.mc;
        root["estimates"] = rows;
        emit(opt, sink, root);
      }
    } else {
      // exact table in the cache file format: "m q", then "i d num/den"
      auto table =
          ps::ensemble::RhoTable::load_or_build(rho_args.m, rho_args.q, opt.cache_dir);
      table.store(sink.out());
    }
    return 0;
  }

  if (cmd_phibar->parsed()) {
    auto table =
        ps::ensemble::RhoTable::load_or_build(phibar_args.m, phibar_args.q, opt.cache_dir);
    if (csv) sink.out() << "i,phibar\n";
    json rows = json::array();
    for (std::uint32_t i = 0; i < phibar_args.m; ++i) {
      double v = ps::ensemble::phi_bar(table, i, phibar_args.x);
      if (csv)
        sink.out() << i << ',' << fmt_real(v) << '\n';
      else
        rows.push_back(v);
    }
    if (!csv) {
      json root = base_json(opt, "phibar");
      root["config"]["m"] = phibar_args.m;
      root["config"]["q"] = phibar_args.q;
      root["config"]["x"] = phibar_args.x;
      root["phibar"] = rows;
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_lambda_m->parsed()) {
    auto table = ps::ensemble::RhoTable::load_or_build(lm_args.m, lm_args.q, opt.cache_dir);
    auto rep = ps::lyapunov::lambda_sup(ps::lyapunov::PolarOperator::ensemble_avg(table),
                                        ps::lyapunov::LyapunovFn::power(lm_args.beta),
                                        opt.grid_points, opt.refine_tol);
    if (csv) {
      sink.out() << "m,q,beta,lambda,argmax_x\n"
                 << lm_args.m << ',' << lm_args.q << ',' << fmt_real(lm_args.beta) << ','
                 << fmt_real(rep.lambda) << ',' << fmt_real(rep.argmax_x) << '\n';
    } else {
      json root = base_json(opt, "lambda-m");
      root["config"]["m"] = lm_args.m;
      root["config"]["q"] = lm_args.q;
      root["config"]["beta"] = lm_args.beta;
      root["report"] = lambda_json(rep);
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_conj->parsed()) {
    json root = base_json(opt, "conjectures");
    root["config"]["m_list"] = conj_args.m_list;
    root["config"]["q"] = conj_args.q;
    root["config"]["beta"] = conj_args.beta;
    root["config"]["depth"] = conj_args.depth;
    json concavity = json::array();
    for (std::uint32_t m : conj_args.m_list) {
      auto table = ps::ensemble::RhoTable::load_or_build(m, conj_args.q, opt.cache_dir);
      auto rep = ps::ensemble::check_conjecture1(table, conj_args.beta, conj_args.depth,
                                                 opt.grid_points);
      concavity.push_back({{"m", m},
                           {"concave", rep.concave},
                           {"worst_second_difference", rep.worst_second_difference},
                           {"first_violation_level", rep.first_violation_level}});
    }
    root["concavity"] = concavity;
    if (conj_args.m_list.size() >= 2) {
      auto fit = ps::ensemble::check_conjecture2(conj_args.m_list, conj_args.q, conj_args.beta,
                                                 opt.cache_dir, opt.grid_points,
                                                 opt.refine_tol);
      json reg;
      reg["lambdas"] = fit.lambdas;
      reg["slope"] = fit.slope;
      reg["intercept"] = fit.intercept;
      reg["residuals"] = fit.residuals;
      root["regression"] = reg;
    } else {
      root["regression"] = "needs at least two m values";
    }
    emit(opt, sink, root);
    return 0;
  }

  if (cmd_ineq->parsed()) {
    auto reports =
        ps::lyapunov::check_proof_inequalities(ineq_args.q, ineq_args.beta, opt.grid_points);
    if (csv) {
      sink.out() << "name,min_slack,witness_x,witness_y,pass\n";
      for (const auto& r : reports)
        sink.out() << r.name << ',' << fmt_real(r.min_slack) << ',' << fmt_real(r.witness_x)
                   << ',' << fmt_real(r.witness_y) << ',' << (r.pass ? 1 : 0) << '\n';
    } else {
      json root = base_json(opt, "check-inequalities");
      root["config"]["q"] = ineq_args.q;
      root["config"]["beta"] = ineq_args.beta;
      json rows = json::array();
      bool all_pass = true;
      for (const auto& r : reports) {
        all_pass = all_pass && r.pass;
        rows.push_back({{"name", r.name},
                        {"min_slack", r.min_slack},
                        {"witness_x", r.witness_x},
                        {"witness_y", r.witness_y},
                        {"pass", r.pass}});
      }
      root["inequalities"] = rows;
      root["all_pass"] = all_pass;
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_kprof->parsed()) {
    int sources = (!kprof_args.file.empty()) + (kprof_args.arikan > 0) +
                  (kprof_args.vandermonde > 0);
    ps::require(sources == 1,
                "kernel-profile needs exactly one of --file, --arikan, --vandermonde");
    ps::kernel::Kernel k = !kprof_args.file.empty()
                               ? ps::kernel::load_file(kprof_args.file)
                               : (kprof_args.arikan > 0
                                      ? ps::kernel::arikan_tensor(kprof_args.arikan)
                                      : ps::kernel::vandermonde(kprof_args.vandermonde));
    auto poly = ps::kernel::profile_poly(k);
    if (csv) {
      poly.store_csv(sink.out());
    } else {
      json root = base_json(opt, "kernel-profile");
      if (!kprof_args.file.empty()) root["config"]["file"] = kprof_args.file;
      if (kprof_args.arikan > 0) root["config"]["arikan"] = kprof_args.arikan;
      if (kprof_args.vandermonde > 0) root["config"]["vandermonde"] = kprof_args.vandermonde;
      root["m"] = poly.m();
      root["q"] = poly.q();
      root["coefficients"] = poly.rows();
      root["matches_rs_profile"] = ps::kernel::rs_profile_matches(poly);
      emit(opt, sink, root);
    }
    return 0;
  }

  if (cmd_chain->parsed()) {
    ps::Rng master(opt.seed);
    std::uint64_t inside = 0;
    ps::KahanSum mean;
    for (std::uint64_t t = 0; t < chain_args.trials; ++t) {
      ps::Rng stream = master.stream(t);
      double x = ps::de::sample_chain(chain_args.q, chain_args.n, chain_args.x0, stream);
      mean.add(x);
      if (x >= chain_args.eta && x <= 1.0 - chain_args.eta) ++inside;
    }
    double frac = static_cast<double>(inside) / static_cast<double>(chain_args.trials);
    json root = base_json(opt, "mc-chain");
    root["config"]["q"] = chain_args.q;
    root["config"]["n"] = chain_args.n;
    root["config"]["x0"] = chain_args.x0;
    root["config"]["trials"] = chain_args.trials;
    root["config"]["eta"] = chain_args.eta;
    root["fraction_in_interval"] = frac;
    root["fraction_std_error"] =
        std::sqrt(frac * (1.0 - frac) / static_cast<double>(chain_args.trials));
    root["sample_mean"] = mean.value() / static_cast<double>(chain_args.trials);
    double n_channels = std::pow(static_cast<double>(chain_args.q), chain_args.n);
    if (n_channels <= static_cast<double>(ps::de::kStreamCap))
      root["exact_fraction"] =
          ps::de::interval_fraction(chain_args.q, chain_args.n, chain_args.x0, chain_args.eta,
                                    1.0 - chain_args.eta);
    if (csv) {
      sink.out() << "fraction_in_interval,sample_mean\n"
                 << fmt_real(frac) << ',' << fmt_real(root["sample_mean"].get<double>()) << '\n';
      return 0;
    }
    emit(opt, sink, root);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    try {
      return run(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) return 0;  // --help
      std::cerr << "error: usage: " << e.what() << '\n';
      return 2;
    }
  } catch (const ps::PreconditionError& e) {
    std::cerr << "error: precondition: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 4;
  }
}
