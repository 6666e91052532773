// Command-line frontend: problem-file ingestion, pipeline orchestration,
// trace and report emission.
//
// Exit codes: 0 success, 2 parse error, 3 criterion failure, 4 divergence,
// 5 size cap exceeded.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "subsum/subsum.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitCriterion = 3;
constexpr int kExitDivergence = 4;
constexpr int kExitSizeCap = 5;

struct RunConfig {
  double tol = 1e-12;
  int max_steps = 0;  // 0: derive from the certificate, else 10000
  double delta = 0.0; // 0: 1e-6 * (1 - r(E))
  long seed = 42;
  long size_cap = subsum::kDefaultTensorCap;
  bool force = false;
  int jobs = 1;
  std::string out_dir = ".";
};

void add_common_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--tol", cfg.tol, "Convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-steps", cfg.max_steps, "Iteration budget (0 = automatic)");
  cmd->add_option("--delta", cfg.delta, "Certificate perturbation (0 = automatic)");
  cmd->add_option("--seed", cfg.seed, "Random seed for sampling reports");
  cmd->add_option("--size-cap", cfg.size_cap, "Tensor dimension cap");
  cmd->add_flag("--force", cfg.force, "Run the iteration even when the criterion fails");
  cmd->add_option("--jobs", cfg.jobs, "Parallel batch width for independent instances")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", cfg.out_dir, "Output directory for emitted files");
}

// SUBSPACE_SUM_OUT takes precedence over --out.
void apply_env_overrides(RunConfig& cfg) {
  if (const char* out = std::getenv("SUBSPACE_SUM_OUT")) cfg.out_dir = out;
  std::filesystem::create_directories(cfg.out_dir);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw subsum::ParseError("cannot open file: " + path);
  return in;
}

void write_matrix_file(const RunConfig& cfg, const std::string& name, const subsum::Matrix& M) {
  std::ofstream out(std::filesystem::path(cfg.out_dir) / name);
  subsum::io::write_matrix(out, M);
  std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / name).string() << "\n";
}

int derived_max_steps(const RunConfig& cfg, const subsum::PerronCertificate* cert) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  if (cert) return 100 * static_cast<int>(std::ceil(1.0 / (1.0 - cert->alpha)));
  return 10000;
}

const char* verdict_name(subsum::Verdict v) {
  switch (v) {
    case subsum::Verdict::criterion_holds: return "criterion_holds";
    case subsum::Verdict::criterion_fails: return "criterion_fails";
    default: return "boundary";
  }
}

struct Analysis {
  subsum::SubspaceSystem system;
  subsum::InteractionMatrix E;
  double radius = 0.0;
  subsum::Verdict verdict = subsum::Verdict::criterion_fails;
};

Analysis analyze_file(const std::string& path) {
  auto in = open_input(path);
  const auto prob = subsum::io::read_subspace_problem(in);
  Analysis a{subsum::io::build_system(prob), subsum::InteractionMatrix(), 0.0,
             subsum::Verdict::criterion_fails};
  if (prob.epsilon_override) {
    a.E = subsum::InteractionMatrix(*prob.epsilon_override);
  } else {
    a.E = subsum::interaction_matrix(a.system);
  }
  if (a.E.n != a.system.size())
    throw subsum::ParseError("epsilon override size does not match the number of subspaces");
  a.radius = subsum::spectral_radius(a.E, 1e-12);
  a.verdict = subsum::criterion_verdict(a.E);
  return a;
}

void print_analysis(const Analysis& a, const RunConfig& cfg) {
  std::cout << "interaction matrix E:\n";
  subsum::io::write_matrix(std::cout, a.E.entries);
  std::cout << "r(E) = " << subsum::io::format_double(a.radius) << "\n";
  std::cout << "minor_test(I-E): " << (subsum::minor_test(a.E) ? "positive" : "not positive")
            << "\n";
  std::cout << "verdict: " << verdict_name(a.verdict) << "\n";

  const auto bs = subsum::block_structure(a.E);
  std::cout << "blocks:";
  for (const auto& block : bs.blocks) {
    std::cout << " {";
    for (std::size_t i = 0; i < block.size(); ++i)
      std::cout << (i ? "," : "") << block[i] + 1;
    std::cout << "}";
  }
  std::cout << "\n";

  if (a.verdict == subsum::Verdict::criterion_holds) {
    for (auto side : {subsum::CertificateSide::row, subsum::CertificateSide::column}) {
      const auto cert = subsum::perron_certificate(a.E, cfg.delta, side);
      std::cout << (side == subsum::CertificateSide::row ? "row" : "column")
                << " certificate: alpha = " << subsum::io::format_double(cert.alpha) << ", w =";
      for (int i = 0; i < cert.w.size(); ++i)
        std::cout << ' ' << subsum::io::format_double(cert.w(i));
      std::cout << "\n";
    }
  } else {
    int total = 0;
    for (const auto& S : a.system.subspaces) total += S.dim();
    subsum::Matrix all(a.system.ambient_dim, total);
    int c = 0;
    for (const auto& S : a.system.subspaces) {
      all.middleCols(c, S.dim()) = S.basis;
      c += S.dim();
    }
    if (subsum::numerical_rank(all) == total)
      std::cout << "note: the criterion is sufficient, not necessary; the concatenated bases "
                   "still have full rank, so the subspaces are linearly independent\n";
  }
}

int run_analyze(const std::string& path, RunConfig cfg) {
  apply_env_overrides(cfg);
  print_analysis(analyze_file(path), cfg);
  return kExitOk;
}

int run_iterate(const std::string& path, RunConfig cfg) {
  apply_env_overrides(cfg);
  const Analysis a = analyze_file(path);
  print_analysis(a, cfg);
  if (a.verdict != subsum::Verdict::criterion_holds && !cfg.force) {
    std::cout << "refusing to iterate: verdict is " << verdict_name(a.verdict)
              << " (use --force to run anyway)\n";
    return kExitCriterion;
  }

  std::optional<subsum::RateBound> part1, part2;
  const subsum::PerronCertificate* steps_cert = nullptr;
  if (a.verdict == subsum::Verdict::criterion_holds) {
    const subsum::Vector norms = subsum::projection_norms(a.system);
    part1 = subsum::RateBound{subsum::perron_certificate(a.E, cfg.delta, subsum::CertificateSide::row),
                              norms, subsum::RateVariant::weighted_inf};
    part2 = subsum::RateBound{
        subsum::perron_certificate(a.E, cfg.delta, subsum::CertificateSide::column), norms,
        subsum::RateVariant::weighted_one};
    steps_cert = &part1->certificate;
  }

  const auto trace =
      subsum::iterate_sum_projection(a.system, cfg.tol, derived_max_steps(cfg, steps_cert));
  {
    std::ofstream csv(std::filesystem::path(cfg.out_dir) / "trace.csv");
    subsum::io::write_trace_csv(csv, trace, part1 ? &*part1 : nullptr, part2 ? &*part2 : nullptr);
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "trace.csv").string() << "\n";
  }
  if (!trace.converged) {
    std::cout << "divergence: gap " << subsum::io::format_double(trace.gaps.back()) << " after "
              << trace.steps << " steps\n";
    return kExitDivergence;
  }
  std::cout << "converged in " << trace.steps << " steps, rank "
            << trace.limit.rank() << "\n";
  write_matrix_file(cfg, "projection.txt", trace.limit.matrix);
  if (part1 && part2) {
    for (const auto* rb : {&*part1, &*part2}) {
      const auto report = subsum::verify_rate_domination(trace, *rb);
      std::cout << (rb->variant == subsum::RateVariant::weighted_inf ? "part 1" : "part 2")
                << " rate bound domination: " << (report.ok ? "holds" : "VIOLATED") << "\n";
    }
  }
  return kExitOk;
}

int run_sharp(const std::string& path, int y_dim, int z_dim, RunConfig cfg) {
  apply_env_overrides(cfg);
  auto in = open_input(path);
  subsum::Matrix M = subsum::io::read_matrix(in);
  subsum::InteractionMatrix E(std::move(M));
  const double r = subsum::spectral_radius(E, 1e-12);
  if (std::abs(r - 1.0) > 1e-10) {
    if (r <= 0.0) throw subsum::PreconditionError("r(E) = 0: the matrix cannot be rescaled to r = 1");
    std::cout << "notice: r(E) = " << subsum::io::format_double(r)
              << ", rescaling input by 1/r(E)\n";
    E = subsum::rescale_to_unit_radius(E);
  }
  const auto ex = subsum::build_sharp_example(E, y_dim, z_dim);

  subsum::Matrix U(E.n, E.n), V(E.n, E.n);
  for (int i = 0; i < E.n; ++i) {
    U.col(i) = ex.u_vectors[i];
    V.col(i) = ex.v_vectors[i];
  }
  write_matrix_file(cfg, "u_vectors.txt", U);
  write_matrix_file(cfg, "v_vectors.txt", V);
  for (int i = 0; i < E.n; ++i)
    write_matrix_file(cfg, "projection_" + std::to_string(i + 1) + ".txt",
                      ex.system.projections[i].matrix);

  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed));
  const auto report = subsum::verify_norm_identities(ex, rng);
  std::cout << "norm identities ||P_i x|| = e_ij ||x||: " << (report.ok ? "verified" : "VIOLATED")
            << " (max pointwise deviation "
            << subsum::io::format_double(report.max_pointwise_deviation)
            << ", max restricted-norm deviation "
            << subsum::io::format_double(report.max_norm_deviation) << ")\n";
  return report.ok ? kExitOk : kExitCriterion;
}

int run_marginal(const std::string& path, RunConfig cfg) {
  apply_env_overrides(cfg);
  auto in = open_input(path);
  const auto prob = subsum::io::read_marginal_problem(in);
  const subsum::MarginalSystem ms(prob.space, prob.partitions);
  const int n = static_cast<int>(ms.partitions.size());

  subsum::Matrix psi = subsum::Matrix::Ones(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) psi(i, j) = subsum::psi_prime(ms.partitions[i], ms.partitions[j], ms.space);
  std::cout << "psi' matrix:\n";
  subsum::io::write_matrix(std::cout, psi);

  const auto E = subsum::interaction_from_psi(ms);
  std::cout << "interaction matrix E = 1 - psi':\n";
  subsum::io::write_matrix(std::cout, E.entries);
  const auto verdict = subsum::criterion_verdict(E);
  std::cout << "r(E) = " << subsum::io::format_double(subsum::spectral_radius(E, 1e-12))
            << "\nverdict: " << verdict_name(verdict) << "\n";

  std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed));
  const int samples = 200;
  for (auto p : {subsum::NormExponent::p1, subsum::NormExponent::p2, subsum::NormExponent::pinf}) {
    const char* pname = p == subsum::NormExponent::p1 ? "1"
                        : p == subsum::NormExponent::p2 ? "2"
                                                        : "inf";
    bool lemma_ok = true, cov_ok = true;
    double exact_norm = -1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const auto lem = subsum::lemma_bound_check(ms.partitions[i], ms.partitions[j], ms.space, p,
                                                   samples, rng);
        lemma_ok = lemma_ok && lem.ok;
        exact_norm = std::max(exact_norm, lem.exact_restricted_norm);
        const auto cov = subsum::covariance_inequality_check(ms.partitions[i], ms.partitions[j],
                                                             ms.space, p, samples, rng);
        cov_ok = cov_ok && cov.ok;
      }
    std::cout << "p = " << pname << ": lemma bound " << (lemma_ok ? "holds" : "VIOLATED")
              << ", covariance bound " << (cov_ok ? "holds" : "VIOLATED");
    if (p == subsum::NormExponent::p2 && exact_norm >= 0.0)
      std::cout << ", exact restricted norm max " << subsum::io::format_double(exact_norm);
    std::cout << "\n";
  }

  if (verdict != subsum::Verdict::criterion_holds) {
    std::cout << "criterion fails: skipping the p = 2 iteration\n";
    return kExitCriterion;
  }
  const auto trace = subsum::marginal_sum_projection(ms, cfg.tol,
                                                     cfg.max_steps > 0 ? cfg.max_steps : 10000);
  {
    std::ofstream csv(std::filesystem::path(cfg.out_dir) / "marginal_trace.csv");
    subsum::io::write_trace_csv(csv, trace);
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "marginal_trace.csv").string()
              << "\n";
  }
  if (!trace.converged) {
    std::cout << "divergence after " << trace.steps << " steps\n";
    return kExitDivergence;
  }
  std::cout << "p = 2 iteration converged in " << trace.steps << " steps, sum dimension "
            << trace.limit.rank() << "\n";
  return kExitOk;
}

int run_tensor(const std::string& path, int m, const std::string& mode, RunConfig cfg) {
  apply_env_overrides(cfg);
  auto in = open_input(path);
  const auto prob = subsum::io::read_subspace_problem(in);
  const auto sys = subsum::io::build_system(prob);

  if (mode == "pairwise") {
    const auto P = subsum::tensor_sum_projection_pairwise(sys, m, cfg.size_cap);
    std::cout << "pairwise construction: P is a projection of rank " << P.rank() << "\n";
    write_matrix_file(cfg, "tensor_projection.txt", P.matrix);
    return kExitOk;
  }

  const auto Em = subsum::tensor_interaction(sys, m);
  std::cout << "tensor interaction matrix E^(m):\n";
  subsum::io::write_matrix(std::cout, Em.entries);
  const auto verdict = subsum::criterion_verdict(Em);
  std::cout << "r(E^(m)) = " << subsum::io::format_double(subsum::spectral_radius(Em, 1e-12))
            << "\nverdict: " << verdict_name(verdict) << "\n";
  if (verdict != subsum::Verdict::criterion_holds && !cfg.force) {
    std::cout << "criterion fails at m = " << m << "\n";
    return kExitCriterion;
  }
  const auto trace = subsum::tensor_sum_projection_E(
      sys, m, cfg.tol, cfg.max_steps > 0 ? cfg.max_steps : 10000, cfg.size_cap);
  {
    std::ofstream csv(std::filesystem::path(cfg.out_dir) / "tensor_trace.csv");
    subsum::io::write_trace_csv(csv, trace);
    std::cout << "wrote " << (std::filesystem::path(cfg.out_dir) / "tensor_trace.csv").string()
              << "\n";
  }
  if (!trace.converged) return kExitDivergence;
  std::cout << "converged in " << trace.steps << " steps, sum dimension " << trace.limit.rank()
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sums of complemented subspaces: spectral criterion, projection iteration, "
               "sharpness and specializations"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string file;
  int y_dim = 1, z_dim = 1, m = 1;
  std::string mode = "E_criterion";

  auto* analyze = app.add_subcommand("analyze", "Interaction matrix, spectral radius, verdict");
  analyze->add_option("file", file, "Subspace problem file")->required();
  add_common_options(analyze, cfg);

  auto* iterate = app.add_subcommand("iterate", "Run I-(I-A)^N to the limit projection");
  iterate->add_option("file", file, "Subspace problem file")->required();
  add_common_options(iterate, cfg);

  auto* sharp = app.add_subcommand("sharp", "Build the sharpness example for r(E) = 1");
  sharp->add_option("file", file, "Matrix file (rows cols + entries)")->required();
  sharp->add_option("--ydim", y_dim, "Dimension of the Y factor")->check(CLI::PositiveNumber);
  sharp->add_option("--zdim", z_dim, "Dimension of the Z factor")->check(CLI::PositiveNumber);
  add_common_options(sharp, cfg);

  auto* marginal = app.add_subcommand("marginal", "psi' pipeline on a finite probability model");
  marginal->add_option("file", file, "Probability-model file")->required();
  add_common_options(marginal, cfg);

  auto* tensor = app.add_subcommand("tensor", "Tensor-power criterion / pairwise construction");
  tensor->add_option("file", file, "Subspace problem file")->required();
  tensor->add_option("-m,--power", m, "Tensor power")->required()->check(CLI::PositiveNumber);
  tensor->add_option("--mode", mode, "E_criterion or pairwise")
      ->check(CLI::IsMember({"E_criterion", "pairwise"}));
  add_common_options(tensor, cfg);

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return run_analyze(file, cfg);
    if (iterate->parsed()) return run_iterate(file, cfg);
    if (sharp->parsed()) return run_sharp(file, y_dim, z_dim, cfg);
    if (marginal->parsed()) return run_marginal(file, cfg);
    if (tensor->parsed()) return run_tensor(file, m, mode, cfg);
  } catch (const subsum::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const subsum::SizeCapError& e) {
    std::cerr << "size cap: " << e.what() << "\n";
    return kExitSizeCap;
  } catch (const subsum::ConvergenceError& e) {
    std::cerr << "no convergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const subsum::PreconditionError& e) {
    std::cerr << "precondition: " << e.what() << "\n";
    return kExitCriterion;
  } catch (const subsum::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCriterion;
  }
  return kExitOk;
}
