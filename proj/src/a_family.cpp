#include "stripres/a_family.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stripres/cell_operator.hpp"
#include "stripres/errors.hpp"
#include "stripres/io_util.hpp"
#include "stripres/parallel.hpp"

namespace stripres {

struct HKernel::Impl {
  cplx k2;
  double lambda;
  const MediumSpec* medium;
  ModeBasis nom;
  ModeBasis big;
  MatC conv_big;
  double aliasing_budget;
};

HKernel::HKernel(cplx k2, double lambda, const MediumSpec& medium, const ModeBasis& nominal,
                 int big_margin_n1, double aliasing_budget)
    : impl_(new Impl{k2, lambda, &medium, nominal,
                     ModeBasis{nominal.n1_min - big_margin_n1, nominal.n1_max + big_margin_n1,
                               nominal.n2_min, nominal.n2_max},
                     MatC(), aliasing_budget}) {
  impl_->conv_big = convolution_matrix(medium, EpsPart::eps0, impl_->big);
}

HKernel::~HKernel() = default;
HKernel::HKernel(HKernel&&) noexcept = default;

const ModeBasis& HKernel::nominal() const { return impl_->nom; }
const ModeBasis& HKernel::big() const { return impl_->big; }

MatC HKernel::eval(cplx k1) const {
  const ModeBasis& nom = impl_->nom;
  const ModeBasis& big = impl_->big;
  const cplx k1f = fold_re(k1);
  const int n1n = nom.size1(), n2 = nom.size2(), n1b = big.size1();

  MatC m = -impl_->lambda * impl_->conv_big;
  for (int i = 0; i < big.size(); ++i)
    m(i, i) += symbol(big.m1(i), big.m2(i), k1f, impl_->k2);
  CellSolver solver(std::move(m));

  // Scatter the incoming modulation: column (i1,i2) of the right-hand side has
  // entries phi(2pi(n_nom - n_big) - k1) at rows (j1, i2).
  MatC rminus = modal_modulation(big, nom, -k1f);  // n1b x n1n
  MatC rhs = MatC::Zero(big.size(), nom.size());
  for (int i1 = 0; i1 < n1n; ++i1)
    for (int j1 = 0; j1 < n1b; ++j1)
      for (int i2 = 0; i2 < n2; ++i2)
        rhs(j1 * n2 + i2, i1 * n2 + i2) = rminus(j1, i1);
  MatC u = solver.solve_block(rhs);

  // Aliasing guard: mass of the solved block on the outermost n1 shells of the
  // enlarged basis (modulation leaks along n1 only; n2 is never enlarged).
  double edge = 0, total = 0;
  for (int i = 0; i < big.size(); ++i) {
    auto [n1, n2v] = big.at(i);
    (void)n2v;
    double w = u.row(i).squaredNorm();
    total += w;
    if (n1 == big.n1_min || n1 == big.n1_max) edge += w;
  }
  if (total > 0 && edge / total > impl_->aliasing_budget)
    throw AliasingBudgetExceeded("resolvent kernel: n1-edge mass " +
                                 std::to_string(edge / total) + " exceeds budget");

  MatC rplus = modal_modulation(nom, big, k1f);  // n1n x n1b
  MatC out(nom.size(), nom.size());
  for (int i1 = 0; i1 < n1n; ++i1)
    for (int i2 = 0; i2 < n2; ++i2) {
      Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(nom.size());
      for (int j1 = 0; j1 < n1b; ++j1) acc += rplus(i1, j1) * u.row(j1 * n2 + i2);
      out.row(i1 * n2 + i2) = acc;
    }
  return out / kTwoPi;
}

namespace {

// Deterministic trapezoid over the horizontal segment [-pi,pi] + i*height:
// per-node results land in fixed slots and are reduced in index order.
MatC line_integral(const HKernel& kernel, double height, int q, int threads) {
  const int n = kernel.nominal().size();
  std::vector<MatC> nodes(q);
  parallel_for(q, threads, [&](int j) {
    nodes[j] = kernel.eval(cplx(-kPi + kTwoPi * j / q, height));
  });
  MatC acc = MatC::Zero(n, n);
  for (int j = 0; j < q; ++j) acc += nodes[j];
  return acc * (kTwoPi / q);
}

// Counterclockwise circle integral of the kernel around `center`.
MatC circle_integral(const HKernel& kernel, cplx center, double radius, int q, int threads) {
  const int n = kernel.nominal().size();
  std::vector<MatC> nodes(q);
  parallel_for(q, threads, [&](int t) {
    double th = kTwoPi * t / q;
    cplx w = cplx(0, radius) * std::exp(cplx(0, th)) * (kTwoPi / q);
    nodes[t] = w * kernel.eval(center + radius * std::exp(cplx(0, th)));
  });
  MatC acc = MatC::Zero(n, n);
  for (int t = 0; t < q; ++t) acc += nodes[t];
  return acc;
}

double spectral_norm_of(const MatC& m) { return spectral_norm(m); }

}  // namespace

AFamily assemble_A_direct(cplx k2, double lambda, const MediumSpec& medium,
                          const ModeBasis& basis, double delta0, const QuadratureSpec& quad,
                          const std::vector<PoleRecord>& poles) {
  for (const PoleRecord& p : poles)
    if (std::abs(p.k1.imag() - delta0) < 1e-4)
      throw PoleOnContour("assemble_A_direct: pole within 1e-4 of the shifted segment");

  HKernel kernel(k2, lambda, medium, basis, quad.big_margin_n1, quad.aliasing_budget);
  AFamily fam;
  fam.k2 = k2;
  fam.delta0 = delta0;
  fam.q_line = quad.q_line;
  fam.line_contrib = line_integral(kernel, delta0, quad.q_line, quad.threads);
  if (quad.check_convergence) {
    MatC fine = line_integral(kernel, delta0, 2 * quad.q_line, quad.threads);
    double rel = (fine - fam.line_contrib).norm() / fine.norm();
    if (rel > quad.conv_tol)
      throw QuadratureNotConverged("assemble_A_direct: doubling q_line moves result by " +
                                   std::to_string(rel));
    fam.line_contrib = std::move(fine);
  }
  fam.matrix = fam.line_contrib;
  fam.norm2 = spectral_norm_of(fam.matrix);
  return fam;
}

AFamily assemble_A_deformed(cplx k2, double lambda, const MediumSpec& medium,
                            const ModeBasis& basis, const std::vector<PoleRecord>& qplus,
                            double tau1, const QuadratureSpec& quad) {
  constexpr double r_min = 1e-3;
  for (size_t i = 0; i < qplus.size(); ++i)
    for (size_t j = i + 1; j < qplus.size(); ++j)
      if (cyl_dist(qplus[i].k1, qplus[j].k1) <= 2 * r_min)
        throw PoleTooClose("assemble_A_deformed: q+ poles not isolated");

  HKernel kernel(k2, lambda, medium, basis, quad.big_margin_n1, quad.aliasing_budget);
  AFamily fam;
  fam.k2 = k2;
  fam.tau1 = tau1;
  fam.q_line = quad.q_line;
  fam.q_circle = quad.q_circle;
  fam.line_contrib = line_integral(kernel, tau1, quad.q_line, quad.threads);
  fam.matrix = fam.line_contrib;
  for (const PoleRecord& p : qplus) {
    double dist = std::min(tau1 - p.k1.imag(), p.k1.imag());
    for (const PoleRecord& o : qplus)
      if (&o != &p) dist = std::min(dist, cyl_dist(p.k1, o.k1));
    double r = std::min(0.45 * dist, 0.3);
    if (r < r_min)
      throw PoleTooClose("assemble_A_deformed: residue radius below 1e-3 at pole index " +
                         std::to_string(p.index));
    ResidueContrib contrib;
    contrib.pole_index = p.index;
    contrib.matrix = circle_integral(kernel, p.k1, r, quad.q_circle, quad.threads);
    fam.matrix += contrib.matrix;
    fam.residue_contribs.push_back(std::move(contrib));
  }
  if (quad.check_convergence) {
    MatC fine = line_integral(kernel, tau1, 2 * quad.q_line, quad.threads);
    for (const PoleRecord& p : qplus) {
      double dist = std::min(tau1 - p.k1.imag(), p.k1.imag());
      for (const PoleRecord& o : qplus)
        if (&o != &p) dist = std::min(dist, cyl_dist(p.k1, o.k1));
      fine += circle_integral(kernel, p.k1, std::min(0.45 * dist, 0.3), 2 * quad.q_circle,
                              quad.threads);
    }
    double rel = (fine - fam.matrix).norm() / fine.norm();
    if (rel > quad.conv_tol)
      throw QuadratureNotConverged("assemble_A_deformed: doubling quadrature moves result by " +
                                   std::to_string(rel));
  }
  fam.norm2 = spectral_norm_of(fam.matrix);
  return fam;
}

ModeBasis BasisPolicy::nominal_for(double ell, double tau1) const {
  int k1 = static_cast<int>(std::ceil(ell / kTwoPi)) + n1_margin;
  int k2 = static_cast<int>(std::ceil(tau1 / kTwoPi)) + n2_margin;
  return ModeBasis::symmetric(k1, k2);
}

DecaySweep a_decay_sweep(double re_k2, const std::vector<double>& ells, double lambda,
                         const MediumSpec& medium, const BasisPolicy& policy, double tau1,
                         const QuadratureSpec& quad, std::vector<AFamily>* families) {
  for (size_t i = 0; i + 1 < ells.size(); ++i)
    if (ells[i + 1] <= ells[i]) throw ConfigError("a_decay_sweep: ells must ascend");

  DecaySweep sweep;
  for (double ell : ells) {
    cplx k2(re_k2, kPi / 2 + ell);
    ModeBasis nom = policy.nominal_for(ell, tau1);
    ModeBasis pencil_basis{nom.n1_min - quad.big_margin_n1, nom.n1_max + quad.big_margin_n1,
                           nom.n2_min, nom.n2_max};
    std::vector<PoleRecord> recs = pencil_eigs(k2, lambda, medium, pencil_basis, tau1);
    std::vector<PoleRecord> dedup = dedupe_poles(recs, 5e-4);
    std::vector<PoleRecord> qplus;
    for (const PoleRecord& r : dedup)
      if (r.k1.imag() > 1e-6 && r.k1.imag() < tau1 - 1e-6) qplus.push_back(r);
    AFamily fam = assemble_A_deformed(k2, lambda, medium, nom, qplus, tau1, quad);
    DecayRow row;
    row.ell = ell;
    row.re_k2 = re_k2;
    row.norm2 = fam.norm2;
    row.neumann_bound = std::abs(lambda) * fam.norm2 *
                        spectral_norm(convolution_matrix(medium, EpsPart::eps1, nom));
    sweep.rows.push_back(row);
    sweep.c_empirical = std::max(sweep.c_empirical, ell * fam.norm2);
    if (families) families->push_back(std::move(fam));
  }
  // Least-squares slope of log norm2 against log ell.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(sweep.rows.size());
  for (const DecayRow& r : sweep.rows) {
    double x = std::log(r.ell), y = std::log(r.norm2);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  sweep.slope_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return sweep;
}

const char* fredholm_conclusion_name(FredholmConclusion c) {
  switch (c) {
    case FredholmConclusion::definitely_invertible: return "definitely_invertible";
    case FredholmConclusion::numerically_invertible: return "numerically_invertible";
    case FredholmConclusion::near_singular: return "near_singular";
  }
  return "?";
}

FredholmReport fredholm_report(const AFamily& a, double lambda, const MediumSpec& medium,
                               const ModeBasis& basis) {
  MatC conv1 = convolution_matrix(medium, EpsPart::eps1, basis);
  MatC k = MatC::Identity(basis.size(), basis.size()) - lambda * a.matrix * conv1;
  VecR sv = singular_values(k);
  FredholmReport rep;
  rep.k2 = a.k2;
  rep.sigma_min = sv(sv.size() - 1);
  rep.neumann_bound = std::abs(lambda) * a.norm2 * spectral_norm(conv1);
  if (rep.neumann_bound < 1.0)
    rep.conclusion = FredholmConclusion::definitely_invertible;
  else if (rep.sigma_min >= 1e-3)
    rep.conclusion = FredholmConclusion::numerically_invertible;
  else
    rep.conclusion = FredholmConclusion::near_singular;
  return rep;
}

std::string decay_csv(const DecaySweep& sweep) {
  std::ostringstream os;
  os << "ell,re_k2,norm2,neumann_bound\n";
  for (const DecayRow& r : sweep.rows)
    os << fmt17(r.ell) << ',' << fmt17(r.re_k2) << ',' << fmt17(r.norm2) << ','
       << fmt17(r.neumann_bound) << '\n';
  return os.str();
}

std::string fredholm_csv(const std::vector<FredholmReport>& reports) {
  std::ostringstream os;
  os << "re_k2,im_k2,sigma_min,conclusion\n";
  for (const FredholmReport& r : reports)
    os << fmt17(r.k2.real()) << ',' << fmt17(r.k2.imag()) << ',' << fmt17(r.sigma_min) << ','
       << fredholm_conclusion_name(r.conclusion) << '\n';
  return os.str();
}

}  // namespace stripres
