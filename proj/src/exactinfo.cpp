#include "fcl/exactinfo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

namespace fcl::exactinfo {
namespace {

double total_of(const std::vector<double>& v) {
  // Kahan summation keeps the normalization check honest on 64^3 tables.
  double sum = 0.0;
  double comp = 0.0;
  for (double x : v) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void check_sizes(std::size_t n1, std::size_t n2, std::size_t ny) {
  for (std::size_t n : {n1, n2, ny}) {
    if (n == 0 || n > kMaxAlphabet) {
      throw UsageError("DiscreteJoint: alphabet sizes must be in [1, 64]");
    }
  }
}

// Marginal table over `vars`, keyed by the packed outcome index.
std::vector<double> marginal(const DiscreteJoint& joint, VarSet vars) {
  const auto [n1, n2, ny] = joint.sizes();
  const std::size_t s1 = (vars & kX1) ? n1 : 1;
  const std::size_t s2 = (vars & kX2) ? n2 : 1;
  const std::size_t sy = (vars & kY) ? ny : 1;
  std::vector<double> m(s1 * s2 * sy, 0.0);
  for (std::size_t a = 0; a < n1; ++a) {
    for (std::size_t b = 0; b < n2; ++b) {
      for (std::size_t c = 0; c < ny; ++c) {
        const std::size_t ia = (vars & kX1) ? a : 0;
        const std::size_t ib = (vars & kX2) ? b : 0;
        const std::size_t ic = (vars & kY) ? c : 0;
        m[(ia * s2 + ib) * sy + ic] += joint.p(a, b, c);
      }
    }
  }
  return m;
}

double entropy_of(const std::vector<double>& m) {
  double h = 0.0;
  for (double p : m) {
    if (p > 0.0) h -= p * std::log(p);
  }
  // A point mass summing to 1 + ulp would otherwise report -1e-16.
  return std::max(h, 0.0);
}

void check_disjoint(VarSet a, VarSet b) {
  if ((a & b) != 0U) throw UsageError("information query: variable subsets overlap");
}

void check_nonempty(VarSet s) {
  if ((s & 7U) == 0U) throw UsageError("information query: empty variable subset");
  if ((s & ~7U) != 0U) throw UsageError("information query: unknown variable bit");
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::size_t n1, std::size_t n2, std::size_t ny,
                             std::vector<double> prob)
    : n1_(n1), n2_(n2), ny_(ny), prob_(std::move(prob)) {
  check_sizes(n1, n2, ny);
  if (prob_.size() != n1 * n2 * ny) {
    throw UsageError("DiscreteJoint: expected " + std::to_string(n1 * n2 * ny) +
                     " probabilities, got " + std::to_string(prob_.size()));
  }
  for (double p : prob_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw UsageError("DiscreteJoint: negative or non-finite entry");
  }
  const double sum = total_of(prob_);
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream os;
    os.precision(17);
    os << "DiscreteJoint: probabilities sum to " << sum << ", not 1";
    throw UsageError(os.str());
  }
}

DiscreteJoint DiscreteJoint::parse(std::istream& is) {
  std::string line;
  std::size_t line_no = 0;
  auto next_content_line = [&](std::string& out) {
    while (std::getline(is, out)) {
      ++line_no;
      const auto pos = out.find_first_not_of(" \t\r");
      if (pos == std::string::npos || out[pos] == '#') continue;
      return true;
    }
    return false;
  };
  auto fail = [&](const std::string& what) -> DiscreteJoint {
    throw UsageError("joint table, line " + std::to_string(line_no) + ": " + what);
  };

  if (!next_content_line(line)) fail("missing header '|X1| |X2| |Y|'");
  std::istringstream header(line);
  std::size_t n1 = 0, n2 = 0, ny = 0;
  std::string extra;
  if (!(header >> n1 >> n2 >> ny) || (header >> extra)) fail("header must be three counts");
  if (n1 == 0 || n2 == 0 || ny == 0 || n1 > kMaxAlphabet || n2 > kMaxAlphabet || ny > kMaxAlphabet) {
    fail("alphabet sizes must be in [1, 64]");
  }
  std::vector<double> prob;
  prob.reserve(n1 * n2 * ny);
  while (next_content_line(line)) {
    std::istringstream row(line);
    double p = 0.0;
    if (!(row >> p) || (row >> extra)) fail("expected a single probability, got '" + line + "'");
    if (!(p >= 0.0) || !std::isfinite(p)) fail("probability must be finite and nonnegative");
    if (prob.size() == n1 * n2 * ny) fail("more entries than |X1|·|X2|·|Y|");
    prob.push_back(p);
  }
  if (prob.size() != n1 * n2 * ny) {
    fail("expected " + std::to_string(n1 * n2 * ny) + " entries, found " + std::to_string(prob.size()));
  }
  const double sum = total_of(prob);
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os.precision(17);
    os << "probabilities sum to " << sum << ", not 1";
    fail(os.str());
  }
  for (double& p : prob) p /= sum;
  const double resum = total_of(prob);
  if (std::abs(resum - 1.0) > 1e-12) fail("table cannot be normalized");
  return DiscreteJoint(n1, n2, ny, std::move(prob));
}

DiscreteJoint DiscreteJoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open joint table '" + path + "'");
  return parse(in);
}

double entropy(const DiscreteJoint& joint, VarSet vars) {
  check_nonempty(vars);
  return entropy_of(marginal(joint, vars));
}

double mutual_information(const DiscreteJoint& joint, VarSet a, VarSet b) {
  check_nonempty(a);
  check_nonempty(b);
  check_disjoint(a, b);
  const double mi = entropy(joint, a) + entropy(joint, b) - entropy(joint, a | b);
  return std::max(mi, 0.0);
}

double conditional_mi(const DiscreteJoint& joint, VarSet a, VarSet b, VarSet c) {
  check_nonempty(a);
  check_nonempty(b);
  check_nonempty(c);
  check_disjoint(a, b);
  check_disjoint(a, c);
  check_disjoint(b, c);
  // I(A;B|C) = H(A,C) + H(B,C) − H(A,B,C) − H(C)
  const double cmi = entropy(joint, a | c) + entropy(joint, b | c) - entropy(joint, a | b | c) -
                     entropy(joint, c);
  return std::max(cmi, 0.0);
}

double interaction_information(const DiscreteJoint& joint) {
  return mutual_information(joint, kX1, kX2) - conditional_mi(joint, kX1, kX2, kY);
}

Decomposition decompose(const DiscreteJoint& joint) {
  Decomposition d;
  d.total = mutual_information(joint, kX1 | kX2, kY);
  d.shared = interaction_information(joint);
  d.unique1 = conditional_mi(joint, kX1, kY, kX2);
  d.unique2 = conditional_mi(joint, kX2, kY, kX1);
  d.residual = d.total - (d.shared + d.unique1 + d.unique2);
  d.h_y = entropy(joint, kY);
  return d;
}

double bayes_error_bound(double info_nats, double h_y_nats) {
  if (h_y_nats < 0.0) throw UsageError("bayes_error_bound: H(Y) must be nonnegative");
  return std::clamp(1.0 - std::exp(info_nats - h_y_nats), 0.0, 1.0);
}

double bayes_error_exact(const DiscreteJoint& joint) {
  const auto [n1, n2, ny] = joint.sizes();
  double correct = 0.0;
  for (std::size_t a = 0; a < n1; ++a) {
    for (std::size_t b = 0; b < n2; ++b) {
      double best = 0.0;
      for (std::size_t c = 0; c < ny; ++c) best = std::max(best, joint.p(a, b, c));
      correct += best;
    }
  }
  return std::clamp(1.0 - correct, 0.0, 1.0);
}

DiscreteJoint random_joint(std::size_t n1, std::size_t n2, std::size_t ny, double alpha, Rng& rng) {
  check_sizes(n1, n2, ny);
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> prob(n1 * n2 * ny);
  for (double& p : prob) p = gamma(rng.engine());
  double sum = total_of(prob);
  if (sum <= 0.0) {
    prob.assign(prob.size(), 1.0);
    sum = static_cast<double>(prob.size());
  }
  for (double& p : prob) p /= sum;
  return DiscreteJoint(n1, n2, ny, std::move(prob));
}

DiscreteJoint xor_joint() {
  std::vector<double> prob(8, 0.0);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) prob[(a * 2 + b) * 2 + (a ^ b)] = 0.25;
  }
  return DiscreteJoint(2, 2, 2, std::move(prob));
}

DiscreteJoint copy_joint() {
  std::vector<double> prob(8, 0.0);
  prob[0] = 0.5;
  prob[7] = 0.5;
  return DiscreteJoint(2, 2, 2, std::move(prob));
}

}  // namespace fcl::exactinfo
