#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "nmfalpha/cli.hpp"
#include "nmfalpha/nmf_semi.hpp"
#include "nmfalpha/nmf_unsup.hpp"

namespace nmfa::cli {

namespace {

struct Instance {
  NonNegMatrix x;
  Dense v;
  Dense h;
  SupportMatrix s;
};

NonNegMatrix random_data(std::size_t d, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> value(0.0, 5.0);
  std::bernoulli_distribution zero(0.3);
  Dense x(d, n);
  for (double& e : x.values()) e = zero(rng) ? 0.0 : value(rng);
  return NonNegMatrix::from_dense(std::move(x));
}

SupportMatrix random_support(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick_m(1, n);
  const std::size_t m = pick_m(rng);
  std::uniform_real_distribution<double> alpha(0.0, 2.0);
  std::bernoulli_distribution is_support(0.5);
  std::vector<LinearModel> models(p);
  for (auto& model : models) {
    for (std::size_t t = 0; t < m; ++t) {
      model.labels[t] = is_support(rng) ? 1 : -1;
      if (is_support(rng)) model.alphas[t] = alpha(rng);
    }
    if (model.alphas.empty()) model.alphas[0] = 1.0;
  }
  return build_support_matrix(models, n, m);
}

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> dims(3, 30), cols(4, 40), ranks(1, 6), ps(1, 3);
  const std::size_t d = dims(rng), n = cols(rng), r = ranks(rng), p = ps(rng);
  Instance inst;
  inst.x = random_data(d, n, rng);
  FactorPair f = init_factors(d, n, r, rng());
  inst.v = std::move(f.V);
  inst.h = std::move(f.H);
  inst.s = random_support(n, p, rng);
  return inst;
}

double max_relative_gap(const Dense& a, const Dense& b) {
  double gap = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    const double scale = std::max({std::abs(a.values()[t]), std::abs(b.values()[t]), 1e-300});
    gap = std::max(gap, std::abs(a.values()[t] - b.values()[t]) / scale);
  }
  return gap;
}

void fail(CheckResult& check, std::size_t instance, const std::string& what) {
  if (!check.passed) return;
  check.passed = false;
  std::ostringstream msg;
  msg << "instance " << instance << ": " << what;
  check.detail = msg.str();
}

// Renormalized mixture of the canonical weights with random simplex points.
AuxiliaryWeights perturbed(const AuxiliaryWeights& canonical, std::size_t r, std::size_t nr,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  AuxiliaryWeights w = canonical;
  const auto mix = [&](std::vector<double>& values, std::size_t group) {
    for (std::size_t start = 0; start < values.size(); start += group) {
      double total = 0.0;
      for (std::size_t t = start; t < start + group; ++t) {
        values[t] = 0.5 * values[t] + 0.5 * u(rng);
        total += values[t];
      }
      for (std::size_t t = start; t < start + group; ++t) values[t] /= total;
    }
  };
  mix(w.eta, r);
  mix(w.psi, nr);
  return w;
}

}  // namespace

std::vector<CheckResult> self_checks(std::uint64_t seed, std::size_t instances) {
  std::mt19937_64 rng(seed);
  const auto named = [](const char* name) {
    CheckResult c;
    c.name = name;
    return c;
  };
  CheckResult unsup = named("unsupervised monotonicity");
  CheckResult semi = named("semi-supervised monotonicity");
  CheckResult reduction = named("lambda=0 reduction");
  CheckResult closed = named("closed-form V step");
  CheckResult tight = named("auxiliary bound tight at canonical weights");
  CheckResult bound = named("auxiliary bound above loss");
  const double lambdas[] = {0.0, 0.1, 1.0, 10.0};
  constexpr double kMonotone = 1e-9;

  for (std::size_t t = 0; t < instances; ++t) {
    const Instance inst = random_instance(rng);
    const double lambda = lambdas[t % 4];

    const double before = unsup_loss(inst.x, inst.v, inst.h);
    const FactorPair u = update_unsup(inst.x, inst.v, inst.h);
    const double after = unsup_loss(inst.x, u.V, u.H);
    ++unsup.instances;
    if (after > before + kMonotone * std::abs(before)) fail(unsup, t, "loss increased");

    const double semi_before = semi_loss(inst.x, inst.v, inst.h, inst.s, lambda).total;
    const FactorPair step = update_semi(inst.x, inst.v, inst.h, inst.s, lambda);
    const double semi_after = semi_loss(inst.x, step.V, step.H, inst.s, lambda).total;
    ++semi.instances;
    if (semi_after > semi_before + kMonotone * std::abs(semi_before)) fail(semi, t, "loss increased");

    const FactorPair zero = update_semi(inst.x, inst.v, inst.h, inst.s, 0.0);
    ++reduction.instances;
    if (max_relative_gap(zero.V, u.V) > 1e-12 || max_relative_gap(zero.H, u.H) > 1e-12) {
      fail(reduction, t, "update differs from the unsupervised step");
    }

    const Dense v_closed = closed_form_v_step(inst.x, inst.v, inst.h, inst.s, lambda);
    ++closed.instances;
    if (max_relative_gap(v_closed, step.V) > 1e-10) fail(closed, t, "V blocks differ");

    const AuxiliaryWeights canonical = canonical_weights(inst.x, inst.v, inst.h, inst.s);
    const BoundReport at_canonical =
        auxiliary_bound(inst.x, inst.v, inst.h, inst.s, lambda, canonical);
    ++tight.instances;
    if (std::abs(at_canonical.bound - at_canonical.loss) > 1e-9 * (1.0 + std::abs(at_canonical.loss))) {
      fail(tight, t, "bound differs from loss");
    }
    const AuxiliaryWeights other =
        perturbed(canonical, inst.v.cols(), inst.x.cols() * inst.v.cols(), rng);
    const BoundReport loose = auxiliary_bound(inst.x, inst.v, inst.h, inst.s, lambda, other);
    ++bound.instances;
    if (loose.bound < loose.loss - 1e-9 * (1.0 + std::abs(loose.loss))) fail(bound, t, "bound below loss");
  }
  return {unsup, semi, reduction, closed, tight, bound};
}

}  // namespace nmfa::cli
