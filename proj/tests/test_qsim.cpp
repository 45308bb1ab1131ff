#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "bitbit/error.hpp"
#include "bitbit/qsim.hpp"
#include "oracles.hpp"

using namespace bitbit;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Complex> random_state(std::size_t n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  std::vector<Complex> v(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& a : v) {
    a = {normal(gen), normal(gen)};
    norm += std::norm(a);
  }
  for (auto& a : v) a /= std::sqrt(norm);
  return v;
}

Statevector load(const std::vector<Complex>& v, std::size_t n) {
  Statevector s(n);
  std::copy(v.begin(), v.end(), s.amplitudes().begin());
  return s;
}

double max_diff(std::span<const Complex> a, const std::vector<Complex>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

// One-record model on N_x = N_y = 1 with a single Ry on the class qubit.
QuantumModel single_ry(double theta) {
  QuantumModel m;
  m.n_data = 1;
  m.n_class = 1;
  m.circuit = Circuit(2);
  m.circuit.add_ry(1);
  m.theta = {theta};
  return m;
}

TrainingBatch batch_of(std::vector<TrainingRecord> records) { return TrainingBatch{std::move(records)}; }

TrainingBatch random_batch(std::size_t n_data, std::size_t n_class, std::mt19937_64& gen) {
  const std::size_t unique = 1 + gen() % (std::size_t{1} << n_data);
  std::set<std::uint64_t> zs;
  while (zs.size() < unique) zs.insert(gen() % (std::uint64_t{1} << n_data));
  TrainingBatch batch;
  for (auto z : zs) {
    batch.records.push_back({Bitstring::from_uint(z, n_data),
                             static_cast<int>(gen() % (std::uint64_t{1} << n_class)),
                             1.0 / static_cast<double>(unique)});
  }
  return batch;
}

QuantumModel random_model(std::mt19937_64& gen, std::size_t& n_data, std::size_t& n_class) {
  n_data = 1 + gen() % 3;
  n_class = 1 + gen() % 2;
  QuantumModel m = QuantumModel::hardware_efficient(n_data, n_class, 1 + gen() % 3);
  randomize_parameters(m, gen());
  return m;
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * kPi)); }

}  // namespace

TEST(statevector, basis_states) {
  const Statevector zero = prepare_basis_state(2, Bitstring::from_string("00"));
  EXPECT_EQ(zero.amplitudes()[0], Complex(1.0, 0.0));
  EXPECT_EQ(zero.norm_squared(), 1.0);
  const Statevector two = prepare_basis_state(2, Bitstring::from_string("10"));
  EXPECT_EQ(two.amplitudes()[2], Complex(1.0, 0.0));
  EXPECT_EQ(two.norm_squared(), 1.0);
  for (std::uint64_t i = 0; i < 32; ++i) {
    const Statevector s = prepare_basis_state(5, Bitstring::from_uint(i, 5));
    EXPECT_EQ(s.amplitudes()[i], Complex(1.0, 0.0));
    EXPECT_EQ(s.norm_squared(), 1.0);
  }
}

TEST(statevector, capacity_is_enforced) {
  EXPECT_THROW(Statevector(21), CapacityError);
  EXPECT_NO_THROW(Statevector(3, 3));
  EXPECT_THROW(Statevector(4, 3), CapacityError);
  EXPECT_THROW(QuantumModel::hardware_efficient(18, 3, 1), CapacityError);
  std::vector<int> c(std::size_t{1} << 5, 0);
  EXPECT_THROW(build_exact_classifier(c, 5, 2, 6), CapacityError);
}

TEST(class_probabilities, basis_uniform_and_random) {
  const Statevector s = Statevector::basis(4, (1u << 2) | 3u);
  EXPECT_EQ(class_probabilities(s, 2), (std::vector<double>{0, 1, 0, 0}));

  Statevector u(4);
  for (auto& a : u.amplitudes()) a = 0.25;
  for (double p : class_probabilities(u, 2)) EXPECT_NEAR(p, 0.25, 1e-15);

  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Statevector r = load(random_state(5, gen), 5);
    double total = 0.0;
    for (double p : class_probabilities(r, 1 + trial % 3)) total += p;
    EXPECT_NEAR(total, 1.0, 1e-10);
  }
}

TEST(gates, match_dense_reference) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + gen() % 4;
    const auto v = random_state(n, gen);
    const std::size_t q = gen() % n;
    const double theta = angle(gen);

    Statevector s = load(v, n);
    s.apply_ry(q, theta);
    EXPECT_LT(max_diff(s.amplitudes(), oracle::apply(oracle::ry_matrix(n, q, theta), v)), 1e-12);

    s = load(v, n);
    s.apply_rz(q, theta);
    EXPECT_LT(max_diff(s.amplitudes(), oracle::apply(oracle::rz_matrix(n, q, theta), v)), 1e-12);

    if (n > 1) {
      const std::size_t t = (q + 1 + gen() % (n - 1)) % n;
      s = load(v, n);
      s.apply_cnot(q, t);
      EXPECT_LT(max_diff(s.amplitudes(), oracle::apply(oracle::cnot_matrix(n, q, t), v)), 1e-15);
    }
    EXPECT_NEAR(s.norm_squared(), 1.0, 1e-12);
  }
}

TEST(circuit, hardware_efficient_layout) {
  const Circuit c = Circuit::hardware_efficient(3, 2);
  EXPECT_EQ(c.parameter_count(), 12u);
  EXPECT_EQ(c.gates().size(), 18u);
  // Ring runs from the top qubit down.
  EXPECT_EQ(c.gates()[6].kind, GateKind::kCnot);
  EXPECT_EQ(c.gates()[6].control, 2u);
  EXPECT_EQ(c.gates()[6].target, 0u);
  EXPECT_EQ(c.gates()[8].control, 0u);
  EXPECT_EQ(c.gates()[8].target, 1u);
  EXPECT_EQ(Circuit::hardware_efficient(1, 3).gates().size(), 6u);
}

TEST(circuit, matches_dense_reference) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + gen() % 3;
    const Circuit c = Circuit::hardware_efficient(n, 1 + gen() % 3);
    std::vector<double> theta(c.parameter_count());
    for (double& t : theta) t = angle(gen);
    auto v = random_state(n, gen);
    Statevector s = load(v, n);
    c.apply(s, theta);
    for (const Gate& g : c.gates()) {
      switch (g.kind) {
        case GateKind::kRy: v = oracle::apply(oracle::ry_matrix(n, g.target, theta[g.parameter]), v); break;
        case GateKind::kRz: v = oracle::apply(oracle::rz_matrix(n, g.target, theta[g.parameter]), v); break;
        case GateKind::kCnot: v = oracle::apply(oracle::cnot_matrix(n, g.control, g.target), v); break;
      }
    }
    EXPECT_LT(max_diff(s.amplitudes(), v), 1e-12);
  }
}

TEST(make_training_batch, weights_and_targets) {
  BitstringTable t(2, 2);
  t.add(Bitstring::from_string("10"), 1, 3);
  t.add(Bitstring::from_string("10"), 0, 1);
  t.add(Bitstring::from_string("01"), 0, 4);
  const TrainingBatch b = make_training_batch(t);
  ASSERT_EQ(b.records.size(), 2u);
  EXPECT_EQ(b.records[0].z.to_string(), "01");
  EXPECT_EQ(b.records[0].target, 0);
  EXPECT_DOUBLE_EQ(b.records[0].weight, 0.5);
  EXPECT_EQ(b.records[1].target, 1);
  EXPECT_DOUBLE_EQ(b.records[1].weight, 0.5);
  for (const auto& r : make_training_batch(t, true).records) EXPECT_DOUBLE_EQ(r.weight, 0.5);
}

TEST(evaluate_loss, identity_at_zero_parameters) {
  const QuantumModel m = QuantumModel::hardware_efficient(2, 1, 1);
  const auto batch = batch_of({{Bitstring::from_string("00"), 0, 1.0}});
  EXPECT_EQ(evaluate_loss(m, batch), 0.0);
}

TEST(evaluate_loss, closed_form_single_rotation) {
  const auto batch = batch_of({{Bitstring::from_string("0"), 1, 1.0}});
  for (double theta = -kPi; theta <= kPi; theta += 0.1) {
    const double s = std::sin(theta / 2.0);
    EXPECT_NEAR(evaluate_loss(single_ry(theta), batch), 1.0 - s * s, 1e-12);
  }
  EXPECT_NEAR(evaluate_loss(single_ry(kPi), batch), 0.0, 1e-15);
}

TEST(evaluate_loss, width_mismatch_fails) {
  const QuantumModel m = QuantumModel::hardware_efficient(2, 1, 1);
  EXPECT_THROW(evaluate_loss(m, batch_of({{Bitstring::from_string("000"), 0, 1.0}})), Error);
  EXPECT_THROW(predict(m, Bitstring::from_string("1")), Error);
}

TEST(rotosolve_step, closed_form_minimum) {
  QuantumModel m = single_ry(0.0);
  const auto batch = batch_of({{Bitstring::from_string("0"), 1, 1.0}});
  const StepResult r = rotosolve_step(m, batch, 0);
  EXPECT_NEAR(angle_gap(r.theta, kPi), 0.0, 1e-12);
  EXPECT_NEAR(r.loss, 0.0, 1e-12);
  EXPECT_EQ(m.theta[0], r.theta);
  EXPECT_GT(r.theta, -kPi);
  EXPECT_LE(r.theta, kPi);
  EXPECT_THROW(rotosolve_step(m, batch, 1), Error);
}

TEST(rotosolve_step, loss_is_sinusoidal_in_each_parameter) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t nd = 0, nc = 0;
    QuantumModel m = random_model(gen, nd, nc);
    const TrainingBatch batch = random_batch(nd, nc, gen);
    const std::size_t j = gen() % m.theta.size();
    std::vector<double> t, y;
    for (int k = 0; k < 5; ++k) {
      m.theta[j] = -kPi + 2.0 * kPi * k / 5.0;
      t.push_back(m.theta[j]);
      y.push_back(evaluate_loss(m, batch));
    }
    EXPECT_LT(oracle::fit_sinusoid(t, y).max_residual, 1e-9);
  }
}

TEST(rotosolve_step, never_increases_and_is_idempotent) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t nd = 0, nc = 0;
    QuantumModel m = random_model(gen, nd, nc);
    const TrainingBatch batch = random_batch(nd, nc, gen);
    const std::size_t j = gen() % m.theta.size();
    const double before = evaluate_loss(m, batch);
    const StepResult first = rotosolve_step(m, batch, j);
    EXPECT_LE(first.loss, before + 1e-10);
    EXPECT_NEAR(first.loss, evaluate_loss(m, batch), 1e-15);
    const StepResult second = rotosolve_step(m, batch, j);
    EXPECT_LT(angle_gap(second.theta, first.theta), 1e-9);
  }
}

TEST(train_sweeps, realizable_single_record) {
  for (std::uint64_t z = 0; z < 4; ++z) {
    for (int target = 0; target < 2; ++target) {
      QuantumModel m = QuantumModel::hardware_efficient(2, 1, 2);
      const auto batch = batch_of({{Bitstring::from_uint(z, 2), target, 1.0}});
      const auto history = train_sweeps(m, batch, 5);
      ASSERT_EQ(history.size(), 5u);
      EXPECT_LT(history.back(), 1e-6) << "z " << z << " target " << target;
    }
  }
}

TEST(train_sweeps, random_starts_converge_on_single_record) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    QuantumModel m = QuantumModel::hardware_efficient(2, 1, 2);
    randomize_parameters(m, seed);
    const auto history = train_sweeps(m, batch_of({{Bitstring::from_string("10"), 1, 1.0}}), 40);
    EXPECT_LT(history.back(), 1e-6) << "seed " << seed;
  }
}

TEST(train_sweeps, history_is_non_increasing) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t nd = 0, nc = 0;
    QuantumModel m = random_model(gen, nd, nc);
    const TrainingBatch batch = random_batch(nd, nc, gen);
    double prev = evaluate_loss(m, batch);
    std::size_t calls = 0;
    const auto history = train_sweeps(m, batch, 4, [&](std::size_t sweep, double) { EXPECT_EQ(sweep, ++calls); });
    EXPECT_EQ(calls, 4u);
    for (double loss : history) {
      EXPECT_LE(loss, prev + 1e-10);
      EXPECT_GE(loss, 0.0);
      EXPECT_LE(loss, 1.0);
      prev = loss;
    }
  }
}

TEST(train_sweeps, zero_sweeps_rejected) {
  QuantumModel m = QuantumModel::hardware_efficient(1, 1, 1);
  EXPECT_THROW(train_sweeps(m, batch_of({{Bitstring::from_string("0"), 0, 1.0}}), 0), Error);
}

TEST(build_exact_classifier, identity_classifier_is_cnot) {
  const std::vector<int> c{0, 1};
  const BasisPermutation p = build_exact_classifier(c, 1, 1);
  std::vector<std::uint64_t> cnot;
  for (std::uint64_t i = 0; i < 4; ++i) cnot.push_back((i & 1) ? i ^ 2u : i);
  EXPECT_EQ(p.image(), cnot);
}

TEST(build_exact_classifier, constant_zero_is_identity) {
  const std::vector<int> c(8, 0);
  const BasisPermutation p = build_exact_classifier(c, 3, 2);
  for (std::uint64_t i = 0; i < p.image().size(); ++i) EXPECT_EQ(p.image()[i], i);
}

TEST(build_exact_classifier, random_classifiers) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nx = 1 + gen() % 5, ny = 1 + gen() % 2;
    std::vector<int> c(std::size_t{1} << nx);
    for (int& k : c) k = static_cast<int>(gen() % (std::uint64_t{1} << ny));
    const BasisPermutation p = build_exact_classifier(c, nx, ny);
    std::vector<bool> hit(std::size_t{1} << (nx + ny), false);
    for (auto img : p.image()) {
      ASSERT_LT(img, hit.size());
      EXPECT_FALSE(hit[img]);
      hit[img] = true;
    }
    TrainingBatch batch;
    for (std::uint64_t z = 0; z < c.size(); ++z) {
      const Bitstring bz = Bitstring::from_uint(z, nx);
      EXPECT_EQ(predict(p, bz), c[z]);
      if (gen() % 2) batch.records.push_back({bz, c[z], 1.0});
    }
    if (batch.records.empty()) batch.records.push_back({Bitstring::from_uint(0, nx), c[0], 1.0});
    for (auto& r : batch.records) r.weight = 1.0 / static_cast<double>(batch.records.size());
    EXPECT_LE(evaluate_loss(p, batch), 1e-12);
  }
}

TEST(build_exact_classifier, rejects_bad_classes) {
  EXPECT_THROW(build_exact_classifier(std::vector<int>{0, 2}, 1, 1), Error);
  EXPECT_THROW(build_exact_classifier(std::vector<int>{0, 1, 1}, 1, 1), Error);
}

TEST(predict, identity_circuit_gives_class_zero) {
  QuantumModel m;
  m.n_data = 3;
  m.n_class = 2;
  m.circuit = Circuit(5);
  for (std::uint64_t z = 0; z < 8; ++z) EXPECT_EQ(predict(m, Bitstring::from_uint(z, 3)), 0);
}

TEST(quantum_model, json_round_trip) {
  QuantumModel m = QuantumModel::hardware_efficient(3, 2, 2);
  randomize_parameters(m, 9);
  for (double t : m.theta) {
    EXPECT_GT(t, -kPi);
    EXPECT_LE(t, kPi);
  }
  const QuantumModel back = quantum_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(back.theta, m.theta);
  EXPECT_EQ(back.layers, 2u);
  for (std::uint64_t z = 0; z < 8; ++z) {
    const Bitstring bz = Bitstring::from_uint(z, 3);
    EXPECT_EQ(output_distribution(back, bz), output_distribution(m, bz));
  }
}
