#include "bitbit/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "bitbit/error.hpp"
#include "bitbit/random.hpp"

namespace bitbit {

namespace {

void check_capacity(std::size_t n_qubits, std::size_t max_qubits) {
  if (n_qubits > max_qubits) {
    throw CapacityError(std::to_string(n_qubits) + " qubits exceed the simulator cap of " +
                        std::to_string(max_qubits));
  }
  if (n_qubits > 40) throw CapacityError("statevector of more than 40 qubits is not addressable");
}

double wrap_angle(double x) {
  double r = std::remainder(x, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// Statevector

Statevector::Statevector(std::size_t n_qubits, std::size_t max_qubits) : n_qubits_(n_qubits) {
  check_capacity(n_qubits, max_qubits);
  amplitudes_.assign(std::size_t{1} << n_qubits, Complex(0.0, 0.0));
  amplitudes_[0] = 1.0;
}

Statevector Statevector::basis(std::size_t n_qubits, std::uint64_t index, std::size_t max_qubits) {
  Statevector s(n_qubits, max_qubits);
  if (index >= s.dimension()) throw Error("basis index out of range");
  s.amplitudes_[0] = 0.0;
  s.amplitudes_[index] = 1.0;
  return s;
}

double Statevector::norm_squared() const {
  double total = 0.0;
  for (const auto& a : amplitudes_) total += std::norm(a);
  return total;
}

void Statevector::apply_ry(std::size_t qubit, double theta) {
  const std::size_t stride = std::size_t{1} << qubit;
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  for (std::size_t base = 0; base < amplitudes_.size(); base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const Complex a = amplitudes_[i];
      const Complex b = amplitudes_[i + stride];
      amplitudes_[i] = c * a - s * b;
      amplitudes_[i + stride] = s * a + c * b;
    }
  }
}

void Statevector::apply_rz(std::size_t qubit, double theta) {
  const std::size_t stride = std::size_t{1} << qubit;
  const Complex down = std::polar(1.0, -theta / 2.0);
  const Complex up = std::polar(1.0, theta / 2.0);
  for (std::size_t base = 0; base < amplitudes_.size(); base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      amplitudes_[i] *= down;
      amplitudes_[i + stride] *= up;
    }
  }
}

void Statevector::apply_x(std::size_t qubit) {
  const std::size_t stride = std::size_t{1} << qubit;
  for (std::size_t base = 0; base < amplitudes_.size(); base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) std::swap(amplitudes_[i], amplitudes_[i + stride]);
  }
}

void Statevector::apply_cnot(std::size_t control, std::size_t target) {
  if (control == target) throw Error("CNOT control and target coincide");
  const std::size_t cmask = std::size_t{1} << control;
  const std::size_t tmask = std::size_t{1} << target;
  for (std::size_t i = 0; i < amplitudes_.size(); ++i) {
    if ((i & cmask) && !(i & tmask)) std::swap(amplitudes_[i], amplitudes_[i | tmask]);
  }
}

void Statevector::apply_permutation(std::span<const std::uint64_t> image) {
  if (image.size() != amplitudes_.size()) throw Error("permutation size does not match the state");
  std::vector<Complex> out(amplitudes_.size(), Complex(0.0, 0.0));
  for (std::size_t i = 0; i < image.size(); ++i) out[image[i]] = amplitudes_[i];
  amplitudes_ = std::move(out);
}

Statevector prepare_basis_state(std::size_t n_qubits, const Bitstring& bits) {
  if (bits.width() != n_qubits) {
    throw DataError("basis state needs " + std::to_string(n_qubits) + " bits, got " +
                    std::to_string(bits.width()));
  }
  Statevector state(n_qubits, n_qubits);
  for (std::size_t q = 0; q < n_qubits; ++q) {
    if (bits.get(q)) state.apply_x(q);
  }
  return state;
}

std::vector<double> class_probabilities(const Statevector& state, std::size_t n_class_qubits) {
  if (n_class_qubits > state.n_qubits()) throw Error("class register larger than the state");
  const std::size_t shift = state.n_qubits() - n_class_qubits;
  std::vector<double> probs(std::size_t{1} << n_class_qubits, 0.0);
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) probs[i >> shift] += std::norm(amps[i]);
  return probs;
}

// ---------------------------------------------------------------------------
// Circuits

Circuit Circuit::hardware_efficient(std::size_t n_qubits, std::size_t layers) {
  Circuit c(n_qubits);
  for (std::size_t layer = 0; layer < layers; ++layer) {
    for (std::size_t q = 0; q < n_qubits; ++q) {
      c.add_ry(q);
      c.add_rz(q);
    }
    if (n_qubits > 1) {
      // Descending order: every CNOT reads its control before that qubit is
      // itself a target, so a layer shifts bits up by one instead of
      // accumulating a running parity.
      for (std::size_t q = n_qubits; q-- > 0;) c.add_cnot(q, (q + 1) % n_qubits);
    }
  }
  return c;
}

std::size_t Circuit::add_ry(std::size_t qubit) {
  if (qubit >= n_qubits_) throw Error("gate qubit out of range");
  gates_.push_back({GateKind::kRy, qubit, 0, parameter_count_});
  return parameter_count_++;
}

std::size_t Circuit::add_rz(std::size_t qubit) {
  if (qubit >= n_qubits_) throw Error("gate qubit out of range");
  gates_.push_back({GateKind::kRz, qubit, 0, parameter_count_});
  return parameter_count_++;
}

void Circuit::add_cnot(std::size_t control, std::size_t target) {
  if (control >= n_qubits_ || target >= n_qubits_ || control == target) {
    throw Error("invalid CNOT qubits");
  }
  gates_.push_back({GateKind::kCnot, target, control, 0});
}

void Circuit::apply(Statevector& state, std::span<const double> theta) const {
  if (state.n_qubits() != n_qubits_) throw Error("circuit and state sizes differ");
  if (theta.size() != parameter_count_) throw Error("parameter vector has the wrong length");
  for (const Gate& g : gates_) {
    switch (g.kind) {
      case GateKind::kRy:
        state.apply_ry(g.target, theta[g.parameter]);
        break;
      case GateKind::kRz:
        state.apply_rz(g.target, theta[g.parameter]);
        break;
      case GateKind::kCnot:
        state.apply_cnot(g.control, g.target);
        break;
    }
  }
}

QuantumModel QuantumModel::hardware_efficient(std::size_t n_data, std::size_t n_class,
                                              std::size_t layers, std::size_t max_qubits) {
  if (n_class < 1) throw Error("a model needs at least one class qubit");
  check_capacity(n_data + n_class, max_qubits);
  QuantumModel m;
  m.n_data = n_data;
  m.n_class = n_class;
  m.layers = layers;
  m.circuit = Circuit::hardware_efficient(n_data + n_class, layers);
  m.theta.assign(m.circuit.parameter_count(), 0.0);
  return m;
}

void randomize_parameters(QuantumModel& model, std::uint64_t seed) {
  Rng rng(seed);
  for (double& t : model.theta) t = wrap_angle((2.0 * rng.uniform01() - 1.0) * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Loss and training

TrainingBatch make_training_batch(const BitstringTable& table, bool uniform_weights) {
  TrainingBatch batch;
  if (table.total() == 0) return batch;
  batch.records.reserve(table.size());
  for (const auto& [z, counts] : table.entries()) {
    std::uint64_t n_z = 0;
    for (auto c : counts) n_z += c;
    const double weight = uniform_weights ? 1.0 / static_cast<double>(table.size())
                                          : static_cast<double>(n_z) / static_cast<double>(table.total());
    batch.records.push_back({z, argmax_label(counts), weight});
  }
  std::sort(batch.records.begin(), batch.records.end(),
            [](const TrainingRecord& a, const TrainingRecord& b) { return a.z < b.z; });
  return batch;
}

namespace {

Statevector input_state(std::size_t n_data, std::size_t n_class, const Bitstring& z) {
  if (z.width() != n_data) {
    throw DataError("input needs " + std::to_string(n_data) + " data bits, got " +
                    std::to_string(z.width()));
  }
  const std::size_t n = n_data + n_class;
  return Statevector::basis(n, z.to_uint(), n);
}

template <typename Apply>
double batch_loss(std::size_t n_data, std::size_t n_class, const TrainingBatch& batch,
                  const Apply& apply) {
  if (batch.records.empty()) throw Error("loss of an empty training batch");
  double hit = 0.0;
  for (const auto& record : batch.records) {
    if (record.target < 0 || static_cast<std::size_t>(record.target) >= (std::size_t{1} << n_class)) {
      throw DataError("training target does not fit in the class register");
    }
    Statevector state = input_state(n_data, n_class, record.z);
    apply(state);
    hit += record.weight * class_probabilities(state, n_class)[static_cast<std::size_t>(record.target)];
  }
  return std::clamp(1.0 - hit, 0.0, 1.0);
}

int argmax(const std::vector<double>& p) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] > p[best]) best = k;
  }
  return static_cast<int>(best);
}

}  // namespace

std::vector<double> output_distribution(const QuantumModel& model, const Bitstring& z) {
  Statevector state = input_state(model.n_data, model.n_class, z);
  model.circuit.apply(state, model.theta);
  return class_probabilities(state, model.n_class);
}

double evaluate_loss(const QuantumModel& model, const TrainingBatch& batch) {
  return batch_loss(model.n_data, model.n_class, batch,
                    [&](Statevector& s) { model.circuit.apply(s, model.theta); });
}

int predict(const QuantumModel& model, const Bitstring& z) {
  return argmax(output_distribution(model, z));
}

StepResult rotosolve_step(QuantumModel& model, const TrainingBatch& batch, std::size_t j) {
  if (j >= model.theta.size()) throw Error("parameter index out of range");
  const double phi = model.theta[j];
  const double at_phi = evaluate_loss(model, batch);
  model.theta[j] = phi + std::numbers::pi / 2.0;
  const double at_plus = evaluate_loss(model, batch);
  model.theta[j] = phi - std::numbers::pi / 2.0;
  const double at_minus = evaluate_loss(model, batch);

  // L(phi + t) = mean + cos_part * cos t + sin_part * sin t
  const double mean = 0.5 * (at_plus + at_minus);
  const double cos_part = at_phi - mean;
  const double sin_part = 0.5 * (at_plus - at_minus);
  if (std::hypot(cos_part, sin_part) < 1e-11) {
    // Flat slice: every angle is a minimiser, so stay put.
    model.theta[j] = phi;
    return {phi, at_phi};
  }
  model.theta[j] = wrap_angle(phi + std::atan2(sin_part, cos_part) + std::numbers::pi);
  return {model.theta[j], evaluate_loss(model, batch)};
}

std::vector<double> train_sweeps(QuantumModel& model, const TrainingBatch& batch,
                                 std::size_t sweeps, const SweepCallback& on_sweep) {
  if (sweeps < 1) throw Error("training needs at least one sweep");
  std::vector<double> history;
  history.reserve(sweeps);
  for (std::size_t sweep = 1; sweep <= sweeps; ++sweep) {
    double loss = model.theta.empty() ? evaluate_loss(model, batch) : 0.0;
    for (std::size_t j = 0; j < model.theta.size(); ++j) loss = rotosolve_step(model, batch, j).loss;
    history.push_back(loss);
    if (on_sweep) on_sweep(sweep, loss);
  }
  return history;
}

// ---------------------------------------------------------------------------
// Exact classifier

BasisPermutation::BasisPermutation(std::size_t n_data, std::size_t n_class,
                                   std::vector<std::uint64_t> image)
    : n_data_(n_data), n_class_(n_class), image_(std::move(image)) {
  if (image_.size() != (std::size_t{1} << (n_data + n_class))) {
    throw Error("permutation size does not match the register");
  }
}

BasisPermutation build_exact_classifier(std::span<const int> classifier, std::size_t n_data,
                                        std::size_t n_class, std::size_t max_qubits) {
  check_capacity(n_data + n_class, max_qubits);
  const std::size_t inputs = std::size_t{1} << n_data;
  const std::size_t classes = std::size_t{1} << n_class;
  if (classifier.size() != inputs) {
    throw Error("classifier must define C(z) for all " + std::to_string(inputs) + " inputs");
  }
  std::vector<std::uint64_t> image(inputs * classes);
  for (std::size_t y = 0; y < classes; ++y) {
    for (std::size_t z = 0; z < inputs; ++z) {
      const int c = classifier[z];
      if (c < 0 || static_cast<std::size_t>(c) >= classes) {
        throw DataError("C(" + std::to_string(z) + ") = " + std::to_string(c) +
                        " does not fit in the class register");
      }
      image[(y << n_data) | z] = ((y ^ static_cast<std::size_t>(c)) << n_data) | z;
    }
  }
  return BasisPermutation(n_data, n_class, std::move(image));
}

std::vector<double> output_distribution(const BasisPermutation& unitary, const Bitstring& z) {
  Statevector state = input_state(unitary.n_data(), unitary.n_class(), z);
  unitary.apply(state);
  return class_probabilities(state, unitary.n_class());
}

double evaluate_loss(const BasisPermutation& unitary, const TrainingBatch& batch) {
  return batch_loss(unitary.n_data(), unitary.n_class(), batch,
                    [&](Statevector& s) { unitary.apply(s); });
}

int predict(const BasisPermutation& unitary, const Bitstring& z) {
  return argmax(output_distribution(unitary, z));
}

nlohmann::json to_json(const QuantumModel& model) {
  return {{"n_x", model.n_data}, {"n_y", model.n_class}, {"layers", model.layers},
          {"theta", model.theta}};
}

QuantumModel quantum_model_from_json(const nlohmann::json& j) {
  QuantumModel m = QuantumModel::hardware_efficient(j.at("n_x").get<std::size_t>(),
                                                    j.at("n_y").get<std::size_t>(),
                                                    j.at("layers").get<std::size_t>());
  auto theta = j.at("theta").get<std::vector<double>>();
  if (theta.size() != m.theta.size()) throw DataError("parameter count does not match the ansatz");
  m.theta = std::move(theta);
  return m;
}

}  // namespace bitbit
