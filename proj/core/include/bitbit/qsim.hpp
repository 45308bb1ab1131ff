#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bitbit/bitstring.hpp"
#include "bitbit/coverage.hpp"

namespace bitbit {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultMaxQubits = 20;

// Dense statevector. Basis index bit q is qubit q; for an N_x + N_y register
// the class qubits are the N_y most significant ones, so index = (y << N_x) | z.
class Statevector {
 public:
  explicit Statevector(std::size_t n_qubits, std::size_t max_qubits = kDefaultMaxQubits);

  static Statevector basis(std::size_t n_qubits, std::uint64_t index,
                           std::size_t max_qubits = kDefaultMaxQubits);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t dimension() const { return amplitudes_.size(); }
  std::span<const Complex> amplitudes() const { return amplitudes_; }
  std::span<Complex> amplitudes() { return amplitudes_; }
  double norm_squared() const;

  // exp(-i theta Y / 2)
  void apply_ry(std::size_t qubit, double theta);
  // exp(-i theta Z / 2)
  void apply_rz(std::size_t qubit, double theta);
  void apply_x(std::size_t qubit);
  void apply_cnot(std::size_t control, std::size_t target);
  // |i> -> |image[i]>; image must be a permutation of [0, dimension).
  void apply_permutation(std::span<const std::uint64_t> image);

 private:
  std::size_t n_qubits_;
  std::vector<Complex> amplitudes_;
};

// Basis state |bits>, using X gates on |0...0>.
Statevector prepare_basis_state(std::size_t n_qubits, const Bitstring& bits);

// P_k summed over all basis states whose top n_class_qubits bits equal k.
std::vector<double> class_probabilities(const Statevector& state, std::size_t n_class_qubits);

enum class GateKind { kRy, kRz, kCnot };

struct Gate {
  GateKind kind;
  std::size_t target;
  std::size_t control = 0;    // kCnot only
  std::size_t parameter = 0;  // rotations only
};

// A gate list over a fixed register. Every rotation has its own parameter and
// a Pauli generator, so the loss is a sinusoid in each parameter.
class Circuit {
 public:
  explicit Circuit(std::size_t n_qubits) : n_qubits_(n_qubits) {}

  // Per layer: Ry then Rz on every qubit, then CNOTs i -> (i + 1) mod n for
  // i = n-1 down to 0.
  static Circuit hardware_efficient(std::size_t n_qubits, std::size_t layers);

  std::size_t add_ry(std::size_t qubit);
  std::size_t add_rz(std::size_t qubit);
  void add_cnot(std::size_t control, std::size_t target);

  std::size_t n_qubits() const { return n_qubits_; }
  std::size_t parameter_count() const { return parameter_count_; }
  const std::vector<Gate>& gates() const { return gates_; }

  void apply(Statevector& state, std::span<const double> theta) const;

 private:
  std::size_t n_qubits_;
  std::size_t parameter_count_ = 0;
  std::vector<Gate> gates_;
};

struct QuantumModel {
  std::size_t n_data = 0;   // N_x
  std::size_t n_class = 0;  // N_y
  std::size_t layers = 0;   // 0 for hand-built circuits
  Circuit circuit{0};
  std::vector<double> theta;

  std::size_t n_qubits() const { return n_data + n_class; }

  // Hardware-efficient ansatz with every parameter at zero.
  static QuantumModel hardware_efficient(std::size_t n_data, std::size_t n_class,
                                         std::size_t layers,
                                         std::size_t max_qubits = kDefaultMaxQubits);
};

// Draws every parameter uniformly from (-pi, pi] with a seeded generator.
// All-zero parameters are a stationary point of every coordinate slice, so
// coordinate descent started there never moves.
void randomize_parameters(QuantumModel& model, std::uint64_t seed);

struct TrainingRecord {
  Bitstring z;
  int target = 0;
  double weight = 0.0;
};

// One record per distinct z with its majority label as target.
struct TrainingBatch {
  std::vector<TrainingRecord> records;
};

// Weights are f(z) = count(z) / total, or 1 / #unique when uniform_weights.
// Records are ordered by z.
TrainingBatch make_training_batch(const BitstringTable& table, bool uniform_weights = false);

// Output class distribution for |0...0>|z>.
std::vector<double> output_distribution(const QuantumModel& model, const Bitstring& z);

// 1 - sum_z f(z) P_{C(z), z}
double evaluate_loss(const QuantumModel& model, const TrainingBatch& batch);

// argmax of the output class distribution, smallest class on ties.
int predict(const QuantumModel& model, const Bitstring& z);

struct StepResult {
  double theta = 0.0;
  double loss = 0.0;
};

// Exact minimisation of the loss along parameter j from three evaluations at
// theta_j and theta_j +/- pi/2. The new angle is wrapped to (-pi, pi].
StepResult rotosolve_step(QuantumModel& model, const TrainingBatch& batch, std::size_t j);

// Called after each sweep with the sweep index (1-based) and the loss.
using SweepCallback = std::function<void(std::size_t, double)>;

// Cycles rotosolve_step over all parameters in index order; returns the loss
// after each sweep.
std::vector<double> train_sweeps(QuantumModel& model, const TrainingBatch& batch,
                                 std::size_t sweeps, const SweepCallback& on_sweep = {});

// The reversible oracle |y>|z> -> |y xor C(z)>|z> as a basis permutation.
class BasisPermutation {
 public:
  BasisPermutation(std::size_t n_data, std::size_t n_class, std::vector<std::uint64_t> image);

  std::size_t n_data() const { return n_data_; }
  std::size_t n_class() const { return n_class_; }
  std::size_t n_qubits() const { return n_data_ + n_class_; }
  const std::vector<std::uint64_t>& image() const { return image_; }

  void apply(Statevector& state) const { state.apply_permutation(image_); }

 private:
  std::size_t n_data_;
  std::size_t n_class_;
  std::vector<std::uint64_t> image_;
};

// `classifier[z]` is C(z) for every z in [0, 2^n_data).
BasisPermutation build_exact_classifier(std::span<const int> classifier, std::size_t n_data,
                                        std::size_t n_class,
                                        std::size_t max_qubits = kDefaultMaxQubits);

std::vector<double> output_distribution(const BasisPermutation& unitary, const Bitstring& z);
double evaluate_loss(const BasisPermutation& unitary, const TrainingBatch& batch);
int predict(const BasisPermutation& unitary, const Bitstring& z);

nlohmann::json to_json(const QuantumModel& model);
QuantumModel quantum_model_from_json(const nlohmann::json& j);

}  // namespace bitbit
