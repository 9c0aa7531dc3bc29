#include <stdexcept>

#include "milb/benchmarks.hpp"

namespace milb {

std::shared_ptr<const Simulator> make_simulator(const std::string& id) {
  if (id == "multimodal") return std::make_shared<MultimodalSystem>();
  if (id == "double_well") return std::make_shared<DoubleWellSystem>();
  if (id == "ternary") return std::make_shared<TernarySystem>();
  throw std::invalid_argument("unknown benchmark '" + id + "' (expected multimodal|double_well|ternary)");
}

double oracle_nll(const Simulator& sim, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  if (inputs.cols() == 0 || inputs.cols() != targets.cols())
    throw std::invalid_argument("oracle_nll: need a nonempty, aligned test set");
  double total = 0.0;
  for (Eigen::Index s = 0; s < inputs.cols(); ++s) {
    const auto mix = sim.oracle(std::span<const double>(inputs.col(s).data(), static_cast<std::size_t>(inputs.rows())));
    if (!mix) throw std::logic_error("oracle_nll: " + sim.name() + " has no closed-form density");
    total -= log_pdf(*mix, std::span<const double>(targets.col(s).data(), static_cast<std::size_t>(targets.rows())));
  }
  return total / static_cast<double>(inputs.cols());
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sample_dataset(const Simulator& sim, std::size_t n,
                                                           const RngStream& stream) {
  RngStream input_stream = stream.split(0);
  const RngStream label_stream = stream.split(1);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(sim.input_dim()), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd y(static_cast<Eigen::Index>(sim.output_dim()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) x.col(static_cast<Eigen::Index>(i)) = sim.sample_input(input_stream);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream s = label_stream.split(i);
    const auto col = static_cast<Eigen::Index>(i);
    y.col(col) = sim.simulate(std::span<const double>(x.col(col).data(), static_cast<std::size_t>(x.rows())), s);
  }
  return {std::move(x), std::move(y)};
}

LabeledPool::LabeledPool(std::shared_ptr<const Simulator> sim, Eigen::MatrixXd pool_inputs, Eigen::MatrixXd test_inputs,
                         Eigen::MatrixXd test_targets, RngStream label_stream)
    : sim_(std::move(sim)),
      pool_inputs_(std::move(pool_inputs)),
      test_inputs_(std::move(test_inputs)),
      test_targets_(std::move(test_targets)),
      label_stream_(label_stream),
      mask_(static_cast<std::size_t>(pool_inputs_.cols()), 0) {}

std::vector<std::size_t> LabeledPool::unlabeled() const {
  std::vector<std::size_t> out;
  out.reserve(pool_size() - labeled_.size());
  for (std::size_t i = 0; i < mask_.size(); ++i)
    if (!mask_[i]) out.push_back(i);
  return out;
}

void LabeledPool::label(std::span<const std::size_t> indices) {
  for (std::size_t index : indices) {
    if (index >= pool_size()) throw std::out_of_range("LabeledPool::label: index out of range");
    if (mask_[index]) throw std::invalid_argument("LabeledPool::label: index " + std::to_string(index) + " already labeled");
    RngStream s = label_stream_.split(index);
    const auto col = static_cast<Eigen::Index>(index);
    labels_.push_back(sim_->simulate(
        std::span<const double>(pool_inputs_.col(col).data(), static_cast<std::size_t>(pool_inputs_.rows())), s));
    labeled_.push_back(index);
    mask_[index] = 1;
  }
}

Eigen::MatrixXd LabeledPool::labeled_inputs() const {
  Eigen::MatrixXd x(pool_inputs_.rows(), static_cast<Eigen::Index>(labeled_.size()));
  for (std::size_t i = 0; i < labeled_.size(); ++i)
    x.col(static_cast<Eigen::Index>(i)) = pool_inputs_.col(static_cast<Eigen::Index>(labeled_[i]));
  return x;
}

Eigen::MatrixXd LabeledPool::labeled_targets() const {
  Eigen::MatrixXd y(static_cast<Eigen::Index>(sim_->output_dim()), static_cast<Eigen::Index>(labeled_.size()));
  for (std::size_t i = 0; i < labels_.size(); ++i) y.col(static_cast<Eigen::Index>(i)) = labels_[i];
  return y;
}

LabeledPool make_pool(std::shared_ptr<const Simulator> sim, std::size_t pool_size, std::size_t test_size,
                      std::size_t init_size, const RngStream& master) {
  if (!sim) throw std::invalid_argument("make_pool: null simulator");
  if (pool_size == 0 || test_size == 0 || init_size == 0 || init_size > pool_size)
    throw std::invalid_argument("make_pool: sizes must be positive with init_size <= pool_size");
  RngStream pool_stream = master.split(1);
  Eigen::MatrixXd pool(static_cast<Eigen::Index>(sim->input_dim()), static_cast<Eigen::Index>(pool_size));
  for (std::size_t i = 0; i < pool_size; ++i) pool.col(static_cast<Eigen::Index>(i)) = sim->sample_input(pool_stream);
  auto [test_x, test_y] = sample_dataset(*sim, test_size, master.split(2));
  LabeledPool out(sim, std::move(pool), std::move(test_x), std::move(test_y), master.split(3));
  std::vector<std::size_t> initial(init_size);
  for (std::size_t i = 0; i < init_size; ++i) initial[i] = i;
  out.label(initial);
  return out;
}

}  // namespace milb
