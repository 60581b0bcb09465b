#pragma once

#include <cstdint>
#include <random>

#include "dsn/model/batch_builder.hpp"
#include "dsn/model/config.hpp"
#include "dsn/model/layers.hpp"
#include "dsn/model/params.hpp"

namespace dsn::model {

enum class Mode { kTrain, kEval };

struct ForwardResult {
  Tensor predictions;         // [B]
  AttentionResult attention;  // weights are empty when attention is off
};

// Parameters plus the forward composition:
//   adapters -> category encoder -> concat -> LSTM/gate/GRN -> target
//   attention -> FFN -> MLP([h~ | uid embedding | user features]).
// Dropout draws from the model's own generator and only in train mode.
class DsnModel {
 public:
  DsnModel(const ModelConfig& config, std::uint64_t seed);

  ForwardResult forward(const WindowBatch& batch, Mode mode);

  const ModelConfig& config() const { return config_; }
  DsnParams& params() { return params_; }
  const DsnParams& params() const { return params_; }
  std::mt19937_64& dropout_rng() { return dropout_rng_; }

 private:
  ModelConfig config_;
  DsnParams params_;
  std::mt19937_64 dropout_rng_;
};

}  // namespace dsn::model
