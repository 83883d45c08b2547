#pragma once

#include <vector>

#include "gradcheck.hpp"
#include "signdet/trainer.hpp"

/// 48x48 input, two anchor layers (6x6 and 3x3). Trains in seconds.
inline signdet::ModelConfig small_model_config(int classes = 3) {
  signdet::ModelConfig mc;
  mc.num_classes = classes;
  mc.input_width = 48;
  mc.input_height = 48;
  mc.channels = {4, 8, 12, 16};
  mc.anchors.layers = {{6, 6, {0.3}, {1.0, 2.0, 0.5}}, {3, 3, {0.6}, {1.0, 2.0, 0.5}}};
  mc.anchors.add_interpolated_scale = true;
  return mc;
}

inline std::vector<signdet::TrainingExample> small_dataset(std::size_t n, std::uint64_t seed, int classes = 3,
                                                          int size = 48) {
  std::vector<signdet::TrainingExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(gradcheck_example(signdet::mix_seed(seed, i), classes, size));
  return out;
}

inline signdet::TrainConfig small_train_config(std::uint64_t steps) {
  signdet::TrainConfig tc;
  tc.steps = steps;
  tc.horizon = steps;
  tc.warmup_steps = steps / 20;
  tc.batch_size = 2;
  tc.base_lr = 0.04;
  tc.clip_grad_norm = 5.0;
  tc.log_interval = 100;
  tc.checkpoint_interval = 100;
  return tc;
}
