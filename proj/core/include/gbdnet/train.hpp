#pragma once

#include <iosfwd>
#include <vector>

#include "gbdnet/model.hpp"
#include "gbdnet/synthetic.hpp"

namespace gbd {

struct TrainStats {
  std::vector<double> epoch_loss;  // mean per-image loss, one entry per epoch
  int images_used = 0;
};

/// Plain SGD over jittered ground-truth proposals. Image order, proposal
/// jitter and roi sampling are all derived from config.seed, so a given
/// (config, dataset) pair always produces the same parameters.
TrainStats train_model(Model& m, const Dataset& ds, std::ostream* log = nullptr);

}  // namespace gbd
