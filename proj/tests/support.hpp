#pragma once

#include <memory>
#include <vector>

#include "ofjet/gaussian_model.hpp"
#include "ofjet/model.hpp"

namespace ofjet::testing {

inline std::shared_ptr<const TruncatedGaussianModel> small_model(int cells, bool compact = true, int order = 2)
{
    GaussianModelConfig c = tanh_linear_config();
    c.state_cells = {cells};
    c.compact_observations = compact;
    c.max_order = order;
    c.observation_cells = 400;
    return make_gaussian_model(c);
}

inline std::vector<Observation> observations(const StateSpaceModel& model, const Parameter& theta, int n,
                                             std::uint64_t seed)
{
    return simulate(model, theta, GridMeasure::uniform(model.grid()), n, seed).observations;
}

inline Observation scalar(double y) { return Observation::Constant(1, y); }

}  // namespace ofjet::testing
