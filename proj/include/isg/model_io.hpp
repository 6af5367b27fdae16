#pragma once

#include <string>

#include "isg/model.hpp"

namespace isg {

// Text model format (JSON): fields n, grid_d (optional), biases, edges
// [{u,v,w}], meta {class,w,q,seed}. Reals are written with 17 significant
// digits so files round-trip bit-exactly.
std::string model_to_string(const IsingModel& model);
void save_model(const IsingModel& model, const std::string& path);
IsingModel model_from_string(const std::string& text);
IsingModel load_model(const std::string& path);

}  // namespace isg
