#pragma once

#include <iosfwd>
#include <string>

#include "xslice/dqn/mlp.hpp"

// Text checkpoint of an MLP:
//
//   xslice-mlp 1
//   layers <L>
//   dense <in> <out>
//   <out lines of <in> weights, row-major>
//   <one line of <out> biases>
//   ... repeated per layer
//
// Values are written with 17 significant digits so a reload is exact.
namespace xslice::dqn {

void write_checkpoint(std::ostream& os, const MlpParams& params);
MlpParams read_checkpoint(std::istream& is);

void save_checkpoint(const std::string& path, const MlpParams& params);
MlpParams load_checkpoint(const std::string& path);

}  // namespace xslice::dqn
