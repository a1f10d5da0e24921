#include "xslice/dqn/checkpoint.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace xslice::dqn {

void write_checkpoint(std::ostream& os, const MlpParams& params) {
  os << "xslice-mlp 1\n";
  os << "layers " << params.layers.size() << '\n';
  os << std::setprecision(17);
  for (const auto& l : params.layers) {
    os << "dense " << l.in << ' ' << l.out << '\n';
    for (int o = 0; o < l.out; ++o) {
      for (int i = 0; i < l.in; ++i) {
        if (i) os << ' ';
        os << l.weights[static_cast<std::size_t>(o) * l.in + i];
      }
      os << '\n';
    }
    for (int o = 0; o < l.out; ++o) {
      if (o) os << ' ';
      os << l.bias[o];
    }
    os << '\n';
  }
}

MlpParams read_checkpoint(std::istream& is) {
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "xslice-mlp" || version != 1) {
    throw std::runtime_error("checkpoint: bad header");
  }
  std::size_t count = 0;
  if (!(is >> tag >> count) || tag != "layers") throw std::runtime_error("checkpoint: bad layer count");
  MlpParams p;
  for (std::size_t k = 0; k < count; ++k) {
    DenseLayer l;
    if (!(is >> tag >> l.in >> l.out) || tag != "dense") {
      throw std::runtime_error("checkpoint: bad layer header");
    }
    l.weights.resize(static_cast<std::size_t>(l.in) * l.out);
    l.bias.resize(static_cast<std::size_t>(l.out));
    for (auto& w : l.weights) {
      if (!(is >> w)) throw std::runtime_error("checkpoint: truncated weights");
    }
    for (auto& b : l.bias) {
      if (!(is >> b)) throw std::runtime_error("checkpoint: truncated bias");
    }
    p.layers.push_back(std::move(l));
  }
  p.validate();
  return p;
}

void save_checkpoint(const std::string& path, const MlpParams& params) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(os, params);
}

MlpParams load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read checkpoint " + path);
  return read_checkpoint(is);
}

}  // namespace xslice::dqn
