#pragma once

#include "sobolev/mlp.hpp"

#include <iosfwd>
#include <string>

namespace sobolev::nn {

// Checkpoint format (plain text, stable; doubles printed with 17 significant
// digits so values round-trip bit-exactly):
//
//   sobolev-mlp v1
//   layers <n0> <n1> ... <nk>
//   activation <relu|leaky_relu|tanh|sigmoid>
//   head <linear|log_softmax>
//   leaky_slope <value>
//   tensor w<l> <rows> <cols>
//   <rows*cols doubles, row-major, whitespace separated>
//   tensor b<l> 1 <cols>
//   <cols doubles>
//   ...
//
// Tensors appear in layer order, weight before bias. Loading rejects any
// mismatch between the header and the tensor list.

void save_mlp(std::ostream& out, const Mlp& m);
void save_mlp(const std::string& path, const Mlp& m);
Mlp load_mlp(std::istream& in);
Mlp load_mlp(const std::string& path);

}  // namespace sobolev::nn
