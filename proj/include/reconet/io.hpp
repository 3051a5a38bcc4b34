#pragma once

#include <string>

#include "reconet/tensor.hpp"

namespace reconet {

// "RCN1" tensor file: magic 'R','C','N','1'; u32 little-endian C, H, W;
// then C*H*W little-endian 32-bit floats in flat (c*H + h)*W + w order.
void write_rcn1(const std::string& path, const Tensor3d& t);
Tensor3d read_rcn1(const std::string& path);

// One "c,h,w,value" line per element, preceded by a header line.
void write_csv(const std::string& path, const Tensor3d& t);

// Binary PGM (P5), min-max normalized to [0,255]; a constant image is
// rendered mid-gray (128). Rows follow the height axis.
void write_pgm(const std::string& path, const MatrixXd& image);

}  // namespace reconet
