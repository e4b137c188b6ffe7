#pragma once

#include <cstdint>
#include <string>

namespace mixq {

// One convolution layer of a network description. activation_count is
// the number of input activation elements the layer consumes (usually
// h * w * c_in); weight_count the number of weight elements.
struct LayerSpec {
    std::string name;
    unsigned h = 1;
    unsigned w = 1;
    unsigned c_in = 1;
    unsigned c_out = 1;
    unsigned kernel = 1;  // square spatial kernel, kernel x kernel
    uint64_t weight_count = 0;
    uint64_t activation_count = 0;
};

}  // namespace mixq
