#pragma once

#include "badm/graph.hpp"
#include "badm/rng.hpp"

namespace badm::nn {

// y = x * w + b with b broadcast over rows. x: M x in, w: in x out, b: 1 x out.
Tensor linear(Tensor x, Tensor w, Tensor b);

// 1-D convolution along rows (time axis) with zero ("same") padding.
// x: N x Cin. kernel: (taps * Cin) x Cout, tap-major — rows [j*Cin, (j+1)*Cin)
// hold the weights for tap offset j - taps/2. bias: 1 x Cout. taps must be odd.
Tensor conv1d(Tensor x, Tensor kernel, Tensor bias, int taps);

// Multi-head scaled dot-product attention over already-projected inputs.
// q: Lq x H, k and v: Lk x H. Column blocks of width H/heads form the heads;
// per-head scores use scale 1/sqrt(H/heads). The concatenated head outputs
// pass through wo (H x Dout) and bo (1 x Dout).
Tensor cross_attention(Tensor q, Tensor k, Tensor v, int heads, Tensor wo, Tensor bo);

// Feature-wise affine modulation: gamma .* x + beta. gamma/beta are either the
// shape of x or a single row broadcast over all rows of x.
Tensor film(Tensor x, Tensor gamma, Tensor beta);

// Sinusoidal position/timestep embedding: first half sines, second half
// cosines, frequencies exp(-ln(10000) * i / (dim/2)). dim must be even.
Mat sinusoidal_time_embedding(Scalar t, int dim);

// Uniform init in [-sqrt(1/fan_in), sqrt(1/fan_in)] with fan_in = rows.
Mat init_uniform(int rows, int cols, Rng& rng);

}  // namespace badm::nn
