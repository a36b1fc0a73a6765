#pragma once

#include "obsdn/tensor.hpp"

// Forward primitives and the adjoints the graph needs, on plain tensors.
namespace obsdn::ops {

// input C_in×H×W, kernel C_out×C_in×k×k (odd k), bias [C_out] or null.
// Zero padding (k-1)/2, stride 1, so the output is C_out×H×W.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias = nullptr);

// Adjoint of conv2d with respect to its input: returns C_in×H×W.
Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel);

// Adjoint with respect to the kernel (and bias when requested).
void conv2d_backward_params(const Tensor& grad_out, const Tensor& input, Tensor& grad_kernel, Tensor* grad_bias);

Tensor relu(const Tensor& x);

// Throws ShapeError unless conv2d(input, kernel, bias) is well formed.
void check_conv_shapes(const Tensor& input, const Tensor& kernel, const Tensor* bias);

}  // namespace obsdn::ops
