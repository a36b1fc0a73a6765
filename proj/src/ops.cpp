#include "obsdn/ops.hpp"

#include "obsdn/error.hpp"
#include "obsdn/kernels.hpp"

namespace obsdn::ops {
namespace {

kernels::ConvDims dims_of(const Tensor& input, const Tensor& kernel) {
  kernels::ConvDims d;
  d.c_out = kernel.dim(0);
  d.c_in = kernel.dim(1);
  d.k = kernel.dim(2);
  d.height = input.dim(1);
  d.width = input.dim(2);
  return d;
}

}  // namespace

void check_conv_shapes(const Tensor& input, const Tensor& kernel, const Tensor* bias) {
  const auto fail = [&](const std::string& why) {
    throw ShapeError("conv2d: " + why + " (input " + shape_str(input.shape()) + ", kernel " +
                     shape_str(kernel.shape()) + ")");
  };
  if (input.rank() != 3) fail("input must be C_in x H x W");
  if (kernel.rank() != 4) fail("kernel must be C_out x C_in x k x k");
  if (kernel.dim(2) != kernel.dim(3)) fail("kernel must be square");
  if (kernel.dim(2) % 2 == 0) fail("kernel size must be odd");
  if (kernel.dim(1) != input.dim(0)) fail("kernel C_in does not match input channels");
  if (bias && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0)))
    throw ShapeError("conv2d: bias " + shape_str(bias->shape()) + " does not match kernel " +
                     shape_str(kernel.shape()));
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor* bias) {
  check_conv_shapes(input, kernel, bias);
  const auto d = dims_of(input, kernel);
  Tensor out(Shape{d.c_out, d.height, d.width});
  kernels::active().conv2d_forward(d, input.ptr(), kernel.ptr(), bias ? bias->ptr() : nullptr, out.ptr());
  return out;
}

Tensor conv2d_backward_input(const Tensor& grad_out, const Tensor& kernel) {
  if (grad_out.rank() != 3 || kernel.rank() != 4 || grad_out.dim(0) != kernel.dim(0))
    throw ShapeError("conv2d_backward_input: grad " + shape_str(grad_out.shape()) + " vs kernel " +
                     shape_str(kernel.shape()));
  kernels::ConvDims d = dims_of(grad_out, kernel);
  Tensor grad_in(Shape{d.c_in, d.height, d.width});
  kernels::active().conv2d_backward_input(d, grad_out.ptr(), kernel.ptr(), grad_in.ptr());
  return grad_in;
}

void conv2d_backward_params(const Tensor& grad_out, const Tensor& input, Tensor& grad_kernel, Tensor* grad_bias) {
  if (grad_out.rank() != 3 || grad_kernel.rank() != 4 || grad_out.dim(0) != grad_kernel.dim(0) ||
      input.rank() != 3 || input.dim(0) != grad_kernel.dim(1))
    throw ShapeError("conv2d_backward_params: grad " + shape_str(grad_out.shape()) + ", input " +
                     shape_str(input.shape()) + ", kernel " + shape_str(grad_kernel.shape()));
  const auto d = dims_of(input, grad_kernel);
  kernels::active().conv2d_backward_weight(d, grad_out.ptr(), input.ptr(), grad_kernel.ptr(),
                                           grad_bias ? grad_bias->ptr() : nullptr);
}

Tensor relu(const Tensor& x) {
  Tensor y(x.shape());
  kernels::active().relu_forward(x.size(), x.ptr(), y.ptr());
  return y;
}

}  // namespace obsdn::ops
