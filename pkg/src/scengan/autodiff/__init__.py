from .tensor import (
    DEFAULT_DTYPE,
    Tensor,
    add,
    concat,
    leaky_relu,
    matmul,
    mean_all,
    mul,
    no_grad,
    permute,
    relu,
    reshape,
    scale,
    sigmoid,
    sum_all,
)
from .layers import (
    ACTIVATIONS,
    BN_EPS,
    BN_MOMENTUM,
    LAYER_KINDS,
    WEIGHT_INIT_STD,
    LayerSpec,
    activation,
    apply_activation,
    batch_norm,
    batch_norm_op,
    conv2d,
    conv2d_op,
    conv_transpose2d,
    conv_transpose2d_op,
    dense,
    init_layer_params,
    layer_forward,
    max_pool2d,
    max_pool2d_op,
    reshape_to,
)
from .optim import Parameter, clear_grads, clip_weights, max_abs_weight, rmsprop_step
from .gradcheck import GradCheckResult, finite_difference_check, nudge_from_kinks

__all__ = [
    "DEFAULT_DTYPE",
    "Tensor",
    "add",
    "concat",
    "leaky_relu",
    "matmul",
    "mean_all",
    "mul",
    "relu",
    "reshape",
    "scale",
    "sigmoid",
    "sum_all",
    "ACTIVATIONS",
    "BN_EPS",
    "BN_MOMENTUM",
    "LAYER_KINDS",
    "WEIGHT_INIT_STD",
    "LayerSpec",
    "activation",
    "apply_activation",
    "batch_norm",
    "batch_norm_op",
    "conv2d",
    "conv2d_op",
    "conv_transpose2d",
    "conv_transpose2d_op",
    "dense",
    "init_layer_params",
    "layer_forward",
    "max_pool2d",
    "max_pool2d_op",
    "reshape_to",
    "Parameter",
    "clear_grads",
    "clip_weights",
    "max_abs_weight",
    "rmsprop_step",
    "GradCheckResult",
    "finite_difference_check",
    "nudge_from_kinks",
]
