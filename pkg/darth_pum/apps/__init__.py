from .aes import (
    AesContext,
    aes_encrypt,
    aes_init_arrays,
    count_mixcolumns_errors,
    mixcolumns_bit_matrix,
)
from .aes_reference import encrypt_block, expand_key
from .cnn import (
    Activation,
    TinyCnn,
    cnn_argmax_agreement,
    cnn_change_activation,
    cnn_reference,
    cnn_run_inference,
    cnn_set_model,
    conv_toeplitz,
)
from .encoder import (
    FfnActivation,
    TinyEncoder,
    encoder_reference,
    encoder_reference_int,
    llm_build_encoder,
    llm_change_activation,
    llm_run_inference,
)
from .kernels import Workspace

__all__ = [
    "Activation",
    "AesContext",
    "FfnActivation",
    "TinyCnn",
    "TinyEncoder",
    "Workspace",
    "aes_encrypt",
    "aes_init_arrays",
    "cnn_argmax_agreement",
    "cnn_change_activation",
    "cnn_reference",
    "cnn_run_inference",
    "cnn_set_model",
    "conv_toeplitz",
    "count_mixcolumns_errors",
    "encoder_reference",
    "encoder_reference_int",
    "encrypt_block",
    "expand_key",
    "llm_build_encoder",
    "llm_change_activation",
    "llm_run_inference",
    "mixcolumns_bit_matrix",
]
