from .layers import (PoleResidueBank, SpectralMultiplier, alno_layer_apply,
                     lno_kernel_apply, spectral_conv_apply)
from .model import (ModelConfig, OperatorModel, build_model, load_checkpoint,
                    matched_lno_config, model_forward, parameter_count,
                    save_checkpoint)

__all__ = [
    "PoleResidueBank", "SpectralMultiplier", "alno_layer_apply",
    "lno_kernel_apply", "spectral_conv_apply",
    "ModelConfig", "OperatorModel", "build_model", "load_checkpoint",
    "matched_lno_config", "model_forward", "parameter_count", "save_checkpoint",
]
