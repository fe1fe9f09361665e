from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .conv import conv_backward, conv_forward, init_conv, sigmoid
from .models import (
    MODEL_KINDS,
    ClassicalModel,
    HybridModel,
    QuantumModel,
    hybrid_stages,
    init_model,
    model_backward,
    model_forward,
    param_count,
)
from .vqc import (
    compiled_ops,
    init_angles,
    strongly_entangling_circuit,
    vqc_expectations,
    vqc_forward,
    vqc_param_shift_grad,
)
