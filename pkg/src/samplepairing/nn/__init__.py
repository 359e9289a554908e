from samplepairing.nn.checkpoint import load_checkpoint, save_checkpoint
from samplepairing.nn.gradcheck import GradCheckReport, grad_check
from samplepairing.nn.network import (
    Network,
    NetworkSpec,
    full_spec,
    log_softmax,
    loss_xent_soft,
    predict,
    reduced_spec,
    softmax,
    spec_by_name,
    tiny_spec,
)
from samplepairing.nn.optim import Adam, AdamConfig

__all__ = [
    "Adam",
    "AdamConfig",
    "GradCheckReport",
    "Network",
    "NetworkSpec",
    "full_spec",
    "grad_check",
    "load_checkpoint",
    "log_softmax",
    "loss_xent_soft",
    "predict",
    "reduced_spec",
    "save_checkpoint",
    "softmax",
    "spec_by_name",
    "tiny_spec",
]
