from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .config import ModelConfig
from .layers import BasicBlock, Bottleneck, DilatedResidualBlock, SpatialAttention
from .network import SDRNet, build_model, forward
from .summary import ModelSummary, summarize

__all__ = [
    "BasicBlock",
    "Bottleneck",
    "DilatedResidualBlock",
    "ModelConfig",
    "ModelSummary",
    "SDRNet",
    "SpatialAttention",
    "build_model",
    "forward",
    "load_checkpoint",
    "read_checkpoint",
    "save_checkpoint",
    "summarize",
]
