"""Two-branch network: parameters, Resblocks, task transformers and the forward pass."""

from t2net.network.layers import conv3x3, resblock_forward
from t2net.network.params import (
    ConvParams,
    T2NetParams,
    conv_layout,
    load_params,
    save_params,
)
from t2net.network.t2net import ForwardResult, ablation_forward, run_network, t2net_forward
from t2net.network.task_transformer import (
    AttentionOutputs,
    relevance_embedding,
    task_transformer_forward,
    transfer_features,
)

__all__ = [
    "AttentionOutputs",
    "ConvParams",
    "ForwardResult",
    "T2NetParams",
    "ablation_forward",
    "conv3x3",
    "conv_layout",
    "load_params",
    "relevance_embedding",
    "resblock_forward",
    "run_network",
    "save_params",
    "t2net_forward",
    "task_transformer_forward",
    "transfer_features",
]
