"""Differentiable CPU tile-based splatting renderer."""
from .pipeline import (
    AssetGradients,
    RenderConfig,
    RenderContractError,
    RenderOutput,
    SceneGradients,
    accumulate_shared,
    render,
    render_backward,
)

__all__ = [
    "AssetGradients",
    "RenderConfig",
    "RenderContractError",
    "RenderOutput",
    "SceneGradients",
    "accumulate_shared",
    "render",
    "render_backward",
]
