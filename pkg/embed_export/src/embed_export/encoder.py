"""Image encoder: a torchvision model tapped at a named intermediate layer.

The tapped layer's activations are global-average-pooled over any spatial
dimensions, then mapped to the manifest's embed_dim by a seeded fixed linear
projection (identity if the widths already match). Weights default to a
seeded random initialization so the pipeline is fully reproducible offline;
a checkpoint can be loaded on top when pretrained weights are available.
"""

from __future__ import annotations

import numpy as np
import torch
from torchvision import models

from .manifest import ExportManifest, ExportError


class LayerEncoder:
    def __init__(self, manifest: ExportManifest, weights_path=None):
        torch.manual_seed(manifest.seed)
        try:
            self.model = models.get_model(manifest.model, weights=None)
        except ValueError as exc:
            raise ExportError(f"unknown model {manifest.model!r}") from exc
        if weights_path is not None:
            state = torch.load(weights_path, map_location="cpu")
            self.model.load_state_dict(state)
        self.model.eval()
        try:
            layer = self.model.get_submodule(manifest.layer)
        except AttributeError as exc:
            raise ExportError(
                f"model {manifest.model!r} has no layer {manifest.layer!r}"
            ) from exc

        self._captured: torch.Tensor | None = None

        def hook(_module, _inputs, output):
            self._captured = output

        layer.register_forward_hook(hook)
        self.manifest = manifest
        self._projection: torch.Tensor | None = None

    def _project(self, pooled: torch.Tensor) -> torch.Tensor:
        width = pooled.shape[1]
        h = self.manifest.embed_dim
        if width == h:
            return pooled
        if self._projection is None:
            gen = torch.Generator().manual_seed(self.manifest.seed)
            self._projection = torch.randn(width, h, generator=gen) / width ** 0.5
        return pooled @ self._projection

    @torch.inference_mode()
    def embed(self, batch: torch.Tensor) -> np.ndarray:
        """(n, 3, H, W) float batch -> (n, embed_dim) float32 embeddings."""
        self._captured = None
        self.model(batch)
        if self._captured is None:
            raise ExportError(
                f"layer {self.manifest.layer!r} produced no output during forward"
            )
        act = self._captured
        if act.ndim > 2:  # average out spatial dimensions
            act = act.flatten(2).mean(dim=2)
        return self._project(act).numpy().astype(np.float32)


def preprocess(image, manifest: ExportManifest) -> torch.Tensor:
    """PIL image -> normalized (3, H, W) float tensor."""
    h, w = manifest.resize
    rgb = image.convert("RGB").resize((w, h))
    arr = np.asarray(rgb, dtype=np.float32) / 255.0
    arr = (arr - np.array(manifest.mean, dtype=np.float32)) / np.array(
        manifest.std, dtype=np.float32
    )
    return torch.from_numpy(arr.transpose(2, 0, 1))
