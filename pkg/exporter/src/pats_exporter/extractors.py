"""Patch feature extractors.

Each extractor maps a batch of gray patches (N, s, s) in [0, 1] to L2-ready
feature rows (N, d). The built-ins are dependency-free and deterministic;
`torchvision:<model>` pulls in torch lazily so the exporter owns all ML
dependencies and nothing else ever loads a runtime.
"""

from __future__ import annotations

import numpy as np


def _pool_extractor(dim: int):
    """Deterministic pooled-statistics features: patch resampled to a k x k
    mean grid, padded with intensity moments when dim exceeds k*k."""

    def extract(patches: np.ndarray) -> np.ndarray:
        n, s, _ = patches.shape
        k = max(1, int(np.sqrt(dim)))
        reps = (s + k - 1) // k
        padded = np.pad(patches, ((0, 0), (0, reps * k - s), (0, reps * k - s)), mode="edge")
        pooled = padded.reshape(n, k, reps, k, reps).mean(axis=(2, 4)).reshape(n, -1)
        feats = [pooled]
        flat = patches.reshape(n, -1)
        moments = np.stack([flat.mean(1), flat.std(1), flat.min(1), flat.max(1)], axis=1)
        while sum(f.shape[1] for f in feats) < dim:
            feats.append(moments)
        out = np.concatenate(feats, axis=1)[:, :dim]
        return out.astype(np.float64)

    return extract


def _constant_extractor(dim: int):
    def extract(patches: np.ndarray) -> np.ndarray:
        return np.ones((patches.shape[0], dim), dtype=np.float64)

    return extract


def _torchvision_extractor(model_name: str):
    import torch
    import torchvision.models as models

    factory = getattr(models, model_name)
    model = factory(weights=None)
    model.eval()
    modules = list(model.children())[:-1]
    backbone = torch.nn.Sequential(*modules)

    def extract(patches: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            x = torch.from_numpy(patches).float().unsqueeze(1).repeat(1, 3, 1, 1)
            feats = backbone(x).flatten(1)
        return feats.numpy().astype(np.float64)

    return extract


def make_extractor(spec: str):
    """Build an extractor from a spec string.

    "pool:<d>" (default d=32), "constant:<d>", or "torchvision:<model>".
    """
    name, _, arg = spec.partition(":")
    if name == "pool":
        return _pool_extractor(int(arg) if arg else 32)
    if name == "constant":
        return _constant_extractor(int(arg) if arg else 8)
    if name == "torchvision":
        if not arg:
            raise ValueError("torchvision extractor needs a model name")
        return _torchvision_extractor(arg)
    raise ValueError(f"unknown extractor {spec!r}")
