"""Run the encoder over per-client image folders and write FDSM files."""

from __future__ import annotations

import json
import os
import warnings
from pathlib import Path

import numpy as np
import torch
from PIL import Image, UnidentifiedImageError

from fedsummary.datamodel import EMBEDDED, ClientDataset
from fedsummary.fdsm import export_embedded_dataset

from .encoder import LayerEncoder, preprocess
from .manifest import ExportManifest, ExportError


def _atomic_export(path: Path, ds: ClientDataset) -> None:
    tmp = path.with_name(path.name + ".tmp")
    export_embedded_dataset(tmp, ds)
    os.replace(tmp, path)


def export(
    images_root: Path,
    manifest: ExportManifest,
    out_dir: Path,
    weights_path=None,
    batch_size: int = 32,
) -> list[Path]:
    """Embed every listed image and write one FDSM file per client.

    Undecodable images are skipped with a warning and recorded in the export
    report written next to the outputs; a client with no decodable images is
    an error.
    """
    images_root = Path(images_root)
    out_dir = Path(out_dir)
    manifest.validate(images_root)
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = LayerEncoder(manifest, weights_path=weights_path)

    written: list[Path] = []
    skipped: dict[str, list[str]] = {}
    for client in sorted(manifest.clients):
        tensors: list[torch.Tensor] = []
        labels: list[int] = []
        for rel in manifest.clients[client]:
            try:
                with Image.open(images_root / rel) as img:
                    tensors.append(preprocess(img, manifest))
            except (UnidentifiedImageError, OSError) as exc:
                warnings.warn(f"skipping undecodable image {rel}: {exc}")
                skipped.setdefault(client, []).append(rel)
                continue
            labels.append(manifest.label_of(rel))
        if not tensors:
            raise ExportError(f"client {client!r} has no decodable images")

        chunks = [
            encoder.embed(torch.stack(tensors[i : i + batch_size]))
            for i in range(0, len(tensors), batch_size)
        ]
        ds = ClientDataset(
            client_id=client,
            features=np.concatenate(chunks),
            labels=np.array(labels, dtype=np.int64),
            num_classes=len(manifest.classes),
            kind=EMBEDDED,
        )
        path = out_dir / f"{client}.fdsm"
        _atomic_export(path, ds)
        written.append(path)

    report = {
        "model": manifest.model,
        "layer": manifest.layer,
        "embed_dim": manifest.embed_dim,
        "classes": list(manifest.classes),
        "written": [p.name for p in written],
        "skipped": skipped,
    }
    (out_dir / "export_report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n"
    )
    return written
