"""Export manifest: which model/layer to run and which files to embed.

The manifest pins everything the export depends on -- encoder name, the
intermediate layer to tap, the output width H, image preprocessing, the RNG
seed for any randomly initialized weights, and the per-client file lists --
so a saved manifest reproduces the exact same FDSM bytes.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

# ImageNet channel statistics, the usual default for torchvision encoders.
DEFAULT_MEAN = (0.485, 0.456, 0.406)
DEFAULT_STD = (0.229, 0.224, 0.225)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".gif", ".webp"}


class ExportError(ValueError):
    """Raised for invalid manifests or unexportable inputs."""


@dataclass(frozen=True)
class ExportManifest:
    model: str
    layer: str
    embed_dim: int
    resize: tuple[int, int]  # (height, width)
    mean: tuple[float, float, float] = DEFAULT_MEAN
    std: tuple[float, float, float] = DEFAULT_STD
    seed: int = 0
    classes: tuple[str, ...] = ()
    # client id -> file paths relative to the images root, in embed order
    clients: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def validate(self, root: Path) -> None:
        if self.embed_dim < 1:
            raise ExportError("embed_dim must be >= 1")
        if len(self.resize) != 2 or min(self.resize) < 1:
            raise ExportError("resize must be (height, width) with positive sides")
        if not self.classes:
            raise ExportError("manifest lists no classes")
        if not self.clients:
            raise ExportError("manifest lists no clients")
        for client, files in self.clients.items():
            if not files:
                raise ExportError(f"client {client!r} has no image files")
            for rel in files:
                path = root / rel
                if not path.is_file():
                    raise ExportError(f"listed file missing: {path}")
                if Path(rel).parent.name not in self.classes:
                    raise ExportError(f"file {rel!r} is not under a known class")

    @classmethod
    def discover(
        cls,
        root: Path,
        model: str,
        layer: str,
        embed_dim: int,
        resize: tuple[int, int] = (224, 224),
        mean: tuple[float, float, float] = DEFAULT_MEAN,
        std: tuple[float, float, float] = DEFAULT_STD,
        seed: int = 0,
    ) -> "ExportManifest":
        """Build a manifest by scanning `root/<client>/<class>/<image>`."""
        root = Path(root)
        if not root.is_dir():
            raise ExportError(f"images root {root} is not a directory")
        clients: dict[str, tuple[str, ...]] = {}
        classes: set[str] = set()
        for client_dir in sorted(p for p in root.iterdir() if p.is_dir()):
            files = []
            for class_dir in sorted(p for p in client_dir.iterdir() if p.is_dir()):
                images = sorted(
                    p for p in class_dir.iterdir()
                    if p.suffix.lower() in IMAGE_SUFFIXES
                )
                if images:
                    classes.add(class_dir.name)
                    files.extend(p.relative_to(root).as_posix() for p in images)
            if files:
                clients[client_dir.name] = tuple(files)
        if not clients:
            raise ExportError(f"no client image folders found under {root}")
        return cls(
            model=model, layer=layer, embed_dim=embed_dim,
            resize=(int(resize[0]), int(resize[1])),
            mean=tuple(mean), std=tuple(std), seed=seed,
            classes=tuple(sorted(classes)), clients=clients,
        )

    def label_of(self, rel_path: str) -> int:
        return self.classes.index(Path(rel_path).parent.name)

    def save(self, path: Path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "ExportManifest":
        raw = json.loads(Path(path).read_text())
        try:
            return cls(
                model=raw["model"], layer=raw["layer"],
                embed_dim=int(raw["embed_dim"]),
                resize=tuple(raw["resize"]),
                mean=tuple(raw.get("mean", DEFAULT_MEAN)),
                std=tuple(raw.get("std", DEFAULT_STD)),
                seed=int(raw.get("seed", 0)),
                classes=tuple(raw["classes"]),
                clients={k: tuple(v) for k, v in raw["clients"].items()},
            )
        except (KeyError, TypeError) as exc:
            raise ExportError(f"malformed manifest {path}: {exc}") from exc
