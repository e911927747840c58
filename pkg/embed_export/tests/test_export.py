import json

import numpy as np
import pytest
from PIL import Image

from embed_export import ExportError, ExportManifest, export
from fedsummary import fdsm
from fedsummary.embedder import make_embedder
from fedsummary.summary import encoder_summary

MODEL = "mobilenet_v3_small"
LAYER = "features"


def make_images(root, clients=("alice", "bob"), classes=("cat", "dog"),
                per_class=2, size=(20, 20), seed=0):
    rng = np.random.default_rng(seed)
    for client in clients:
        for cls in classes:
            d = root / client / cls
            d.mkdir(parents=True)
            for j in range(per_class):
                arr = rng.integers(0, 256, size=(*size, 3), dtype=np.uint8)
                Image.fromarray(arr).save(d / f"img{j}.png")
    return root


def small_manifest(root, embed_dim=16):
    return ExportManifest.discover(
        root, model=MODEL, layer=LAYER, embed_dim=embed_dim,
        resize=(32, 32), seed=0,
    )


class TestManifest:
    def test_discover_finds_clients_and_classes(self, tmp_path):
        root = make_images(tmp_path / "imgs")
        m = small_manifest(root)
        assert sorted(m.clients) == ["alice", "bob"]
        assert m.classes == ("cat", "dog")
        assert all(len(files) == 4 for files in m.clients.values())

    def test_discover_empty_root_rejected(self, tmp_path):
        (tmp_path / "imgs").mkdir()
        with pytest.raises(ExportError):
            small_manifest(tmp_path / "imgs")

    def test_save_load_round_trip(self, tmp_path):
        root = make_images(tmp_path / "imgs")
        m = small_manifest(root)
        m.save(tmp_path / "manifest.json")
        assert ExportManifest.load(tmp_path / "manifest.json") == m

    def test_validate_missing_file(self, tmp_path):
        root = make_images(tmp_path / "imgs")
        m = small_manifest(root)
        (root / "alice" / "cat" / "img0.png").unlink()
        with pytest.raises(ExportError, match="missing"):
            m.validate(root)

    def test_malformed_manifest_file(self, tmp_path):
        (tmp_path / "bad.json").write_text(json.dumps({"model": "x"}))
        with pytest.raises(ExportError):
            ExportManifest.load(tmp_path / "bad.json")


class TestExport:
    def test_count_and_shape(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",), per_class=5)
        out = tmp_path / "out"
        paths = export(root, small_manifest(root, embed_dim=64), out)
        assert len(paths) == 1
        ds = fdsm.read_dataset(paths[0], kind="embedded")
        assert ds.num_samples == 10
        assert ds.feature_dim == 64
        assert ds.features.dtype == np.float32

    def test_labels_match_directories(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",), per_class=3)
        out = tmp_path / "out"
        (path,) = export(root, small_manifest(root), out)
        ds = fdsm.read_dataset(path, kind="embedded")
        # files are embedded class by class in sorted order
        assert ds.labels.tolist() == [0, 0, 0, 1, 1, 1]

    def test_repeat_export_is_bit_identical(self, tmp_path):
        root = make_images(tmp_path / "imgs")
        m = small_manifest(root)
        a = export(root, m, tmp_path / "a")
        b = export(root, m, tmp_path / "b")
        for pa, pb in zip(sorted(a), sorted(b)):
            assert pa.read_bytes() == pb.read_bytes()

    def test_different_seed_changes_embeddings(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",))
        m0 = small_manifest(root)
        m1 = ExportManifest.discover(root, model=MODEL, layer=LAYER,
                                     embed_dim=16, resize=(32, 32), seed=1)
        (a,) = export(root, m0, tmp_path / "a")
        (b,) = export(root, m1, tmp_path / "b")
        assert a.read_bytes() != b.read_bytes()

    def test_undecodable_image_skipped_with_note(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",))
        (root / "c0" / "cat" / "img0.png").write_bytes(b"not an image")
        m = small_manifest(root)
        out = tmp_path / "out"
        with pytest.warns(UserWarning, match="img0.png"):
            (path,) = export(root, m, out)
        ds = fdsm.read_dataset(path, kind="embedded")
        assert ds.num_samples == 3
        report = json.loads((out / "export_report.json").read_text())
        assert report["skipped"]["c0"] == ["c0/cat/img0.png"]

    def test_all_undecodable_is_an_error(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",), per_class=1)
        m = small_manifest(root)
        for rel in m.clients["c0"]:
            (root / rel).write_bytes(b"junk")
        with pytest.raises(ExportError, match="no decodable"):
            export(root, m, tmp_path / "out")

    def test_unknown_layer_rejected(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",))
        m = ExportManifest.discover(root, model=MODEL, layer="not_a_layer",
                                    embed_dim=16, resize=(32, 32))
        with pytest.raises(ExportError, match="layer"):
            export(root, m, tmp_path / "out")

    def test_batch_size_does_not_change_output(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",), per_class=4)
        m = small_manifest(root)
        (a,) = export(root, m, tmp_path / "a", batch_size=8)
        (b,) = export(root, m, tmp_path / "b", batch_size=8)
        assert a.read_bytes() == b.read_bytes()


class TestDownstream:
    def test_summarize_exported_dataset(self, tmp_path):
        root = make_images(tmp_path / "imgs", clients=("c0",), per_class=4)
        m = small_manifest(root, embed_dim=24)
        (path,) = export(root, m, tmp_path / "out")
        ds = fdsm.read_dataset(path, kind="embedded")
        provider = make_embedder("identity", 24, 24)
        s = encoder_summary(ds, coreset_k=8, provider=provider, seed=0)
        assert s.values.shape == (2 * 24 + 2,)
        assert s.label_dist.sum() == pytest.approx(1.0)
