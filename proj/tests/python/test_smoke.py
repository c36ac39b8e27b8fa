import json

import numpy as np
import pytest

import grounding_kit as gk


def square_image(size=64, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)


def box_mask(size, r0, c0, r1, c1):
    m = np.zeros((size, size), dtype=bool)
    m[r0:r1, c0:c1] = True
    return m


PARSE = {
    "tokens": [
        {"i": 0, "text": "the", "pos": "DET", "head": 2, "dep": "det"},
        {"i": 1, "text": "red", "pos": "ADJ", "head": 2, "dep": "amod"},
        {"i": 2, "text": "box", "pos": "NOUN", "head": 2, "dep": "ROOT"},
        {"i": 3, "text": "on", "pos": "ADP", "head": 2, "dep": "prep"},
        {"i": 4, "text": "the", "pos": "DET", "head": 5, "dep": "det"},
        {"i": 5, "text": "left", "pos": "NOUN", "head": 3, "dep": "pobj"},
    ],
    "chunks": [[0, 3], [4, 6]],
}
EXPRESSION = "the red box on the left"


@pytest.fixture(scope="module", params=["mock-residual", "mock-transformer"])
def encoders(request):
    return gk.make_encoders({"kind": request.param, "seed": 5})


def test_cosine_and_selection():
    assert gk.cosine(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert gk.select_mask([0.2, 0.7, 0.7, float("-inf")]) == (1, 0.7)
    with pytest.raises(gk.GroundingKitError) as err:
        gk.select_mask([])
    assert err.value.code == "SelectionImpossible"


def test_rle_round_trip():
    rng = np.random.default_rng(3)
    mask = rng.random((9, 13)) < 0.4
    rle = gk.rle_encode(mask)
    assert rle["size"] == [9, 13]
    assert np.array_equal(gk.rle_decode(rle), mask)
    assert gk.rle_decode({"size": [3, 3], "counts": [0, 2, 2, 5]}).sum() == 7


def test_metrics():
    a = box_mask(8, 0, 0, 4, 4)
    b = box_mask(8, 2, 2, 6, 6)
    assert gk.iou(a, b) == pytest.approx(4 / 28)
    assert gk.overall_iou([(a, b), (a, a)]) == pytest.approx((4 + 16) / (28 + 16))
    assert gk.mean_iou([(a, b), (a, a)]) == pytest.approx((4 / 28 + 1) / 2)


def test_noun_phrase():
    np_ = gk.extract_target_np(PARSE, EXPRESSION)
    assert np_["text"] == "the red box"
    assert not np_["is_whole_sentence"]


def test_full_mask_global_feature_matches_image_encoding(encoders):
    visual, _ = encoders
    img = square_image()
    full = np.ones(img.shape[:2], dtype=bool)
    g = gk.global_visual_feature(visual, img, full, mask_layers=visual.info.layer_count)
    e = visual.encode_image(img)
    assert np.allclose(g, e, rtol=1e-9, atol=1e-12)
    local = gk.local_visual_feature(visual, img, full)
    assert np.allclose(local, e, rtol=1e-9, atol=1e-12)


def test_score_proposals_matches_manual_fusion(encoders):
    visual, text = encoders
    img = square_image(seed=1)
    props = [box_mask(64, 0, 0, 32, 32), box_mask(64, 10, 20, 60, 60), np.zeros((64, 64), bool)]
    scored = gk.score_proposals(visual, text, img, props, EXPRESSION, PARSE, alpha=0.9, beta=0.4)
    assert len(scored) == 3
    assert scored[2]["empty"] and scored[2]["score"] == float("-inf")
    t = gk.global_local_text_feature(text, EXPRESSION, PARSE, beta=0.4)["fused"]
    for s, m in zip(scored[:2], props[:2]):
        v = gk.global_local_visual_feature(visual, img, m, alpha=0.9)["fused"]
        assert s["score"] == pytest.approx(gk.cosine(v, t), abs=1e-12)
    best, _ = gk.select_mask([s["score"] for s in scored])
    assert best == max(range(2), key=lambda i: scored[i]["score"])


def test_cropping_baseline_equals_local_only(encoders):
    visual, text = encoders
    img = square_image(seed=2)
    props = [box_mask(64, 4, 4, 30, 40), box_mask(64, 30, 10, 64, 64)]
    t = text.encode_text(EXPRESSION)
    crop = gk.baseline_scores("cropping", visual, img, t, props)
    scored = gk.score_proposals(visual, text, img, props, EXPRESSION, PARSE, alpha=0.0, beta=1.0)
    assert crop == pytest.approx([s["score"] for s in scored], abs=1e-12)


class TinyResidual(gk.PyResidualEncoder):
    """Mean colour per patch as features; pooling averages and projects."""

    def __init__(self):
        super().__init__(gk.VisualEncoderInfo(input_resolution=32, grid=(4, 4), channels=3, embed_dim=3))
        self.proj = np.array([[1.0, 0.2, 0.0], [0.0, 1.0, 0.3], [0.4, 0.0, 1.0]])

    def fingerprint(self):
        return "tiny-residual"

    def backbone_features(self, image):
        image = gk.resize_image(image, 32, 32)
        x = image.astype(float).reshape(4, 8, 4, 8, 3).mean(axis=(1, 3)) / 255.0
        return np.ascontiguousarray(x.transpose(2, 0, 1))

    def attention_pool(self, grid):
        return self.proj @ grid.reshape(3, -1).mean(axis=1)

    def pooling_weights(self):
        # Zero query/key projections give uniform attention, which reduces to attention_pool().
        z, zv = np.zeros((3, 3)), np.zeros(3)
        return {"heads": 1, "positional": np.zeros((17, 3)), "q_proj": z, "k_proj": z,
                "v_proj": np.eye(3), "q_bias": zv, "k_bias": zv, "v_bias": zv,
                "c_proj": self.proj, "c_bias": zv}


class TinyText(gk.PyTextEncoder):
    def __init__(self):
        super().__init__(gk.TextEncoderInfo(embed_dim=3))

    def fingerprint(self):
        return "tiny-text"

    def encode_text(self, text):
        return np.array([1.0 + len(text) % 3, 0.5, 1.0 + text.count("e")])


def test_python_encoder_bridge():
    visual, text = TinyResidual(), TinyText()
    assert not visual.concurrent_safe
    img = square_image(32, seed=4)
    props = [box_mask(32, 0, 0, 16, 16), box_mask(32, 8, 8, 32, 32)]
    scored = gk.score_proposals(visual, text, img, props, EXPRESSION, PARSE, threads=4)
    assert all(np.isfinite(s["score"]) for s in scored)
    full = np.ones((32, 32), dtype=bool)
    assert np.allclose(gk.global_visual_feature(visual, img, full), visual.encode_image(img),
                       rtol=1e-9, atol=1e-12)
    with pytest.raises(gk.GroundingKitError) as err:
        gk.baseline_scores("grad-cam", visual, img, text.encode_text("x"), props)
    assert err.value.code == "GradientsUnsupported"


def write_dataset(tmp_path):
    size = 32
    img = square_image(size, seed=9)
    gk.save_image(img, tmp_path / "a.png")
    gt = box_mask(size, 2, 2, 14, 20)
    other = box_mask(size, 16, 4, 30, 30)
    records = [
        {"image_id": "a", "image_path": "a.png", "expression": EXPRESSION, "gt": gk.rle_encode(gt)},
        {"image_id": "a", "image_path": "a.png", "expression": "red", "gt": gk.rle_encode(other)},
    ]
    proposals = {"images": [{"id": "a", "height": size, "width": size,
                             "proposals": [gk.rle_encode(other), gk.rle_encode(gt)]}]}
    (tmp_path / "records.json").write_text(json.dumps({"records": records}))
    (tmp_path / "proposals.json").write_text(json.dumps(proposals))
    (tmp_path / "parses.json").write_text(json.dumps({"parses": [{"expression": EXPRESSION, **PARSE}]}))
    (tmp_path / "encoder.cfg").write_text("kind = mock-residual\nseed = 1\n")
    (tmp_path / "bench.cfg").write_text(
        "records = records.json\nproposals = proposals.json\nparses = parses.json\nencoder = encoder.cfg\n")
    return tmp_path / "bench.cfg"


def test_benchmark_from_config(tmp_path):
    cfg = write_dataset(tmp_path)
    report = gk.run_benchmark(cfg, {"alpha": 0.8})
    assert report["config"]["alpha"] == 0.8
    assert len(report["examples"]) == 2
    assert report["summary"]["upper_bound_oiou"] == pytest.approx(1.0)
    again = gk.run_benchmark(cfg, {"alpha": 0.8, "threads": 3})
    assert again["summary"] == report["summary"]


def test_benchmark_with_python_encoders(tmp_path):
    cfg = write_dataset(tmp_path)
    report = gk.run_benchmark(cfg, visual=TinyResidual(), text=TinyText())
    assert len(report["examples"]) == 2
    assert 0.0 <= report["summary"]["oiou"] <= 1.0
