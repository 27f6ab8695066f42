from __future__ import annotations

import numpy as np

from autostudio.drawer.toy import ToyDenoiser, ToyParams


def test_same_seed_identical_weights():
    a = ToyDenoiser(7)
    b = ToyDenoiser(7)
    assert np.array_equal(a.text_weights.w_q, b.text_weights.w_q)
    assert np.array_equal(a.image_weights.w_v, b.image_weights.w_v)
    c = ToyDenoiser(8)
    assert not np.array_equal(a.text_weights.w_q, c.text_weights.w_q)


def test_text_embedding_shape_and_determinism():
    d = ToyDenoiser(1)
    e1 = d.embed_text("A golden dog, wagging its tail!")
    e2 = d.embed_text("a golden dog wagging its tail")
    assert e1.shape[1] == d.params.text_dim
    assert np.array_equal(e1, e2)  # punctuation/case-insensitive tokenization
    assert d.embed_text("").shape == (1, d.params.text_dim)


def test_text_embedding_token_cap():
    d = ToyDenoiser(1)
    long = " ".join(f"word{i}" for i in range(100))
    assert d.embed_text(long).shape[0] == d.params.max_tokens


def test_image_embedding_dim_and_range():
    d = ToyDenoiser(2)
    image = np.random.default_rng(0).integers(0, 256, size=(64, 48, 3), dtype=np.uint8)
    vec = d.embed_image(image)
    assert vec.dim == d.params.img_embedding_dim == 48
    assert vec.provenance == "toy-encoder"
    assert all(0.0 <= v <= 1.0 for v in vec.values)
    tokens = d.image_tokens(vec)
    assert tokens.shape == (d.params.img_tokens, d.params.img_token_dim)


def test_codec_round_trip_error_bounded():
    d = ToyDenoiser(3)
    rng = np.random.default_rng(1)
    latent = rng.uniform(-1, 1, size=(8, 8, 3))
    image = d.decode(latent, 64, 64)
    assert image.shape == (64, 64, 3) and image.dtype == np.uint8
    back = d.encode(image)
    assert np.max(np.abs(back - latent)) <= 1.0 / 255 + 1e-12


def test_codec_handles_non_multiple_frames():
    d = ToyDenoiser(4)
    image = np.random.default_rng(2).integers(0, 256, size=(50, 70, 3), dtype=np.uint8)
    z = d.encode(image)
    assert z.shape == (7, 9, 3)
    out = d.decode(z, 70, 50)
    assert out.shape == (50, 70, 3)


def test_refine_bounded_and_deterministic():
    d = ToyDenoiser(5, ToyParams())
    rng = np.random.default_rng(3)
    z = rng.standard_normal((4, 4, 3))
    tokens = d.embed_text("a quiet street at dusk")
    out1 = d.refine(z, tokens, [], alpha=0.2, beta=0.7)
    out2 = d.refine(z, tokens, [], alpha=0.2, beta=0.7)
    assert np.array_equal(out1, out2)
    assert np.all(np.abs(out1) < 1.0)  # tanh keeps predictions in (-1, 1)
