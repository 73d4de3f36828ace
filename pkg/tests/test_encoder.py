import numpy as np
import pytest

from unsee.encoder import (
    PAD_ID,
    UNK_ID,
    EncoderParams,
    TokenBatch,
    build_vocab,
    encode_batch,
    encoder_backward,
    init_encoder,
    load_vocab,
    save_vocab,
    tokenize,
    tokenize_batch,
)
from unsee.errors import EmptySentenceError, ShapeMismatchError, VocabError
from unsee.gradcheck import TOLERANCE, check_encoder
from unsee.rng import stream


# ------------------------------------------------------------------- vocab

def test_build_vocab_frequency_then_lex():
    vocab = build_vocab(["a b", "a"], min_count=1)
    assert len(vocab) == 4  # pad, unk, a, b
    assert vocab.lookup("a") == 2
    assert vocab.lookup("b") == 3


def test_build_vocab_min_count_threshold():
    vocab = build_vocab(["a b"], min_count=2)
    assert len(vocab) == 2
    assert vocab.lookup("a") == UNK_ID
    assert vocab.lookup("b") == UNK_ID


def test_build_vocab_size_matches_frequency_count():
    g = np.random.default_rng(0)
    corpus = [
        " ".join(f"t{int(g.integers(30))}" for _ in range(int(g.integers(3, 9))))
        for _ in range(100)
    ]
    from collections import Counter

    counts = Counter(t for s in corpus for t in s.split())
    for min_count in (1, 2, 5):
        vocab = build_vocab(corpus, min_count)
        expected = sum(1 for c in counts.values() if c >= min_count)
        assert len(vocab) == expected + 2


def test_build_vocab_empty_corpus():
    with pytest.raises(VocabError):
        build_vocab([])


def test_vocab_save_load_roundtrip(tmp_path):
    vocab = build_vocab(["the cat sat", "the dog"], min_count=1)
    path = tmp_path / "vocab.txt"
    save_vocab(vocab, path)
    loaded = load_vocab(path)
    assert loaded.id_to_token == vocab.id_to_token
    assert loaded.token_to_id == vocab.token_to_id


# ---------------------------------------------------------------- tokenize

def test_tokenize_basic():
    vocab = build_vocab(["hello world"], min_count=1)
    ids, mask = tokenize("Hello world", vocab, max_len=5)
    assert ids[0] == vocab.lookup("hello")
    assert ids[1] == vocab.lookup("world")
    assert ids[2] == PAD_ID
    assert mask.tolist() == [1.0, 1.0, 0.0, 0.0, 0.0]


def test_tokenize_truncates_at_max_len():
    vocab = build_vocab(["x"], min_count=1)
    sentence = " ".join(["x"] * 100)
    ids, mask = tokenize(sentence, vocab, max_len=64)
    assert len(ids) == 64
    assert mask.sum() == 64.0


def test_tokenize_unknown_token():
    vocab = build_vocab(["known"], min_count=1)
    ids, mask = tokenize("mystery", vocab, max_len=3)
    assert ids[0] == UNK_ID
    assert mask[0] == 1.0


def test_tokenize_empty_sentence_errors():
    vocab = build_vocab(["a"], min_count=1)
    with pytest.raises(EmptySentenceError):
        tokenize("   ", vocab, max_len=4)


# ----------------------------------------------------------------- encoder

def _small_setup(seed=0, feed_forward=True, dropout=0.1, max_len=6, dim=5):
    rng = stream(seed, "init")
    params = init_encoder(20, dim, rng, dropout=dropout, max_len=max_len,
                          feed_forward=feed_forward)
    ids = rng.integers(2, 20, size=(3, max_len))
    lengths = np.array([2, max_len, 4])
    mask = (np.arange(max_len)[None, :] < lengths[:, None]).astype(np.float64)
    ids[mask == 0.0] = PAD_ID
    return params, TokenBatch(ids, mask)


def test_eval_single_token_is_embedding_row():
    params, _ = _small_setup(feed_forward=False)
    batch = TokenBatch(
        np.array([[7, PAD_ID, PAD_ID]]), np.array([[1.0, 0.0, 0.0]])
    )
    pooled, _ = encode_batch(params, batch, "eval")
    assert np.array_equal(pooled[0], params.emb[7])


def test_train_with_p0_equals_eval():
    params, batch = _small_setup(dropout=0.0)
    train_out, _ = encode_batch(params, batch, "train", stream(0, "dropout-view-1"))
    eval_out, _ = encode_batch(params, batch, "eval")
    assert np.array_equal(train_out, eval_out)


def test_two_dropout_streams_differ():
    params, batch = _small_setup(dropout=0.1)
    a, _ = encode_batch(params, batch, "train", stream(0, "dropout-view-1", 1))
    b, _ = encode_batch(params, batch, "train", stream(0, "dropout-view-2", 1))
    assert np.abs(a - b).max() > 0.0


def test_eval_mode_is_pure():
    params, batch = _small_setup()
    a, _ = encode_batch(params, batch, "eval")
    b, _ = encode_batch(params, batch, "eval")
    assert np.array_equal(a, b)


def test_train_mode_reproducible_from_stream():
    params, batch = _small_setup()
    a, _ = encode_batch(params, batch, "train", stream(3, "dropout-view-1", 9))
    b, _ = encode_batch(params, batch, "train", stream(3, "dropout-view-1", 9))
    assert np.array_equal(a, b)


def test_padding_invariance_exact():
    params, batch = _small_setup(max_len=6)
    wide = TokenBatch(
        np.concatenate([batch.ids, np.full((3, 4), PAD_ID)], axis=1),
        np.concatenate([batch.mask, np.zeros((3, 4))], axis=1),
    )
    wide_params = EncoderParams(params.emb, params.ff_w, params.ff_b,
                                params.dropout, 10)
    narrow, _ = encode_batch(params, batch, "train", stream(1, "dropout-view-1", 5))
    padded, _ = encode_batch(wide_params, wide, "train", stream(1, "dropout-view-1", 5))
    assert np.array_equal(narrow, padded)


def test_out_of_range_id_errors():
    params, batch = _small_setup()
    batch.ids[0, 0] = 999
    with pytest.raises(VocabError):
        encode_batch(params, batch, "eval")


def test_bad_mode_rejected():
    params, batch = _small_setup()
    with pytest.raises(ValueError):
        encode_batch(params, batch, "test")


# ---------------------------------------------------------------- backward

def test_zero_upstream_gives_zero_grads():
    params, batch = _small_setup()
    _, ctx = encode_batch(params, batch, "train", stream(0, "dropout-view-1"))
    grads = encoder_backward(ctx, np.zeros((3, params.dim)))
    for g in grads.values():
        assert np.all(g == 0.0)


def test_single_token_chain_rule_by_hand():
    params, _ = _small_setup(feed_forward=False, dropout=0.0, dim=4)
    batch = TokenBatch(np.array([[5, PAD_ID]]), np.array([[1.0, 0.0]]))
    _, ctx = encode_batch(params, batch, "train", None)
    grads = encoder_backward(ctx, np.ones((1, 4)))
    expected = np.zeros_like(params.emb)
    expected[5] = 1.0  # d(sum of pooled)/d emb[5] = 1/count = 1
    assert np.array_equal(grads["emb"], expected)


def test_backward_shape_check():
    params, batch = _small_setup()
    _, ctx = encode_batch(params, batch, "train", stream(0, "dropout-view-1"))
    with pytest.raises(ShapeMismatchError):
        encoder_backward(ctx, np.zeros((3, params.dim + 1)))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_encoder_gradcheck(seed):
    assert check_encoder(seed) < TOLERANCE


def test_encoder_gradcheck_without_feed_forward():
    # same harness but on a linear encoder
    params, batch = _small_setup(feed_forward=False, dropout=0.2)
    head = stream(9, "init").normal(size=(3, params.dim))

    def value():
        pooled, _ = encode_batch(params, batch, "train", stream(9, "dropout-view-1"))
        return float((pooled * head).sum())

    _, ctx = encode_batch(params, batch, "train", stream(9, "dropout-view-1"))
    analytic = encoder_backward(ctx, head)["emb"]
    h = 1e-5
    numeric = np.zeros_like(params.emb)
    for idx in np.ndindex(*params.emb.shape):
        orig = params.emb[idx]
        params.emb[idx] = orig + h
        fp = value()
        params.emb[idx] = orig - h
        fm = value()
        params.emb[idx] = orig
        numeric[idx] = (fp - fm) / (2.0 * h)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-6)
    assert np.abs(analytic - numeric).max() / scale < TOLERANCE


def test_tokenize_batch_shapes():
    vocab = build_vocab(["a b c", "d"], min_count=1)
    batch = tokenize_batch(["a b c", "d"], vocab, max_len=4)
    assert batch.ids.shape == (2, 4)
    assert batch.mask.shape == (2, 4)
    assert batch.size == 2
