"""Unit tests for vocabulary construction and caption batching."""

import numpy as np
import pytest

from autograd import ContractError, DimensionError
from data_service import RESERVED_TOKENS, CaptionExample, Vocabulary, batch_for_step, build_vocab, collate, epoch_order
from model import BOS_ID, EOS_ID, PAD_ID, UNK_ID


CORPUS = [
    "a dog runs".split(),
    "a cat runs".split(),
    "A dog sleeps".split(),
    "the dog runs".split(),
    "a bird".split(),
    "the cat".split(),
    "a dog".split(),
    "cat cat".split(),
    "runs".split(),
    "a".split(),
]


class TestBuildVocab:
    """Deterministic id assignment."""

    def test_id_order_by_count_then_lexicographic(self):
        # counts: a 6, dog 4, runs 4, cat 4, the 2, sleeps 1, bird 1
        vocab = build_vocab(CORPUS, min_count=2)
        assert vocab.id_to_token == list(RESERVED_TOKENS) + ["a", "cat", "dog", "runs", "the"]

    def test_min_count_one_keeps_everything(self):
        vocab = build_vocab(CORPUS, min_count=1)
        assert vocab.id_to_token[-2:] == ["bird", "sleeps"]
        assert len(vocab) == 4 + 7

    def test_reserved_ids(self):
        vocab = build_vocab(CORPUS, min_count=2)
        assert [vocab.token_to_id[t] for t in RESERVED_TOKENS] == [PAD_ID, BOS_ID, EOS_ID, UNK_ID]

    def test_rare_words_map_to_unk(self):
        vocab = build_vocab(CORPUS, min_count=2)
        assert vocab.encode(["a", "bird", "Dog"]) == [4, UNK_ID, 6]

    def test_decode_strips_special(self):
        vocab = build_vocab(CORPUS, min_count=2)
        assert vocab.decode([BOS_ID, 4, 6, EOS_ID, PAD_ID]) == ["a", "dog"]
        assert vocab.decode([4, EOS_ID], strip_special=False) == ["a", "<eos>"]

    def test_empty_corpus(self):
        with pytest.raises(ContractError):
            build_vocab([])

    def test_bad_token_list(self):
        with pytest.raises(ContractError):
            Vocabulary(["a", "b"])
        with pytest.raises(ContractError):
            Vocabulary(list(RESERVED_TOKENS) + ["x", "x"])


class TestCollate:
    """Padded teacher-forcing batches."""

    def test_layout(self):
        vocab = build_vocab(CORPUS, min_count=1)
        examples = [
            CaptionExample("x", np.zeros((2, 3)), ["a", "dog"]),
            CaptionExample("y", np.ones((2, 3)), ["cat"]),
        ]
        batch = collate(examples, vocab)
        a, dog, cat = vocab.encode(["a", "dog", "cat"])
        np.testing.assert_array_equal(batch.input_ids, [[BOS_ID, a, dog], [BOS_ID, cat, PAD_ID]])
        np.testing.assert_array_equal(batch.target_ids, [[a, dog, EOS_ID], [cat, EOS_ID, PAD_ID]])
        np.testing.assert_array_equal(batch.mask, [[1, 1, 1], [1, 1, 0]])
        assert batch.references == [[a, dog], [cat]]
        assert batch.regions.shape == (2, 2, 3)

    def test_truncation(self):
        vocab = build_vocab(CORPUS, min_count=1)
        batch = collate([CaptionExample("x", np.zeros((2, 3)), "a dog runs".split())], vocab, max_len=2)
        assert batch.target_ids.tolist() == [vocab.encode(["a", "dog"]) + [EOS_ID]]

    def test_region_shapes_must_agree(self):
        vocab = build_vocab(CORPUS, min_count=1)
        examples = [CaptionExample("x", np.zeros((2, 3)), ["a"]), CaptionExample("y", np.zeros((3, 3)), ["a"])]
        with pytest.raises(DimensionError):
            collate(examples, vocab)

    def test_empty_batch(self):
        with pytest.raises(ContractError):
            collate([], build_vocab(CORPUS))


class TestBatchSchedule:
    """Shuffled batches as a pure function of (seed, step)."""

    def test_epoch_order_is_permutation(self):
        order = epoch_order(10, seed=3, epoch=2)
        assert sorted(order.tolist()) == list(range(10))
        np.testing.assert_array_equal(order, epoch_order(10, seed=3, epoch=2))

    def test_epochs_differ(self):
        assert not np.array_equal(epoch_order(20, 3, 0), epoch_order(20, 3, 1))

    def test_each_epoch_covers_every_example(self, toy_splits, toy_vocab):
        ids = []
        for step in range(6):
            ids.extend(batch_for_step(toy_splits.train, toy_vocab, batch_size=5, seed=1, step=step).example_ids)
        assert sorted(ids[:24]) == sorted(ex.example_id for ex in toy_splits.train)
        assert len(ids) == 24 + 5
