"""CoNLL parsing and writing, embedding files, configs, and clean-subset
sampling."""

import numpy as np
import pytest

from noisylab.config import ExperimentConfig
from noisylab.conll import parse_conll, write_conll
from noisylab.data import sample_clean_subset
from noisylab.embeddings import (
    Vocabulary,
    build_vocab_words,
    load_embeddings,
    random_embeddings,
    write_embeddings,
)
from noisylab.model import LabelSet


class TestParseConll:
    def test_sentence_split_on_blank_line(self):
        corpus = parse_conll("alpha O\nbeta PER\n\ngamma O\n")
        assert len(corpus.sentences) == 2
        assert corpus.sentences[0].tokens == ["alpha", "beta"]
        assert corpus.sentences[0].labels == ["O", "PER"]
        assert corpus.sentences[1].tokens == ["gamma"]

    def test_docstart_line_skipped_and_boundary_recorded(self):
        text = "-DOCSTART- -X- O O\n\nalpha O\n\n-DOCSTART- -X- O O\n\nbeta O\n"
        corpus = parse_conll(text)
        assert [s.tokens for s in corpus.sentences] == [["alpha"], ["beta"]]
        assert corpus.doc_starts == [0, 1]

    def test_empty_file(self):
        corpus = parse_conll("")
        assert corpus.sentences == []
        assert corpus.token_count == 0

    def test_extra_middle_columns_tolerated(self):
        corpus = parse_conll("Britain NNP I-NP LOC\n")
        assert corpus.sentences[0].tokens == ["Britain"]
        assert corpus.sentences[0].labels == ["LOC"]

    def test_unknown_tag_names_line(self):
        with pytest.raises(ValueError) as err:
            parse_conll("alpha O\nbeta BAD\n", LabelSet())
        assert "line 2" in str(err.value)

    def test_unlabeled_single_column(self):
        corpus = parse_conll("alpha\nbeta\n")
        assert corpus.sentences[0].labels is None

    def test_round_trip_lossless(self):
        text = "-DOCSTART- O\n\nalpha O\nbeta PER\n\ngamma LOC\n\n-DOCSTART- O\n\ndelta O\n"
        corpus = parse_conll(text, LabelSet())
        again = parse_conll(write_conll(corpus), LabelSet())
        assert [s.tokens for s in again.sentences] == [s.tokens for s in corpus.sentences]
        assert [s.labels for s in again.sentences] == [s.labels for s in corpus.sentences]
        assert again.doc_starts == corpus.doc_starts


class TestEmbeddings:
    def test_two_words_give_vocab_of_four(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("alpha 0.1 0.2 0.3\nbeta -1 0 1\n", encoding="utf-8")
        table, vocab = load_embeddings(path)
        assert vocab.size == 4
        assert table.shape == (4, 3)
        np.testing.assert_array_equal(table[vocab.pad_id], 0.0)
        np.testing.assert_array_equal(table[vocab.unk_id], 0.0)
        np.testing.assert_allclose(table[vocab.lookup("alpha")], [0.1, 0.2, 0.3])

    def test_wrong_component_count_names_line(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("alpha 0.1 0.2\nbeta 1 2 3\n", encoding="utf-8")
        with pytest.raises(ValueError) as err:
            load_embeddings(path)
        assert "line 2" in str(err.value)

    def test_non_numeric_field_names_line(self, tmp_path):
        path = tmp_path / "vectors.txt"
        path.write_text("alpha x y\n", encoding="utf-8")
        with pytest.raises(ValueError) as err:
            load_embeddings(path)
        assert "line 1" in str(err.value)

    def test_write_then_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        words = ["one", "two", "three"]
        table = rng.standard_normal((3, 5))
        path = tmp_path / "vectors.txt"
        write_embeddings(path, words, table)
        loaded, vocab = load_embeddings(path)
        np.testing.assert_array_equal(loaded[:3], table)
        assert vocab.words == words

    def test_lowercase_fallback(self):
        vocab = Vocabulary(["britain", "Paris"])
        assert vocab.lookup("Paris") == 1
        assert vocab.lookup("BRITAIN".lower()) == 0
        assert vocab.lookup("Britain") == 0
        assert vocab.lookup("unknown-token") == vocab.unk_id

    def test_random_embeddings_seeded(self):
        words = build_vocab_words(["a", "b", "a", "c"])
        assert words == ["a", "b", "c"]
        t1, _ = random_embeddings(words, dim=8, seed=3)
        t2, _ = random_embeddings(words, dim=8, seed=3)
        np.testing.assert_array_equal(t1, t2)
        t3, _ = random_embeddings(words, dim=8, seed=4)
        assert not np.array_equal(t1, t3)


class TestSampleCleanSubset:
    def _corpus(self, n_sentences=50, tokens_per=10):
        text = "\n\n".join(
            "\n".join(f"tok{s}_{t} O" for t in range(tokens_per))
            for s in range(n_sentences)
        ) + "\n"
        return parse_conll(text)

    def test_full_budget_takes_everything(self):
        corpus = self._corpus(5, 4)
        clean, rest = sample_clean_subset(corpus, 20, seed=0)
        assert clean.token_count == 20
        assert rest.sentences == []

    def test_budget_reached_with_whole_sentences(self):
        corpus = self._corpus(50, 10)
        clean, rest = sample_clean_subset(corpus, 95, seed=1)
        assert clean.token_count >= 95
        assert clean.token_count % 10 == 0
        assert clean.token_count + rest.token_count == 500

    def test_same_seed_same_split(self):
        corpus = self._corpus(30, 7)
        a_clean, a_rest = sample_clean_subset(corpus, 50, seed=9)
        b_clean, b_rest = sample_clean_subset(corpus, 50, seed=9)
        assert [s.tokens for s in a_clean.sentences] == [s.tokens for s in b_clean.sentences]
        assert [s.tokens for s in a_rest.sentences] == [s.tokens for s in b_rest.sentences]

    def test_different_seed_differs(self):
        corpus = self._corpus(30, 7)
        a, _ = sample_clean_subset(corpus, 50, seed=1)
        b, _ = sample_clean_subset(corpus, 50, seed=2)
        assert [s.tokens for s in a.sentences] != [s.tokens for s in b.sentences]

    def test_zero_budget_rejected(self):
        with pytest.raises(ValueError):
            sample_clean_subset(self._corpus(2, 2), 0, seed=0)

    def test_excessive_budget_rejected(self):
        with pytest.raises(ValueError):
            sample_clean_subset(self._corpus(2, 2), 100, seed=0)


class TestExperimentConfig:
    def test_round_trip(self):
        config = ExperimentConfig(variant="base-model", seed=7, clean_budget=123,
                                  learning_rate=0.01, trainable_embeddings=True)
        again = ExperimentConfig.from_text(config.to_text())
        assert again == config

    def test_defaults_preserved_for_missing_keys(self):
        config = ExperimentConfig.from_text("seed = 3\n")
        assert config.seed == 3
        assert config.variant == "noise-model"
        assert config.epochs == 40

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_text("not_a_key = 1\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig.from_text("seed: 3\n")

    def test_comments_and_blanks_ignored(self):
        config = ExperimentConfig.from_text("# hello\n\nseed = 5\n")
        assert config.seed == 5

    def test_label_set(self):
        config = ExperimentConfig(labels="O,A,B")
        assert config.label_set().classes == ("O", "A", "B")
