"""Model checkpoints: parameter arrays, vocabulary, labels, and the
resolved configuration in one npz file."""

import os
import tempfile

import numpy as np

from .config import ExperimentConfig
from .embeddings import Vocabulary
from .model import LabelSet, NoiseMatrix, WindowClassifier


def save_checkpoint(path, model, vocab, label_set, config, noise=None,
                    selected_epoch=None, dev_f1_history=None):
    arrays = {f"model_{k}": v for k, v in model.state_dict().items()}
    arrays["vocab_words"] = np.array(vocab.words, dtype=str)
    arrays["classes"] = np.array(label_set.classes, dtype=str)
    arrays["config_text"] = np.array(config.to_text())
    if noise is not None and noise.b_matrix() is not None:
        arrays["noise_b"] = noise.b_matrix()
    if selected_epoch is not None:
        arrays["selected_epoch"] = np.array(selected_epoch)
    if dev_f1_history is not None:
        arrays["dev_f1_history"] = np.asarray(dev_f1_history)
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".npz")
    os.close(fd)
    try:
        with open(tmp, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    """Returns (model, vocab, label_set, config, noise or None, extras)."""
    with np.load(path, allow_pickle=False) as data:
        config = ExperimentConfig.from_text(str(data["config_text"]))
        vocab = Vocabulary([str(w) for w in data["vocab_words"]])
        label_set = LabelSet([str(c) for c in data["classes"]])
        state = {
            key[len("model_"):]: data[key]
            for key in data.files if key.startswith("model_")
        }
        noise = NoiseMatrix(data["noise_b"]) if "noise_b" in data.files else None
        extras = {}
        if "selected_epoch" in data.files:
            extras["selected_epoch"] = int(data["selected_epoch"])
        if "dev_f1_history" in data.files:
            extras["dev_f1_history"] = data["dev_f1_history"].tolist()
    dtype = np.float32 if config.dtype == "float32" else np.float64
    model = WindowClassifier(
        state["embedding"], k=label_set.k, hidden_size=config.hidden_size,
        dense_size=config.dense_size, seed=config.seed,
        trainable_embeddings=config.trainable_embeddings,
        pooling=config.pooling, dtype=dtype,
    )
    model.load_state(state)
    return model, vocab, label_set, config, noise, extras
