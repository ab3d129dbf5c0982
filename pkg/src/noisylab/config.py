"""Experiment configuration: every hyperparameter of a run, serializable
as flat ``key = value`` text so a saved config reproduces its run."""

import dataclasses
from dataclasses import dataclass

from .model import LabelSet


@dataclass
class ExperimentConfig:
    # run identity
    variant: str = "noise-model"
    seed: int = 0
    n_seeds: int = 5
    # data
    train_path: str = ""
    dev_path: str = ""
    test_path: str = ""
    labels: str = "O,PER,ORG,LOC,MISC"
    clean_budget: int = 400
    noisy_scope: str = "rest"  # rest | all
    noisy_source: str = "channel"  # channel | gazetteer
    gazetteer_path: str = ""
    blocklist_path: str = ""
    # noise channel
    channel_kind: str = "empirical"  # uniform | permutation | empirical
    channel_rho: float = 0.0
    channel_permutation: str = ""
    channel_preset: str = "gazetteer-like"
    channel_matrix_path: str = ""
    # model
    embeddings_path: str = ""
    embedding_dim: int = 16
    hidden_size: int = 300
    dense_size: int = 100
    cleaner_proj_size: int = 30
    pooling: str = "final"  # final | center
    trainable_embeddings: bool = False
    dtype: str = "float64"  # float64 | float32
    # training
    epochs: int = 40
    batch_size: int = 32
    eval_batch_size: int = 512
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    alpha: float = 1.0  # confusion smoothing
    noisy_factor: float = 1.0  # |subsample| = round(factor * |C|)
    pretrain_epochs: int = 5  # noise-adaptation-model initialization

    def label_set(self):
        return LabelSet([n.strip() for n in self.labels.split(",")])

    def to_text(self):
        lines = ["# noisylab experiment configuration"]
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        fields = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.split("\n"), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in fields:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            ftype = fields[key].type
            if ftype in (bool, "bool"):
                if value not in ("true", "false"):
                    raise ValueError(f"line {lineno}: boolean must be true or false")
                values[key] = value == "true"
            elif ftype in (int, "int"):
                values[key] = int(value)
            elif ftype in (float, "float"):
                values[key] = float(value)
            else:
                values[key] = value
        return cls(**values)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())
