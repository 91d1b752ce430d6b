"""Regression datasets with a fixed train/test partition."""

from typing import Annotated, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

DATASET_FORMAT_VERSION = 1


class NormalizationConstants(BaseModel):
    """Constants turning raw columns into the normalized training values.

    normalized_feature = raw / feature_scale + feature_offset
    normalized_target = raw / target_scale
    """

    model_config = ConfigDict(frozen=True)

    feature_scale: List[float]
    feature_offset: List[float]
    target_scale: float

    def apply(self, X_raw: np.ndarray) -> np.ndarray:
        X = np.asarray(X_raw, dtype=float)
        return X / np.asarray(self.feature_scale) + np.asarray(self.feature_offset)

    def apply_target(self, y_raw: np.ndarray) -> np.ndarray:
        return np.asarray(y_raw, dtype=float) / self.target_scale


class Dataset(BaseModel):
    """Feature matrix, targets and split, immutable after construction."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: Annotated[str, Field(description="Identifier used in file names")]
    X: Annotated[np.ndarray, Field(description="m x d feature matrix")]
    y: Annotated[np.ndarray, Field(description="m targets")]
    train_idx: Annotated[np.ndarray, Field(description="Training rows, in order")]
    test_idx: Annotated[np.ndarray, Field(description="Test rows, in order")]
    seed: Annotated[Optional[int], Field(description="Generator seed")] = None
    generator: Annotated[
        Optional[str], Field(description="Named, versioned PRNG used to build it")
    ] = None
    true_weight: Optional[float] = None
    normalization: Optional[NormalizationConstants] = None

    @field_validator("X", mode="before")
    @classmethod
    def validate_X(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("X must be a non-empty m x d matrix")
        arr.setflags(write=False)
        return arr

    @field_validator("y", mode="before")
    @classmethod
    def validate_y(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=float).reshape(-1)
        arr.setflags(write=False)
        return arr

    @field_validator("train_idx", "test_idx", mode="before")
    @classmethod
    def validate_idx(cls, v) -> np.ndarray:
        arr = np.array(v, dtype=np.int64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def validate_dataset(self) -> "Dataset":
        m = self.X.shape[0]
        if self.y.shape[0] != m:
            raise ValueError("X and y must have the same number of rows")
        if np.isnan(self.X).any() or np.isnan(self.y).any():
            raise ValueError("dataset must not contain NaN")
        if len(self.train_idx) == 0:
            raise ValueError("training split must not be empty")
        joined = np.concatenate([self.train_idx, self.test_idx])
        if len(np.unique(joined)) != len(joined):
            raise ValueError("train and test splits must be disjoint")
        if len(joined) != m or joined.min() < 0 or joined.max() >= m:
            raise ValueError("train and test splits must cover every row")
        return self

    @property
    def samples(self) -> int:
        return self.X.shape[0]

    @property
    def features(self) -> int:
        return self.X.shape[1]

    @property
    def train_fraction(self) -> float:
        return len(self.train_idx) / self.samples

    def split(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        """Return (X, y) of the "train" or "test" split."""
        if name == "train":
            idx = self.train_idx
        elif name == "test":
            idx = self.test_idx
        else:
            raise ValueError(f"unknown split: {name}")
        return self.X[idx], self.y[idx]

    def to_document(self) -> dict:
        return {
            "format_version": DATASET_FORMAT_VERSION,
            "name": self.name,
            "seed": self.seed,
            "generator": self.generator,
            "true_weight": self.true_weight,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
            "train_idx": self.train_idx.tolist(),
            "test_idx": self.test_idx.tolist(),
            "normalization": (
                self.normalization.model_dump() if self.normalization else None
            ),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "Dataset":
        version = doc.get("format_version")
        if version != DATASET_FORMAT_VERSION:
            raise ValueError(f"unsupported dataset format_version: {version}")
        data = {k: v for k, v in doc.items() if k != "format_version"}
        return cls.model_validate(data)
