"""Experiment configuration document.

The document is YAML or JSON. Its JSON schema is kept in
models/experiment_schema.json and regenerated by scripts/sync_schema.py.
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from models.circuit import SUBTHRESHOLD_MAX, SUBTHRESHOLD_MIN, CircuitBounds, CircuitParams
from models.hyperparams import Hyperparams
from models.trace import Tier

CONFIG_FORMAT_VERSION = 1


class DatasetKind(str, Enum):
    UNIVARIATE = "univariate"
    BOSTON = "boston"
    FILE = "file"


class DatasetSpec(BaseModel):
    """Which data the experiment trains on."""

    model_config = ConfigDict(extra="forbid")

    kind: Annotated[
        DatasetKind,
        Field(description="Generated univariate sets, the housing CSV, or an exported JSON"),
    ] = DatasetKind.UNIVARIATE
    seeds: Annotated[
        List[int],
        Field(min_length=1, description="One univariate dataset per seed"),
    ] = [0, 1, 2, 3, 4]
    samples: Annotated[
        int, Field(ge=1, description="Samples per univariate dataset")
    ] = 50
    noise_scale: Annotated[
        float, Field(ge=0, description="Scale applied to unit Gaussian noise")
    ] = 0.1
    true_weight: Annotated[
        Optional[float],
        Field(description="Fix the generating weight instead of drawing it"),
    ] = None
    path: Annotated[
        Optional[str], Field(description="CSV or dataset JSON path; BOSTON_CSV fills it for the housing table")
    ] = None
    has_header: Annotated[
        bool, Field(description="Whether the CSV starts with a header row")
    ] = False
    sha256: Annotated[
        Optional[str], Field(description="Expected SHA-256 of the CSV file")
    ] = None
    split_seed: Annotated[int, Field(description="Seed of the train/test shuffle")] = 0
    train_fraction: Annotated[
        float, Field(gt=0, le=1, description="Share of rows used for training")
    ] = 0.8

    @model_validator(mode="after")
    def validate_path(self) -> "DatasetSpec":
        if self.kind == DatasetKind.FILE and not self.path:
            raise ValueError("dataset kind 'file' requires a path")
        return self


class SolverOptions(BaseModel):
    """Numerical and behavioral knobs shared by the continuous tiers."""

    model_config = ConfigDict(extra="forbid")

    rise_fraction: Annotated[
        float, Field(ge=0, lt=1, description="Share of each hold spent on the ramp")
    ] = 0.005
    ramp_substeps: Annotated[
        int, Field(ge=1, description="RK4 substeps across each ramp (ct tier)")
    ] = 16
    circuit_ramp_substeps: Annotated[
        int, Field(ge=1, description="Node steps across each ramp (circuit tier)")
    ] = 4
    circuit_flat_substeps: Annotated[
        int, Field(ge=1, description="Node steps across each flat hold (circuit tier)")
    ] = 2
    device_substeps: Annotated[
        int, Field(ge=1, description="RK4 steps per hold (device tier)")
    ] = 256
    latch_delta: Annotated[
        bool,
        Field(description="Hold the error fixed per sample instead of recomputing it"),
    ] = False
    train_bias: Annotated[bool, Field(description="Learn a bias term")] = False
    gms_current_ratio: Annotated[
        float, Field(gt=0, description="Splitter geometric mean in units of Iu")
    ] = 1.0
    initial_cell_ratio: Annotated[
        float, Field(gt=0, description="Initial cell currents in units of Iu")
    ] = 0.01
    divergence_guard: Annotated[
        float, Field(gt=0, description="Largest admissible |w|")
    ] = 1e6
    current_min: Annotated[
        float, Field(gt=0, description="Lower edge of the monitored current window")
    ] = SUBTHRESHOLD_MIN
    current_max: Annotated[
        float, Field(gt=0, description="Upper edge of the monitored current window")
    ] = SUBTHRESHOLD_MAX
    strict_monitor: Annotated[
        bool, Field(description="Raise instead of counting window excursions")
    ] = False


class SweepSpec(BaseModel):
    """Grid of (alpha, lambda) cells; alpha is realized through the hold time."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    alphas: Annotated[List[float], Field(min_length=1)] = [1e-2, 1e-3, 1e-4]
    lambdas: Annotated[List[float], Field(min_length=1)] = [0.2, 0.1, 0.05]


class ExperimentConfig(BaseModel):
    """Complete, re-runnable description of an experiment."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    format_version: Literal[1] = CONFIG_FORMAT_VERSION
    name: Annotated[
        str,
        Field(
            min_length=1,
            max_length=64,
            pattern=r"^[A-Za-z0-9_.-]+$",
            description="Run name, used as output sub-directory",
        ),
    ] = "experiment"
    hyperparams: Hyperparams = Hyperparams(alpha=1e-3, lambda_=0.1)
    circuit: Annotated[
        CircuitParams, Field(description="Circuit used when circuit_mode is explicit")
    ] = CircuitParams()
    circuit_mode: Annotated[
        Literal["explicit", "solve"],
        Field(
            description="Use the circuit block as given, or solve it from the hyperparameters"
        ),
    ] = "explicit"
    bounds: CircuitBounds = CircuitBounds()
    dataset: DatasetSpec = DatasetSpec()
    tiers: Annotated[
        List[Tier], Field(min_length=1, description="Tiers to run")
    ] = [Tier.IDEAL, Tier.CIRCUIT]
    reference_tier: Tier = Tier.IDEAL
    solver: SolverOptions = SolverOptions()
    sweep: Optional[SweepSpec] = None
    output_dir: Optional[str] = None
    workers: Annotated[int, Field(ge=1, description="Parallel runs")] = 1

    @model_validator(mode="after")
    def validate_tiers(self) -> "ExperimentConfig":
        if len(set(self.tiers)) != len(self.tiers):
            raise ValueError("tiers must not repeat")
        if self.reference_tier not in self.tiers:
            raise ValueError("reference_tier must be one of the tiers")
        if Tier.DEVICE in self.tiers and self.solver.train_bias:
            raise ValueError("the device tier does not model the bias integrator")
        return self
