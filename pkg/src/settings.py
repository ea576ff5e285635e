from pathlib import Path
from typing import Literal

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    FilePath,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from src import constants


class Tolerances(BaseModel):
    """Acceptance thresholds, one per class of check.

    Each differentiation level costs roughly an order of magnitude of
    accuracy, so curvature checks are looser than first-order ones.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    compatibility: PositiveFloat = constants.TOL_COMPATIBILITY
    first_order: PositiveFloat = constants.TOL_FIRST_ORDER
    curvature: PositiveFloat = constants.TOL_CURVATURE
    exact: PositiveFloat = constants.TOL_EXACT
    koszul: PositiveFloat = constants.TOL_KOSZUL
    fd_christoffel: PositiveFloat = constants.TOL_FD_CHRISTOFFEL
    fd_riemann: PositiveFloat = constants.TOL_FD_RIEMANN
    reference: PositiveFloat = constants.TOL_REFERENCE
    standing_assumption: PositiveFloat = constants.TOL_STANDING_ASSUMPTION
    einstein: PositiveFloat = constants.TOL_EINSTEIN


class RunConfig(BaseModel):
    """Resolved configuration of one verifier run.

    Settings are immutable per run and built from CLI arguments, an optional
    YAML file and defaults, in that order of priority.
    """

    model_config = ConfigDict(frozen=True)

    # Model source, exactly one of the two
    model_path: FilePath | None = None
    builtin: Literal["example25", "flat3"] | None = None

    points: PositiveInt = constants.DEFAULT_POINTS
    seed: int = Field(default=constants.DEFAULT_SEED, ge=0, lt=2**64)
    tolerances: Tolerances = Tolerances()
    output_format: Literal["text", "json"] = "text"
    at: list[float] | None = None
    workers: PositiveInt = 1

    @model_validator(mode="after")
    def _one_model_source(self):
        if (self.model_path is None) == (self.builtin is None):
            raise ValueError("exactly one of model_path and builtin must be given")
        return self

    @property
    def model_label(self) -> str:
        if self.builtin is not None:
            return self.builtin
        return Path(self.model_path).name
