"""
Run configuration: the superlattice, the number of periods, the band and the
sweep grid, loaded from JSON and validated with pydantic.
"""
import json
import os
from typing import List, Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from bandService import EnergyScan
from potentialModel import (
    GAAS_BARRIER_EV,
    GAAS_BARRIER_NM,
    GAAS_MASS_RATIO,
    GAAS_PERIODS,
    GAAS_TEMPERATURE_K,
    GAAS_WELL_NM,
    Layer,
    UnitCell,
)
from tunnelingErrors import ConfigNotFoundError, ConfigValidationError


class LayerConfig(BaseModel):
    width_nm: float = Field(gt=0, description="Layer width in nm")
    potential_ev: float = Field(default=0.0, description="Conduction-band offset of the layer in eV")


def _gaas_layers() -> List[LayerConfig]:
    return [
        LayerConfig(width_nm=GAAS_BARRIER_NM, potential_ev=GAAS_BARRIER_EV),
        LayerConfig(width_nm=GAAS_WELL_NM, potential_ev=0.0),
    ]


class CellConfig(BaseModel):
    layers: List[LayerConfig] = Field(
        default_factory=_gaas_layers,
        min_length=1,
        description="Layers of one period, left to right",
    )
    effective_mass_ratio: float = Field(default=GAAS_MASS_RATIO, gt=0, description="m*/m0, common to all layers")

    def to_unit_cell(self) -> UnitCell:
        return UnitCell(
            layers=tuple(Layer(layer.width_nm, layer.potential_ev) for layer in self.layers),
            effective_mass_ratio=self.effective_mass_ratio,
        )


class ScanConfig(BaseModel):
    e_min_ev: float = Field(default=1e-6, gt=0, description="Start of the band search in eV")
    e_max_ev: float = Field(default=1.0, gt=0, description="End of the band search in eV")
    e_step_ev: float = Field(default=1e-4, gt=0, description="Band search step in eV")

    @model_validator(mode="after")
    def check_range(self) -> "ScanConfig":
        if self.e_max_ev <= self.e_min_ev:
            raise ValueError("e_max_ev must exceed e_min_ev")
        return self

    def to_energy_scan(self) -> EnergyScan:
        return EnergyScan(self.e_min_ev, self.e_max_ev, self.e_step_ev)


class SweepRangeConfig(BaseModel):
    """Sweep grid; unset bounds default to the band edges (or q in [0, pi/d])."""
    parameterize: Literal["energy", "q"] = Field(default="energy", description="Sweep variable")
    e_min_ev: Optional[float] = Field(default=None, gt=0)
    e_max_ev: Optional[float] = Field(default=None, gt=0)
    e_step_ev: Optional[float] = Field(default=None, gt=0)
    q_min_per_nm: Optional[float] = Field(default=None, ge=0)
    q_max_per_nm: Optional[float] = Field(default=None, gt=0)
    q_step_per_nm: Optional[float] = Field(default=None, gt=0)
    points: int = Field(default=401, ge=2, description="Grid size when no step is given")
    include_resonances: bool = Field(default=True, description="Merge the n-1 resonance energies into the grid")

    @model_validator(mode="after")
    def check_ranges(self) -> "SweepRangeConfig":
        if self.e_min_ev is not None and self.e_max_ev is not None and self.e_max_ev <= self.e_min_ev:
            raise ValueError("e_max_ev must exceed e_min_ev")
        if self.q_min_per_nm is not None and self.q_max_per_nm is not None and self.q_max_per_nm <= self.q_min_per_nm:
            raise ValueError("q_max_per_nm must exceed q_min_per_nm")
        return self


class OutputConfig(BaseModel):
    sweep_csv: Optional[str] = Field(default=None, description="Sweep table path, stdout when unset")
    resonances_csv: Optional[str] = Field(default=None)
    wavefunction_csv: Optional[str] = Field(default=None)
    samples_per_layer: int = Field(default=64, ge=1)


class ToleranceConfig(BaseModel):
    determinant: float = Field(default=1e-12, gt=0)
    chebyshev: float = Field(default=1e-9, gt=0)
    resonance_transmission: float = Field(default=1e-10, gt=0)
    resonance_amplitude: float = Field(default=1e-8, gt=0)
    dwell_time: float = Field(default=1e-8, gt=0)
    tau_te_imaginary: float = Field(default=1e-5, gt=0)
    tau_tv: float = Field(default=1e-4, gt=0)
    velocity: float = Field(default=1e-7, gt=0)
    bound_equality: float = Field(default=1e-9, gt=0)
    tilde_alpha: float = Field(default=1e-10, gt=0)
    band_edge_alpha: float = Field(default=1e-5, gt=0)
    cross_terms: float = Field(default=1e-8, gt=0)
    current: float = Field(default=1e-8, gt=0)


class SweepConfig(BaseModel):
    cell: CellConfig = Field(default_factory=CellConfig)
    n: int = Field(default=GAAS_PERIODS, ge=2, description="Number of periods")
    band_index: int = Field(default=1, ge=1)
    scan: ScanConfig = Field(default_factory=ScanConfig)
    sweep: SweepRangeConfig = Field(default_factory=SweepRangeConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    workers: int = Field(default=1, ge=1)
    temperature_k: float = Field(default=GAAS_TEMPERATURE_K, ge=0, description="Recorded only; the model is at T = 0")

    def unit_cell(self) -> UnitCell:
        return self.cell.to_unit_cell()

    def energy_scan(self) -> EnergyScan:
        return self.scan.to_energy_scan()


def _field_paths(error: ValidationError) -> List[str]:
    return [".".join(str(part) for part in item["loc"]) or "<root>" for item in error.errors()]


def parse_config(data: dict, source: str = "<dict>") -> SweepConfig:
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        paths = _field_paths(e)
        details = "; ".join(
            f"{path}: {item['msg']}" for path, item in zip(paths, e.errors())
        )
        raise ConfigValidationError(f"invalid config '{source}': {details}", paths) from e


def load_config(path: Optional[str] = None) -> SweepConfig:
    """
    Load a JSON run configuration.

    Args:
        path (str, optional): JSON file; None gives the GaAs/AlGaAs defaults

    Returns:
        SweepConfig: validated configuration
    """
    if path is None:
        return SweepConfig()
    if not os.path.exists(path):
        raise ConfigNotFoundError(f"config file '{path}' not found")
    with open(path, "r", encoding="utf-8") as file:
        try:
            data = json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigValidationError(
                f"invalid JSON in '{path}' at line {e.lineno} column {e.colno}: {e.msg}"
            ) from e
    if not isinstance(data, dict):
        raise ConfigValidationError(f"config '{path}' must hold a JSON object", ["<root>"])
    return parse_config(data, path)
