"""
Configuration d'une étude : fichier INI ([cost], [kernel], [bridge], [study], [output])
validé par des modèles pydantic
"""

import configparser
import os
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.cost.functions import CostFamily
from src.permanent.exact import DEFAULT_CAP, PermanentMethod
from src.utils.errors import ConfigError


def _split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"variable d'environnement {name} non entière: {raw!r}")


class Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CostBlock(Block):
    family: CostFamily
    params: List[float] = Field(default_factory=list)
    table_path: Optional[str] = None
    expression: Optional[str] = None
    grid_size: int = Field(50, ge=2)
    check_tol: float = Field(1e-12, gt=0)

    split_params = field_validator("params", mode="before")(_split_list)

    @model_validator(mode="after")
    def family_inputs(self) -> "CostBlock":
        if self.family is CostFamily.TABULATED and not self.table_path:
            raise ValueError("la famille tabulated demande table_path")
        if self.family is CostFamily.EXPRESSION and not self.expression:
            raise ValueError("la famille custom-expression demande expression")
        return self


class KernelBlock(Block):
    kind: Literal["constant", "cosine", "tabulated"]
    epsilon: float = Field(0.5, ge=0.0, lt=1.0)
    table_path: Optional[str] = None

    @model_validator(mode="after")
    def table_for_tabulated(self) -> "KernelBlock":
        if self.kind == "tabulated" and not self.table_path:
            raise ValueError("le noyau tabulated demande table_path")
        return self


class BridgeBlock(Block):
    m: int = Field(400, ge=8)
    tol: float = Field(1e-10, gt=0)
    max_iter: int = Field(5000, ge=1)
    damping: float = Field(1.0, gt=0.0, le=1.0)
    exponent_bound: float = Field(700.0, gt=0)


class StudyBlock(Block):
    n_list: List[int] = Field(default_factory=lambda: [8, 12, 16])
    permanent_cap: int = Field(default_factory=lambda: _env_int("PERMLIM_PERMANENT_CAP", DEFAULT_CAP), ge=1)
    permanent_method: PermanentMethod = PermanentMethod.GLYNN
    balance_tol: float = Field(1e-12, gt=0)
    balance_max_iter: int = Field(500, ge=1)
    nystrom_m: int = Field(256, ge=32)
    eig_cutoff: float = Field(1e-12, ge=0)
    refinement_tol: float = Field(1e-5, gt=0)
    workers: int = Field(default_factory=lambda: _env_int("PERMLIM_WORKERS", 1), ge=1)
    permanent_workers: int = Field(1, ge=1)

    split_n_list = field_validator("n_list", mode="before")(_split_list)

    @field_validator("n_list")
    @classmethod
    def strictly_increasing(cls, value: List[int]) -> List[int]:
        if not value:
            raise ValueError("n_list vide")
        if value[0] < 1:
            raise ValueError("n_list doit contenir des entiers ≥ 1")
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"n_list doit être strictement croissante: {value}")
        return value


class OutputBlock(Block):
    csv_path: str = "data/results/converge.csv"
    balance_csv: str = "data/results/balance_study.csv"
    potential_csv: str = "data/results/potential.csv"
    eigen_dump: bool = False


class RunConfig(Block):
    cost: Optional[CostBlock] = None
    kernel: Optional[KernelBlock] = None
    bridge: BridgeBlock = Field(default_factory=BridgeBlock)
    study: StudyBlock = Field(default_factory=StudyBlock)
    output: OutputBlock = Field(default_factory=OutputBlock)

    @model_validator(mode="after")
    def single_source(self) -> "RunConfig":
        if self.cost is not None and self.kernel is not None:
            raise ValueError("[cost] et [kernel] sont exclusifs : un seul bloc source")
        return self

    def require_cost(self) -> CostBlock:
        if self.cost is None:
            raise ConfigError("bloc [cost] manquant dans la configuration")
        return self.cost


def parse_run_config(sections: Dict[str, Dict[str, str]]) -> RunConfig:
    """Valide des sections déjà lues ; les erreurs nomment le bloc fautif"""
    try:
        return RunConfig.model_validate(sections)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            loc = [str(part) for part in err["loc"]]
            where = f"[{loc[0]}]" if loc else "[config]"
            if len(loc) > 1:
                where += " " + ".".join(loc[1:])
            problems.append(f"bloc {where}: {err['msg']}")
        raise ConfigError("; ".join(problems)) from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"fichier de configuration introuvable: {path}")

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: INI mal formé ({e})") from e

    sections = {name: dict(parser.items(name)) for name in parser.sections()}
    return parse_run_config(sections)
