"""kinetic-spectral 配置管理模块."""

import json
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing_extensions import Annotated

from .errors import ConfigError
from .galerkin import SolverMethod


class SpectralSettings(BaseSettings):
    """进程级数值配置, 从环境变量与 .env 读取."""

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=False,
        # .env files are often shared with unrelated tools
        extra="ignore",
    )

    kinetic_spectral_cache: Path = Field(
        default=Path(".spectral_cache"),
        description="谱表缓存目录"
    )
    kinetic_spectral_max_evaluations: int = Field(
        default=1_000_000,
        ge=1,
        description="单次积分的最大求值次数"
    )
    kinetic_spectral_resonance_tol: float = Field(
        default=1e-9,
        gt=0.0,
        description="共振判定的相对速率容差"
    )
    kinetic_spectral_term_cap: int = Field(
        default=100_000,
        ge=1,
        description="每个模态指数和的最大项数"
    )
    kinetic_spectral_rk_tol: float = Field(
        default=1e-10,
        gt=0.0,
        description="自适应Runge-Kutta容差"
    )
    kinetic_spectral_blowup_factor: float = Field(
        default=1e3,
        gt=1.0,
        description="发散保护倍数 (相对 ‖g0‖)"
    )
    kinetic_spectral_workers: int = Field(
        default=1,
        ge=1,
        description="构建谱表的进程数"
    )
    kinetic_spectral_log_level: str = Field(
        default="INFO",
        description="日志级别"
    )

    @field_validator("kinetic_spectral_log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level


def get_settings() -> SpectralSettings:
    """获取配置实例."""
    return SpectralSettings()


class SingleModeInit(BaseModel):
    """g0 = a·phi_n."""

    kind: Literal["single_mode"] = "single_mode"
    n: int = Field(ge=0)
    a: float

    @property
    def norm(self) -> Optional[float]:
        return abs(self.a)


class RandomDecayInit(BaseModel):
    """Seeded random coefficients with |a_n| ~ (n+1)^(-decay), rescaled to ``norm``."""

    kind: Literal["random_decay"] = "random_decay"
    norm: float = Field(ge=0.0)
    decay_exponent: float = 2.0


class FileInit(BaseModel):
    """JSON file holding ``{"coefficients": [...]}`` or a bare list."""

    kind: Literal["file"] = "file"
    path: Path

    @property
    def norm(self) -> Optional[float]:
        # known only once the file is read
        return None


InitialData = Annotated[
    Union[SingleModeInit, RandomDecayInit, FileInit], Field(discriminator="kind")
]


def parse_initial_data(text: str) -> Union[SingleModeInit, RandomDecayInit, FileInit]:
    """Parse ``single_mode:n:a``, ``random_decay:norm[:decay]`` or ``file:path``."""
    kind, _, rest = text.partition(":")
    parts = rest.split(":") if rest else []
    try:
        if kind == "single_mode" and len(parts) == 2:
            return SingleModeInit(n=int(parts[0]), a=float(parts[1]))
        if kind == "random_decay" and len(parts) in (1, 2):
            decay = float(parts[1]) if len(parts) == 2 else 2.0
            return RandomDecayInit(norm=float(parts[0]), decay_exponent=decay)
        if kind == "file" and rest:
            return FileInit(path=Path(rest))
    except (ValueError, ValidationError) as e:
        raise ConfigError(f"invalid --init value {text!r}: {e}")
    raise ConfigError(
        f"invalid --init value {text!r}; expected single_mode:n:a, "
        "random_decay:norm[:decay] or file:path"
    )


class RunConfig(BaseModel):
    """一次运行的完整配置."""

    s: float = Field(default=1.0, gt=0.0, le=2.0)
    N: int = Field(default=64, ge=2)
    tol: float = Field(default=1e-10, gt=0.0, lt=1.0)
    t_max: float = Field(default=5.0, gt=0.0)
    t_steps: int = Field(default=201, ge=2)
    method: SolverMethod = SolverMethod.EXPSUM
    seed: int = 0
    initial_data: InitialData = Field(default_factory=lambda: RandomDecayInit(norm=0.05))
    output_dir: Path = Path("out")

    epsilon_guard: float = Field(default=0.1, gt=0.0)
    allow_large_data: bool = False
    shubin_taus: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    young_samples: int = Field(default=10_000, ge=1)
    probe_samples: int = Field(default=2_000, ge=1)
    slack: float = Field(default=1e-6, ge=0.0)
    monotone_slack: float = Field(default=1e-9, ge=0.0)

    @field_validator("shubin_taus")
    @classmethod
    def validate_taus(cls, v: List[float]) -> List[float]:
        if any(tau < 0 for tau in v):
            raise ValueError("Shubin orders must be nonnegative")
        return v

    @model_validator(mode="after")
    def validate_initial_data(self) -> "RunConfig":
        init = self.initial_data
        if isinstance(init, SingleModeInit) and init.n > self.N:
            raise ValueError(f"single_mode index {init.n} exceeds N={self.N}")
        norm = init.norm
        if norm is not None and norm > self.epsilon_guard and not self.allow_large_data:
            raise ValueError(
                f"initial data norm {norm} exceeds the small-data guard "
                f"{self.epsilon_guard}; pass --allow-large-data to override"
            )
        return self

    @property
    def t_grid(self) -> npt.NDArray[np.float64]:
        return np.linspace(0.0, self.t_max, self.t_steps)

    @classmethod
    def from_json(cls, path: Path) -> "RunConfig":
        """从JSON文件加载配置."""
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"读取配置文件失败: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        return cls.model_validate(data)
