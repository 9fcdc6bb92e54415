"""谱表缓存管理模块."""

import json
import logging
from pathlib import Path
from typing import Optional

from pydantic import ValidationError

from .config import SpectralSettings
from .errors import InvariantViolation
from .kernel import CollisionKernel
from .spectrum import SpectralTable, build_table, check_table

logger = logging.getLogger(__name__)


class SpectralCache:
    """管理谱表缓存目录的生命周期."""

    def __init__(self, settings: SpectralSettings):
        self.settings = settings
        self._directory: Optional[Path] = None

    def open(self) -> None:
        """创建并打开缓存目录."""
        directory = Path(self.settings.kinetic_spectral_cache)
        try:
            directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise RuntimeError(f"打开缓存目录失败: {e}")
        self._directory = directory

    def close(self) -> None:
        """关闭缓存."""
        self._directory = None

    def __enter__(self) -> "SpectralCache":
        self.open()
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    @property
    def directory(self) -> Path:
        """获取缓存目录."""
        if self._directory is None:
            raise RuntimeError("缓存未打开")
        return self._directory

    def path_for(self, s: float, N: int, tol: float, coupling_order: int) -> Path:
        """Cache file for the key (s, N, tol, coupling order)."""
        return self.directory / f"table_s{s!r}_N{N}_tol{tol!r}_M{coupling_order}.json"

    def load(
        self, s: float, N: int, tol: float, coupling_order: int
    ) -> Optional[SpectralTable]:
        """读取缓存的谱表; 文件缺失或损坏时返回None."""
        path = self.path_for(s, N, tol, coupling_order)
        if not path.exists():
            logger.info("cache miss: %s", path.name)
            return None
        try:
            table = SpectralTable.from_document(json.loads(path.read_text(encoding="utf-8")))
            check_table(table)
        except (ValueError, KeyError, TypeError, ValidationError, InvariantViolation) as e:
            logger.warning("discarding unreadable cache file %s: %s", path, e)
            return None
        logger.info("cache hit: %s", path.name)
        return table

    def store(self, table: SpectralTable) -> Path:
        """写入谱表."""
        path = self.path_for(table.s, table.N, table.tol, table.coupling_order)
        try:
            path.write_text(json.dumps(table.to_document(), indent=1) + "\n", encoding="utf-8")
        except OSError as e:
            raise RuntimeError(f"写入缓存失败: {e}")
        logger.info("stored spectral table at %s", path)
        return path

    def get_or_build(
        self,
        kernel: CollisionKernel,
        N: int,
        tol: float,
        coupling_order: Optional[int] = None,
    ) -> SpectralTable:
        """Return the cached table for the key, building and storing it on a miss."""
        order = N if coupling_order is None else coupling_order
        table = self.load(kernel.s, N, tol, order)
        if table is None:
            table = build_table(
                kernel,
                N,
                tol=tol,
                coupling_order=order,
                workers=self.settings.kinetic_spectral_workers,
                max_evaluations=self.settings.kinetic_spectral_max_evaluations,
            )
            self.store(table)
        return table
