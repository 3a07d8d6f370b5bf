import io
import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from api.errors import ConfigurationError, StructureParseError

log = logging.getLogger(__name__)


class Dataset:
    """
    Binary rows, one column per variable, stored as a uint8 matrix.
    Files are comma-separated 0/1 rows with an optional version header.
    """

    def __init__(self, rows: Union[np.ndarray, Sequence[Sequence[int]]], num_vars: int):
        try:
            matrix = np.asarray(rows, dtype=np.int64)
        except ValueError as e:
            raise StructureParseError(f"Rows are not a rectangular 0/1 table: {e}") from e
        if matrix.size == 0:
            matrix = np.zeros((0, num_vars), dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[1] != num_vars:
            raise StructureParseError(f"Rows of shape {matrix.shape} do not have {num_vars} values each")
        if matrix.size and not np.isin(matrix, (0, 1)).all():
            bad = int(np.argwhere(~np.isin(matrix, (0, 1)))[0][0])
            raise StructureParseError(f"Row {bad} holds a value other than 0 or 1")
        self.rows = matrix.astype(np.uint8)
        self.num_vars = num_vars

    def __len__(self):
        return self.rows.shape[0]

    def __eq__(self, other):
        return (isinstance(other, Dataset) and self.num_vars == other.num_vars
                and np.array_equal(self.rows, other.rows))

    def __repr__(self):
        return f"Dataset(rows={len(self)}, vars={self.num_vars})"

    def split(self, parts: int) -> List['Dataset']:
        """Horizontal partitions in row order; sizes differ by at most one."""
        if parts < 1:
            raise ConfigurationError(f"Cannot split into {parts} partitions")
        return [Dataset(chunk, self.num_vars) for chunk in np.array_split(self.rows, parts)]

    @classmethod
    def concat(cls, datasets: Sequence['Dataset']) -> 'Dataset':
        if not datasets:
            raise ConfigurationError("Nothing to concatenate")
        num_vars = datasets[0].num_vars
        if any(d.num_vars != num_vars for d in datasets):
            raise ConfigurationError("Datasets differ in variable count")
        return cls(np.vstack([d.rows for d in datasets]), num_vars)

    @classmethod
    def load(cls, path: Union[str, Path], num_vars: int = None) -> 'Dataset':
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise StructureParseError(f"Cannot read dataset {path}: {e}") from e
        lines = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
        if not lines:
            if num_vars is None:
                raise StructureParseError(f"Empty dataset {path} needs an explicit variable count")
            return cls([], num_vars)
        try:
            matrix = np.loadtxt(io.StringIO("\n".join(lines)), delimiter=",", dtype=np.int64, ndmin=2)
        except ValueError as e:
            raise StructureParseError(f"Malformed dataset {path}: {e}") from e
        if num_vars is not None and matrix.shape[1] != num_vars:
            raise StructureParseError(f"{path}: rows have {matrix.shape[1]} values, structure has {num_vars}")
        log.debug("Loaded %d rows from %s", matrix.shape[0], path)
        return cls(matrix, matrix.shape[1])
