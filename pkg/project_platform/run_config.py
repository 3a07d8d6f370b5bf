import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

import yaml

from api.errors import ConfigurationError
from mpc.arithmetic import ProtocolSession
from mpc.field import DEFAULT_PRIME, FieldParams
from mpc.fixed_point import FixedPointParams, ProtocolConfig
from mpc.sharing import SharingParams
from network.transport import IN_PROCESS, TransportConfig

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    """
    Every parameter of a run. Precedence: defaults < manifest file < flags.
    `threshold` None means floor((parties - 1) / 2).
    """

    prime: int = DEFAULT_PRIME
    scale_d: int = 256
    precision_e: int = 2 ** 16
    rho: int = 40
    warmup_iters: int = 16
    precision_iters: int = 16
    t_prec: int = 5
    k_err: int = 1
    parties: int = 5
    threshold: Optional[int] = None
    transport: str = IN_PROCESS
    latency_ms: float = 0.0
    endpoints: Dict[int, str] = field(default_factory=dict)
    seed: Optional[int] = None
    session_id: int = 1
    alice: int = 1
    bob: int = 2
    timeout: float = 30.0
    batching: bool = False
    laplace_alpha: int = 0
    debug_reconstruct: bool = False
    structure: Optional[str] = None
    data: List[str] = field(default_factory=list)
    out: Optional[str] = None

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def load(cls, path: Union[str, Path]) -> 'RunConfig':
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except OSError as e:
            raise ConfigurationError(f"Cannot read run configuration {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in {path}: {e}") from e
        return cls().merged(data, source=str(path))

    def save(self, path: Union[str, Path]):
        with open(path, 'w', encoding='utf-8') as f:
            yaml.safe_dump(asdict(self), f, sort_keys=False)

    def merged(self, overrides: Mapping[str, Any], source: str = "overrides") -> 'RunConfig':
        """Copy with the given non-None values applied."""
        unknown = sorted(set(overrides) - set(self.field_names()))
        if unknown:
            raise ConfigurationError(f"{source}: unknown setting(s) {unknown}")
        values = asdict(self)
        values.update({k: v for k, v in overrides.items() if v is not None})
        if isinstance(values["data"], str):
            values["data"] = [values["data"]]
        values["endpoints"] = {int(k): str(v) for k, v in (values["endpoints"] or {}).items()}
        return RunConfig(**values)

    @property
    def fixed_point(self) -> FixedPointParams:
        return FixedPointParams(d=self.scale_d, e=self.precision_e, rho=self.rho,
                                warmup_iters=self.warmup_iters, precision_iters=self.precision_iters,
                                t_prec=self.t_prec, k_err=self.k_err)

    def protocol(self) -> ProtocolConfig:
        field_params = FieldParams(self.prime)
        if self.threshold is None:
            sharing = SharingParams.with_default_degree(self.parties, field_params)
        else:
            sharing = SharingParams(self.parties, self.threshold, field_params)
        return ProtocolConfig(field_params, sharing, self.fixed_point)

    def protocol_session(self, config: Optional[ProtocolConfig] = None) -> ProtocolSession:
        config = config or self.protocol()
        return ProtocolSession(self.session_id, config.sharing, config.fixed_point, self.alice, self.bob)

    def transport_config(self) -> TransportConfig:
        return TransportConfig(mode=self.transport, latency=self.latency_ms / 1000.0, endpoints=self.endpoints)
