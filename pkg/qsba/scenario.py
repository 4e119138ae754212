"""
QSBA Scenario Module

Scenario files are TOML documents validated by pydantic models before any
run. A bundled preset name is accepted wherever a scenario path is.

Example::

    [protocol]
    n = 5
    m = 2
    l = 54

    [message]
    hex = "41545441434b"

    [adversary]
    controlled = [0]
    strategy = "equivocate"
"""

import tomllib
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationError, field_validator, model_validator

from .adversary import STRATEGIES, AdversaryStrategy, build_strategy
from .errors import InvalidParamsError, InvalidScenarioError
from .gf2hash import BitString
from .keystore import PoolCapacities, derive_rng
from .ledger import AuthCostModel
from .logging_utils import get_logger
from .protocol import DedupMode, ProtocolParams

logger = get_logger("qsba.scenario")

PRESET_PACKAGE = "qsba.scenarios"


def _hex_bits(value: str) -> BitString:
    try:
        return BitString.from_hex(value)
    except ValueError as e:
        raise ValueError(f"not a hex string: {value!r}") from e


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProtocolSection(_Section):
    n: int = Field(..., ge=3, le=255)
    m: int = Field(..., ge=1)
    l: int = Field(..., ge=2, le=0xFFFF)
    default_command: str = Field(default="00", description="Hex-encoded fallback command")
    dedup: DedupMode = DedupMode.MESSAGE

    @field_validator("default_command")
    @classmethod
    def _check_hex(cls, v: str) -> str:
        _hex_bits(v)
        return v


class MessageSection(_Section):
    """Exactly one of ``hex``, ``file`` or ``random_bytes``."""

    hex: Optional[str] = None
    file: Optional[str] = None
    random_bytes: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _exactly_one(self) -> "MessageSection":
        given = [k for k in ("hex", "file", "random_bytes") if getattr(self, k) is not None]
        if len(given) != 1:
            raise ValueError(f"message needs exactly one of hex, file, random_bytes; got {given or 'none'}")
        if self.hex is not None:
            _hex_bits(self.hex)
        return self


class RunSection(_Section):
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    auth_cost: AuthCostModel = AuthCostModel.AXIOMATIC


class AdversarySection(_Section):
    controlled: List[int] = Field(default_factory=list)
    strategy: str = "passive"
    params: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("strategy")
    @classmethod
    def _known_strategy(cls, v: str) -> str:
        if v not in STRATEGIES:
            raise ValueError(f"unknown strategy {v!r}; known: {', '.join(sorted(STRATEGIES))}")
        return v


class PoolsSection(_Section):
    commander_lieutenant: int = Field(default=PoolCapacities.commander_lieutenant, ge=0)
    lieutenant_lieutenant: int = Field(default=PoolCapacities.lieutenant_lieutenant, ge=0)


class ReportSection(_Section):
    out_dir: Optional[str] = None
    report_name: Optional[str] = None
    transcript_name: Optional[str] = None


class ScenarioConfig(_Section):
    """A complete, validated scenario."""

    name: str = "custom"
    protocol: ProtocolSection
    message: MessageSection
    run: RunSection = Field(default_factory=RunSection)
    adversary: AdversarySection = Field(default_factory=AdversarySection)
    pools: PoolsSection = Field(default_factory=PoolsSection)
    report: ReportSection = Field(default_factory=ReportSection)

    _base_dir: Path = PrivateAttr(default_factory=Path.cwd)

    @model_validator(mode="after")
    def _check_consistency(self) -> "ScenarioConfig":
        try:
            self.params()
        except InvalidParamsError as e:
            raise ValueError(str(e)) from e
        controlled = self.adversary.controlled
        if len(set(controlled)) != len(controlled):
            raise ValueError("adversary.controlled lists a node twice")
        if any(not 0 <= c < self.protocol.n for c in controlled):
            raise ValueError(f"adversary.controlled must name nodes 0..{self.protocol.n - 1}")
        if len(controlled) > self.protocol.m:
            raise ValueError(f"{len(controlled)} controlled nodes exceed m={self.protocol.m}")
        return self

    def params(self) -> ProtocolParams:
        p = self.protocol
        return ProtocolParams(p.n, p.m, p.l, _hex_bits(p.default_command), p.dedup)

    def message_path(self) -> Optional[Path]:
        if self.message.file is None:
            return None
        path = Path(self.message.file)
        return path if path.is_absolute() else self._base_dir / path

    def command(self) -> BitString:
        """The commander's message; file paths resolve against the scenario's directory."""
        msg = self.message
        if msg.hex is not None:
            return _hex_bits(msg.hex)
        if msg.file is not None:
            path = self.message_path()
            try:
                return BitString.from_bytes(path.read_bytes())
            except OSError as e:
                raise InvalidScenarioError(
                    f"cannot read message file {str(path)!r}", [f"message.file: {e.strerror or e}"]
                ) from e
        return BitString.from_bytes(derive_rng(self.run.seed, 4).bytes(msg.random_bytes))

    def pool_capacities(self) -> PoolCapacities:
        return PoolCapacities(self.pools.commander_lieutenant, self.pools.lieutenant_lieutenant)

    def adversary_strategy(self) -> Optional[AdversaryStrategy]:
        if not self.adversary.controlled:
            return None
        return build_strategy(self.adversary.strategy, self.adversary.controlled, self.adversary.params)


def preset_names() -> List[str]:
    return sorted(
        p.name[: -len(".toml")]
        for p in resources.files(PRESET_PACKAGE).iterdir()
        if p.name.endswith(".toml")
    )


def parse_scenario(data: Dict[str, Any], base_dir: Optional[Path] = None) -> ScenarioConfig:
    """
    Validate a scenario mapping.

    Raises:
        InvalidScenarioError: With one entry per failing field
    """
    try:
        scenario = ScenarioConfig.model_validate(data)
    except ValidationError as e:
        errors = [f"{'.'.join(str(loc) for loc in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()]
        logger.error("scenario_invalid", errors=errors)
        raise InvalidScenarioError(f"Validation errors: {'; '.join(errors)}", errors) from e
    if base_dir is not None:
        scenario._base_dir = base_dir
    message_path = scenario.message_path()
    if message_path is not None and not message_path.is_file():
        errors = [f"message.file: no such file {str(message_path)!r}"]
        logger.error("scenario_invalid", errors=errors)
        raise InvalidScenarioError(f"Validation errors: {errors[0]}", errors)
    return scenario


def load_scenario(path_or_preset: Union[str, Path]) -> ScenarioConfig:
    """
    Load a scenario file, or a bundled preset by name.

    Raises:
        InvalidScenarioError: If the file is missing, not TOML, or invalid
    """
    path = Path(path_or_preset)
    if path.is_file():
        text, base_dir, name = path.read_text(encoding="utf-8"), path.resolve().parent, path.stem
    elif str(path_or_preset) in preset_names():
        name = str(path_or_preset)
        text = resources.files(PRESET_PACKAGE).joinpath(f"{name}.toml").read_text(encoding="utf-8")
        base_dir = Path.cwd()
    else:
        raise InvalidScenarioError(
            f"no scenario file or preset named {str(path_or_preset)!r}",
            [f"known presets: {', '.join(preset_names())}"],
        )

    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise InvalidScenarioError(f"scenario {name} is not valid TOML: {e}", [str(e)]) from e
    data.setdefault("name", name)
    scenario = parse_scenario(data, base_dir)
    logger.debug("scenario_loaded", name=scenario.name, n=scenario.protocol.n, m=scenario.protocol.m)
    return scenario
