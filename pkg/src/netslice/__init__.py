"""Slicing of a shared uplink between eMBB, URLLC and mMTC services."""
from .config import ConfigError, ScenarioConfig, load_config, parse_config
from .core import McPlan, SearchBracket
from .region import RegionCurve, Scheme

__all__ = ["ConfigError", "McPlan", "RegionCurve", "Scheme", "ScenarioConfig", "SearchBracket",
           "load_config", "parse_config"]
