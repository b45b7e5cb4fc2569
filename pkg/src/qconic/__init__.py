"""Exact rewriting engine for three-dimensional Q-conic bundle germs."""
from .errors import QConicError
from .germs import GermType, md_link, parse_tag
from .engine import Scenario, parse_scenario, standardize, gorensteinize, resolve_base

__all__ = ["QConicError", "GermType", "md_link", "parse_tag", "Scenario", "parse_scenario",
           "standardize", "gorensteinize", "resolve_base"]
__version__ = "0.1.0"
