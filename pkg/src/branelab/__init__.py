"""Homogeneous Lagrangians for particles and branes: fields, flows, discrete actions and Clifford quantization."""

from .errors import (
    BoundaryError,
    BranelabError,
    ConfigError,
    DegenerateError,
    DimensionError,
    DomainError,
    GaugeError,
    IntegrationError,
    NumericalError,
    ScenarioError,
    SignatureError,
)

__version__ = "0.1.0"
