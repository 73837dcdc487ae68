"""interlock: interaction-risk analysis and coordination-node enforcement for pub/sub robot apps."""

__version__ = "0.1.0"
