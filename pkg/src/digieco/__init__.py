"""Digital ecosystem simulator: PAN configuration, interface selection and gossip."""

__version__ = "0.1.0"
