"""Component-wise laboratory for PQC-based PPO agents on CartPole."""

__version__ = "0.1.0"
