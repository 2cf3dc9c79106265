"""Exact clearing engine for exchange-club kidney markets."""

__version__ = "0.1.0"
