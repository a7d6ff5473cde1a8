"""Coupon collecting from a mixture of uniform coupon groups."""

__version__ = "0.1.0"
