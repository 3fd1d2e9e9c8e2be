"""Mittag-Leffler order monotonicity and fractional-order recovery."""
