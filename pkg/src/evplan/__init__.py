"""Equity-weighted planning of fixed and mobile EV charging stations."""
