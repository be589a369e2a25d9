"""Toolkit for turning natural-language decision descriptions into
temporal logic, compiling the convertible formulas into utility-bearing
production rules, and training the resulting cognitive agent against
reference behavior."""

__version__ = "0.1.0"
