"""QECOOL online surface-code decoder simulator."""
