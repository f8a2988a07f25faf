"""Significant-factor identification by cross-validated, penalty-weighted prediction error."""
