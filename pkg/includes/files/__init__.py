"""File formats: CSV matrices, JSON manifests and reports, BSPC1 containers."""
